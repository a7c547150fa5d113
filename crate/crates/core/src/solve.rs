//! Scalar root finding and 1-D maximization.
//!
//! Roots use bisection only: every function handed to [`bisect`] in this
//! crate is monotone on its bracket, so robustness wins over iteration count.
//! Maximization seeds golden-section refinement with a coarse scan.

/// Golden ratio conjugate.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on `[lo, hi]`; requires `f(lo)` and `f(hi)` of opposite sign
/// (either may be zero). Runs until the bracket is narrower than `xtol` or
/// `|f(mid)| <= ftol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64, ftol: f64) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        flo.signum() != fhi.signum(),
        "bisect needs a sign change on the bracket"
    );
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= ftol || (hi - lo).abs() <= xtol {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximization of `f` on `[lo, hi]` to bracket width `xtol`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > xtol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Maximizes `f` over `(0, hi]` with an `n`-point uniform scan followed by
/// golden-section refinement around the best sample. Returns `(argmax, max)`.
pub fn max_scan_unit<F: Fn(f64) -> f64>(f: &F, hi: f64, n: usize) -> (f64, f64) {
    let step = hi / n as f64;
    let mut best_i = 1;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=n {
        let v = f(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = ((best_i - 1) as f64 * step).max(step * 1e-6);
    let up = ((best_i + 1) as f64 * step).min(hi);
    let (x, v) = golden_max(f, lo, up, 1e-13);
    if v >= best {
        (x, v)
    } else {
        (best_i as f64 * step, best)
    }
}

/// Maximizes `f` over `(0, hi]` with a combined log-spaced and uniform scan,
/// then golden-section refinement. Log spacing covers maximizers that sit
/// many orders of magnitude below `hi`.
pub fn max_scan_log<F: Fn(f64) -> f64>(f: &F, hi: f64, n: usize) -> (f64, f64) {
    let mut samples: Vec<f64> = Vec::with_capacity(2 * n + 1);
    for i in 0..=n {
        // hi * 10^(-14 .. 0)
        samples.push(hi * 10f64.powf(-14.0 * (1.0 - i as f64 / n as f64)));
    }
    for i in 1..=n {
        samples.push(hi * i as f64 / n as f64);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &x) in samples.iter().enumerate() {
        let v = f(x);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 {
        samples[0] * 0.5
    } else {
        samples[best_i - 1]
    };
    let up = if best_i + 1 == samples.len() {
        hi
    } else {
        samples[best_i + 1]
    };
    let (x, v) = golden_max(f, lo, up, (up - lo) * 1e-12 + 1e-300);
    if v >= best {
        (x, v)
    } else {
        (samples[best_i], best)
    }
}
