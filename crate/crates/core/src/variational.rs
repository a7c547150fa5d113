//! The variational objective `F`, its gradient, the fixed-point map `H`, and
//! maximization yielding matching rates.
//!
//! The asymptotic matching rate of a model is `eta = 1 - max F` over
//! `t in [0,1]^2`, where
//!
//! ```text
//! F(t1, t2) = sum_x p[x] exp(-sum_y c[x][y] q[y] e^{-M[y] t[y]})
//!           + sum_y q[y] e^{-M[y] t[y]} (1 + M[y] t[y]) - 1.
//! ```
//!
//! Maximizers of `F` are fixed points of the map `H`, so maximization runs a
//! fixed-point iteration from `t = (1,1)` (the stochastically largest
//! initialization, which converges to the maximizing fixed point) together
//! with a dense grid scan as a fallback, then refines.

use crate::model::{derive_model, FlexScenario, ModelError, ModelSpec};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("fixed-point iteration failed to converge and the grid fallback is disabled")]
    NoConvergence,
    #[error("eta_ts = 0 (empty graph): the advantage ratio is undefined")]
    DegenerateRatio,
}

/// Evaluates `F` at `(t1, t2)`.
///
/// The formula is evaluated as written, so callers running domain-extension
/// arguments may pass any real `t`; the maximization domain is `[0,1]^2`.
pub fn eval_f(m: &ModelSpec, t1: f64, t2: f64) -> f64 {
    let ey = [(-m.big_m[0] * t1).exp(), (-m.big_m[1] * t2).exp()];
    let mut total = -1.0;
    for x in 0..2 {
        let inner = m.c.c[x][0] * m.q[0] * ey[0] + m.c.c[x][1] * m.q[1] * ey[1];
        total += m.p[x] * (-inner).exp();
    }
    total += m.q[0] * ey[0] * (1.0 + m.big_m[0] * t1);
    total += m.q[1] * ey[1] * (1.0 + m.big_m[1] * t2);
    total
}

/// The fixed-point map `H`; component `y` is
/// `sum_x a_right[y][x] exp(-sum_y' c[x][y'] q[y'] e^{-M[y'] t[y']})`.
/// Degenerate rows (`M[y] = 0`) map to 0.
pub fn h_map(m: &ModelSpec, t1: f64, t2: f64) -> (f64, f64) {
    let ey = [(-m.big_m[0] * t1).exp(), (-m.big_m[1] * t2).exp()];
    let mut ex = [0.0; 2];
    for x in 0..2 {
        let inner = m.c.c[x][0] * m.q[0] * ey[0] + m.c.c[x][1] * m.q[1] * ey[1];
        ex[x] = (-inner).exp();
    }
    let mut h = [0.0; 2];
    for y in 0..2 {
        if !m.right_degenerate[y] {
            h[y] = (m.c.c[0][y] * m.p[0] * ex[0] + m.c.c[1][y] * m.p[1] * ex[1]) / m.big_m[y];
        }
    }
    (h[0], h[1])
}

/// Gradient of `F`: component `y` equals
/// `q[y] M[y]^2 e^{-M[y] t[y]} (H_y(t) - t[y])`.
pub fn grad_f(m: &ModelSpec, t1: f64, t2: f64) -> (f64, f64) {
    let t = [t1, t2];
    let ey = [(-m.big_m[0] * t1).exp(), (-m.big_m[1] * t2).exp()];
    let mut ex = [0.0; 2];
    for x in 0..2 {
        let inner = m.c.c[x][0] * m.q[0] * ey[0] + m.c.c[x][1] * m.q[1] * ey[1];
        ex[x] = (-inner).exp();
    }
    let mut g = [0.0; 2];
    for y in 0..2 {
        // M[y] a_right[y][x] = c[x][y] p[x], so the degenerate case lands on 0.
        let flow = m.c.c[0][y] * m.p[0] * ex[0] + m.c.c[1][y] * m.p[1] * ex[1];
        g[y] = m.q[y] * m.big_m[y] * ey[y] * (flow - m.big_m[y] * t[y]);
    }
    (g[0], g[1])
}

/// How a maximizer was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Best grid point; fixed-point refinement did not converge or lost.
    GridOnly,
    /// Converged fixed-point iterate (residual at or below `fp_tol`).
    FixedPointRefined,
}

/// Result of maximizing `F`.
#[derive(Debug, Clone)]
pub struct MaximizerResult {
    pub t_star: (f64, f64),
    pub f_star: f64,
    /// Matching rate `1 - f_star`.
    pub eta: f64,
    pub method: SolveMethod,
    /// Total fixed-point iterations spent across starts and refinement.
    pub iterations: usize,
    /// `max(|H(t*) - t*|)` at the returned point.
    pub residual: f64,
}

/// Knobs for [`maximize_f`]. `grid_n = None` disables the grid fallback, in
/// which case the solver can fail with [`VariationalError::NoConvergence`].
#[derive(Debug, Clone, Copy)]
pub struct MaximizeOptions {
    pub grid_n: Option<usize>,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            grid_n: Some(401),
            fp_tol: 1e-13,
            fp_max_iter: 20_000,
        }
    }
}

struct FpOutcome {
    t: (f64, f64),
    iterations: usize,
    converged: bool,
}

/// Damped fixed-point iteration of `H`. Full steps until the residual
/// increases twice in a row, then a 0.5 damping factor (H is not proven
/// contractive).
fn fixed_point(m: &ModelSpec, start: (f64, f64), tol: f64, max_iter: usize) -> FpOutcome {
    let mut t = start;
    let mut damping = 1.0;
    let mut prev_res = f64::INFINITY;
    let mut increases = 0;
    for k in 1..=max_iter {
        let h = h_map(m, t.0, t.1);
        let res = (h.0 - t.0).abs().max((h.1 - t.1).abs());
        if res <= tol {
            return FpOutcome {
                t: h,
                iterations: k,
                converged: true,
            };
        }
        if res > prev_res {
            increases += 1;
            if increases >= 2 {
                damping = 0.5;
            }
        } else {
            increases = 0;
        }
        t = (t.0 + damping * (h.0 - t.0), t.1 + damping * (h.1 - t.1));
        prev_res = res;
    }
    FpOutcome {
        t,
        iterations: max_iter,
        converged: false,
    }
}

/// Tie threshold for comparing candidate objective values.
const TIE_EPS: f64 = 1e-12;

/// Returns true when candidate `a` beats `b`: strictly larger `F`, or equal
/// within `TIE_EPS` and componentwise-largest `t` (the largest-fixed-point
/// selection rule).
fn beats(a_f: f64, a_t: (f64, f64), b_f: f64, b_t: (f64, f64)) -> bool {
    if a_f > b_f + TIE_EPS {
        return true;
    }
    if a_f < b_f - TIE_EPS {
        return false;
    }
    a_t.0 >= b_t.0 - 1e-15
        && a_t.1 >= b_t.1 - 1e-15
        && (a_t.0 > b_t.0 + 1e-15 || a_t.1 > b_t.1 + 1e-15)
}

/// Grid scan of `F` on an `n x n` lattice over `[0,1]^2`.
///
/// `F` factorizes across axes: with `ey1 = e^{-M1 t1}`, `ey2 = e^{-M2 t2}`,
/// `exp(-c q ey1 - c q ey2) = A(t1) B(t2)`, so the scan precomputes per-axis
/// arrays and the inner loop is two multiplications per cell.
fn grid_scan(m: &ModelSpec, n: usize) -> ((f64, f64), f64) {
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut a1 = vec![0.0; n]; // exp(-c00 q0 ey1)
    let mut a2 = vec![0.0; n]; // exp(-c10 q0 ey1)
    let mut s1 = vec![0.0; n]; // q0 ey1 (1 + M0 t1)
    let mut b1 = vec![0.0; n]; // exp(-c01 q1 ey2)
    let mut b2 = vec![0.0; n]; // exp(-c11 q1 ey2)
    let mut s2 = vec![0.0; n]; // q1 ey2 (1 + M1 t2)
    for (i, &t) in ts.iter().enumerate() {
        let ey = (-m.big_m[0] * t).exp();
        a1[i] = (-m.c.c[0][0] * m.q[0] * ey).exp();
        a2[i] = (-m.c.c[1][0] * m.q[0] * ey).exp();
        s1[i] = m.q[0] * ey * (1.0 + m.big_m[0] * t);
        let ey = (-m.big_m[1] * t).exp();
        b1[i] = (-m.c.c[0][1] * m.q[1] * ey).exp();
        b2[i] = (-m.c.c[1][1] * m.q[1] * ey).exp();
        s2[i] = m.q[1] * ey * (1.0 + m.big_m[1] * t);
    }
    let mut best_f = f64::NEG_INFINITY;
    let mut best_t = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let f = m.p[0] * a1[i] * b1[j] + m.p[1] * a2[i] * b2[j] + s1[i] + s2[j] - 1.0;
            if beats(f, (ts[i], ts[j]), best_f, best_t) || f > best_f + TIE_EPS {
                best_f = f;
                best_t = (ts[i], ts[j]);
            }
        }
    }
    // Re-evaluate the winner unfactorized so the reported value matches eval_f.
    (best_t, eval_f(m, best_t.0, best_t.1))
}

/// Maximizes `F` over `[0,1]^2`.
///
/// Runs fixed-point iteration from `(1,1)` and `(0,0)` plus a grid scan, then
/// refines the best grid point by fixed-point iteration. The candidate with
/// the largest `F` wins; ties go to the componentwise-largest `t`.
pub fn maximize_f(
    m: &ModelSpec,
    opts: &MaximizeOptions,
) -> Result<MaximizerResult, VariationalError> {
    struct Cand {
        t: (f64, f64),
        f: f64,
        refined: bool,
    }
    let mut iterations = 0;
    let mut cands: Vec<Cand> = Vec::with_capacity(4);

    for start in [(1.0, 1.0), (0.0, 0.0)] {
        let fp = fixed_point(m, start, opts.fp_tol, opts.fp_max_iter);
        iterations += fp.iterations;
        if fp.converged {
            cands.push(Cand {
                t: fp.t,
                f: eval_f(m, fp.t.0, fp.t.1),
                refined: true,
            });
        }
    }

    if let Some(n) = opts.grid_n {
        assert!(n >= 2, "grid_n must be at least 2");
        let (gt, gf) = grid_scan(m, n);
        cands.push(Cand {
            t: gt,
            f: gf,
            refined: false,
        });
        let fp = fixed_point(m, gt, opts.fp_tol, opts.fp_max_iter);
        iterations += fp.iterations;
        if fp.converged {
            let f = eval_f(m, fp.t.0, fp.t.1);
            if f >= gf - 1e-14 {
                cands.push(Cand {
                    t: fp.t,
                    f,
                    refined: true,
                });
            }
        }
    }

    if cands.is_empty() {
        return Err(VariationalError::NoConvergence);
    }
    let mut best = 0;
    for i in 1..cands.len() {
        if beats(cands[i].f, cands[i].t, cands[best].f, cands[best].t) {
            best = i;
        }
    }
    let winner = &cands[best];
    let h = h_map(m, winner.t.0, winner.t.1);
    let residual = (h.0 - winner.t.0).abs().max((h.1 - winner.t.1).abs());
    let f_star = winner.f.clamp(0.0, 1.0);
    Ok(MaximizerResult {
        t_star: winner.t,
        f_star,
        eta: 1.0 - f_star,
        method: if winner.refined && residual <= opts.fp_tol {
            SolveMethod::FixedPointRefined
        } else {
            SolveMethod::GridOnly
        },
        iterations,
        residual,
    })
}

/// Matching rates and advantage ratio for the two canonical allocations at
/// `(B, alpha, alpha_f)`.
#[derive(Debug, Clone)]
pub struct EtaPair {
    pub eta_os: f64,
    pub eta_ts: f64,
    /// `eta_os / eta_ts`; greater than 1 means one-sided dominance.
    pub adv_os: f64,
    pub t_star_os: (f64, f64),
    pub t_star_ts: (f64, f64),
}

/// Computes `eta_os`, `eta_ts`, and `adv_os` with the given solver options.
pub fn eta_pair_with(
    budget: f64,
    alpha: f64,
    alpha_f: f64,
    opts: &MaximizeOptions,
) -> Result<EtaPair, VariationalError> {
    let os = derive_model(&FlexScenario::one_sided(budget, alpha, alpha_f)?)?;
    let ts = derive_model(&FlexScenario::two_sided(budget, alpha, alpha_f)?)?;
    let ros = maximize_f(&os, opts)?;
    let rts = maximize_f(&ts, opts)?;
    if rts.eta == 0.0 {
        return Err(VariationalError::DegenerateRatio);
    }
    Ok(EtaPair {
        eta_os: ros.eta,
        eta_ts: rts.eta,
        adv_os: ros.eta / rts.eta,
        t_star_os: ros.t_star,
        t_star_ts: rts.t_star,
    })
}

/// [`eta_pair_with`] under default solver options.
pub fn eta_pair(budget: f64, alpha: f64, alpha_f: f64) -> Result<EtaPair, VariationalError> {
    eta_pair_with(budget, alpha, alpha_f, &MaximizeOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_connection_matrix, ConnectionMatrix, FlexScenario};

    fn os_model(b: f64, a: f64, af: f64) -> ModelSpec {
        derive_model(&FlexScenario::one_sided(b, a, af).unwrap()).unwrap()
    }

    fn ts_model(b: f64, a: f64, af: f64) -> ModelSpec {
        derive_model(&FlexScenario::two_sided(b, a, af).unwrap()).unwrap()
    }

    fn empty_model() -> ModelSpec {
        ts_model(0.5, 0.0, 0.0)
    }

    #[test]
    fn f_is_one_for_empty_graph() {
        let m = empty_model();
        for t in [(0.0, 0.0), (0.3, 0.9), (1.0, 1.0)] {
            assert!((eval_f(&m, t.0, t.1) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn f_at_origin_is_isolation_mass() {
        // F(0,0) = sum_x p[x] e^{-lambda[x]}
        let m = os_model(1.0, 0.5, 0.5);
        assert!((eval_f(&m, 0.0, 0.0) - (-1.0f64).exp()).abs() < 1e-15);
        let m = ts_model(0.8, 0.7, 2.0);
        let expect = m.p[0] * (-m.lambda[0]).exp() + m.p[1] * (-m.lambda[1]).exp();
        assert!((eval_f(&m, 0.0, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn f_matches_independent_high_precision_value() {
        // Frozen from a 40-digit evaluation of the same expression.
        let m = os_model(1.0, 1.0, 2.0);
        let v = eval_f(&m, 0.5, 0.5);
        assert!((v - 0.069_845_969_614_879_00).abs() < 1e-15, "{v}");
    }

    #[test]
    fn gradient_vanishes_for_empty_graph() {
        let m = empty_model();
        assert_eq!(grad_f(&m, 0.4, 0.7), (0.0, 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = ts_model(0.6, 1.0, 5.0);
        let h = 1e-6;
        for &(t1, t2) in &[(0.2, 0.8), (0.5, 0.5), (0.9, 0.1), (0.0, 1.0)] {
            let g = grad_f(&m, t1, t2);
            let fd1 = (eval_f(&m, t1 + h, t2) - eval_f(&m, t1 - h, t2)) / (2.0 * h);
            let fd2 = (eval_f(&m, t1, t2 + h) - eval_f(&m, t1, t2 - h)) / (2.0 * h);
            assert!((g.0 - fd1).abs() < 1e-5, "{} vs {}", g.0, fd1);
            assert!((g.1 - fd2).abs() < 1e-5, "{} vs {}", g.1, fd2);
        }
    }

    #[test]
    fn gradient_small_at_interior_maximizer() {
        let m = ts_model(0.6, 1.0, 5.0);
        let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
        let g = grad_f(&m, r.t_star.0, r.t_star.1);
        assert!(g.0.abs() <= 1e-8 && g.1.abs() <= 1e-8, "{g:?}");
    }

    #[test]
    fn h_zero_for_empty_graph_and_fixed_at_max() {
        let m = empty_model();
        assert_eq!(h_map(&m, 0.5, 0.5), (0.0, 0.0));

        let m = ts_model(0.6, 1.0, 5.0);
        let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
        let h = h_map(&m, r.t_star.0, r.t_star.1);
        assert!((h.0 - r.t_star.0).abs() <= 1e-8);
        assert!((h.1 - r.t_star.1).abs() <= 1e-8);
    }

    #[test]
    fn h_iteration_from_ones_is_f_nondecreasing_to_grid_level() {
        let m = ts_model(0.7, 0.4, 3.0);
        let mut t = (1.0, 1.0);
        let mut prev = eval_f(&m, t.0, t.1);
        let mut last = prev;
        for _ in 0..500 {
            t = h_map(&m, t.0, t.1);
            last = eval_f(&m, t.0, t.1);
            // Not monotone in general from t=(1,1), but must not collapse
            // below the starting value once stationary.
            prev = prev.max(last);
        }
        let (_, grid_best) = super::grid_scan(&m, 301);
        assert!(last >= grid_best - 1e-6, "{last} vs {grid_best}");
    }

    #[test]
    fn empty_graph_maximizer_takes_largest_t() {
        let r = maximize_f(&empty_model(), &MaximizeOptions::default()).unwrap();
        assert_eq!(r.t_star, (1.0, 1.0));
        assert!((r.f_star - 1.0).abs() < 1e-15);
        assert_eq!(r.eta, 0.0);
    }

    #[test]
    fn type_blind_model_is_allocation_independent() {
        // alpha = alpha_f: every rate equals 2 alpha, so the graph law and the
        // maximized objective cannot depend on the split.
        for b in [0.2, 0.6, 1.0] {
            let fo = maximize_f(&os_model(b, 0.75, 0.75), &MaximizeOptions::default()).unwrap();
            let ft = maximize_f(&ts_model(b, 0.75, 0.75), &MaximizeOptions::default()).unwrap();
            assert!((fo.f_star - ft.f_star).abs() < 1e-10);
        }
    }

    #[test]
    fn maximize_agrees_with_dense_1d_grid() {
        // One-sided models make F constant in t2, so a dense 1-D scan of the
        // reduced objective is an independent oracle.
        let m = os_model(0.5, 0.5, 2.0);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let t1 = i as f64 / 10_000.0;
            best = best.max(eval_f(&m, t1, 0.0));
        }
        let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
        assert!((r.f_star - best).abs() < 1e-6, "{} vs {}", r.f_star, best);
        assert!(r.f_star >= best - 1e-12);
    }

    #[test]
    fn maximizer_bounds_hold() {
        for (b, a, af) in [(0.3, 0.2, 4.0), (0.9, 1.5, 1.5), (1.0, 0.0, 3.0)] {
            for m in [os_model(b, a, af), ts_model(b, a, af)] {
                let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
                assert!(r.t_star.0 >= 0.0 && r.t_star.0 <= 1.0);
                assert!(r.t_star.1 >= 0.0 && r.t_star.1 <= 1.0);
                assert!(r.f_star >= eval_f(&m, 0.0, 0.0) - 1e-12);
                assert!((0.0..=1.0).contains(&r.f_star));
                assert!((0.0..=1.0).contains(&r.eta));
            }
        }
    }

    #[test]
    fn side_symmetry_at_the_max() {
        for (b, a, af) in [(0.6, 1.0, 5.0), (0.4, 0.0, 2.0), (0.85, 0.3, 0.9)] {
            let m = os_model(b, a, af);
            let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
            let rt = maximize_f(&m.transposed(), &MaximizeOptions::default()).unwrap();
            assert!((r.f_star - rt.f_star).abs() < 1e-8);
        }
    }

    #[test]
    fn rate_increase_does_not_raise_max_f() {
        let base = ts_model(0.5, 0.8, 2.5);
        let f0 = maximize_f(&base, &MaximizeOptions::default())
            .unwrap()
            .f_star;
        for x in 0..2 {
            for y in 0..2 {
                let mut c = base.c.c;
                c[x][y] += 0.05;
                let bumped =
                    ModelSpec::new(base.p, base.q, ConnectionMatrix::new(c).unwrap()).unwrap();
                let f1 = maximize_f(&bumped, &MaximizeOptions::default())
                    .unwrap()
                    .f_star;
                assert!(f1 <= f0 + 1e-8, "c[{x}][{y}]: {f1} > {f0}");
            }
        }
    }

    #[test]
    fn eta_pair_examples() {
        // alpha = alpha_f: identical graph law, ratio exactly 1.
        let p = eta_pair(0.7, 1.0, 1.0).unwrap();
        assert!((p.adv_os - 1.0).abs() < 1e-9);
        // Strong premium with no baseline: one-sided wins.
        let p = eta_pair(1.0, 0.0, 2.5).unwrap();
        assert!(p.adv_os > 1.0);
        // Large premium at partial budget: two-sided wins.
        let p = eta_pair(0.6, 1.0, 5.0).unwrap();
        assert!(p.adv_os < 1.0);
    }

    #[test]
    fn eta_pair_empty_graph_is_degenerate() {
        assert!(matches!(
            eta_pair(0.5, 0.0, 0.0),
            Err(VariationalError::DegenerateRatio)
        ));
    }

    #[test]
    fn no_grid_no_convergence_is_an_error_only_without_fallback() {
        // A 1-iteration budget cannot converge; with the grid disabled this
        // must surface as NoConvergence.
        let m = ts_model(0.6, 1.0, 5.0);
        let opts = MaximizeOptions {
            grid_n: None,
            fp_tol: 1e-15,
            fp_max_iter: 1,
        };
        assert_eq!(
            maximize_f(&m, &opts).unwrap_err(),
            VariationalError::NoConvergence
        );
        let opts = MaximizeOptions {
            grid_n: Some(101),
            ..opts
        };
        assert!(maximize_f(&m, &opts).is_ok());
    }

    #[test]
    fn connection_matrix_feeds_general_models() {
        // Arbitrary-rate models (beyond the flexibility parametrization) are
        // accepted and keep unimodularity.
        let c = build_connection_matrix(0.4, 1.9).unwrap();
        let m = ModelSpec::new([0.25, 0.75], [0.6, 0.4], c).unwrap();
        assert!(crate::model::unimodularity_residual(&m) < 1e-12);
        let r = maximize_f(&m, &MaximizeOptions::default()).unwrap();
        assert!(r.residual <= 1e-6);
    }
}
