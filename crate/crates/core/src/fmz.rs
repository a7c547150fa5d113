//! Closed-form comparison bounds sandwiching the exact matching rates.
//!
//! These recover prior algorithmic bounds from the variational formula: a
//! lower bound `L = m_reg + B - C` on the two-sided rate and an upper bound
//! `U = 1 - (1 - B) e^{-2 alpha}` on the one-sided rate, together with the
//! thresholds `alpha_star(B)` and `alpha_f_star(B, alpha)` delimiting the
//! regime where `L > U` certifies two-sided dominance. The intermediate
//! quantities `Gamma` and `Lambda` bound the two-sided objective through a
//! decoupled cross objective; `2 Lambda <= C` ties them back to the closed
//! form.

use crate::asymptotics::entropy_term;
use crate::solve::{max_scan_log, max_scan_unit};

/// All bound quantities at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct FmzBounds {
    /// Baseline-rate threshold `alpha_star(B)`.
    pub alpha_star: f64,
    /// Premium threshold `alpha_f_star(B, alpha)`; absent when its log
    /// argument or denominator is nonpositive.
    pub alpha_f_star: Option<f64>,
    pub m_reg: f64,
    pub c_fmz: f64,
    /// Lower bound on `eta_ts`: `m_reg + B - c_fmz`.
    pub l_fmz: f64,
    /// Upper bound on `eta_os`: `1 - (1 - B) e^{-2 alpha}`.
    pub u_fmz: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// True when `alpha < alpha_star` and the `alpha_f_star` formula is
    /// defined, i.e. the certified two-sided dominance regime applies.
    pub admissible: bool,
}

/// `alpha_star(B) = min(B^2 / (8 (1-B/2)^3), ln((2-B)/B) / (2 (1-B/2)))`
/// and `alpha_f_star(B, alpha)`, which is absent outside its domain.
pub fn fmz_thresholds(b: f64, alpha: f64) -> (f64, Option<f64>) {
    let h = 1.0 - b / 2.0;
    let alpha_star = (b * b / (8.0 * h * h * h)).min(((2.0 - b) / b).ln() / (2.0 * h));
    let log_arg = 2.0 * alpha * ((b / 2.0) * (b / 2.0) - 2.0 * alpha * h * h * h);
    let denom = h * (-2.0 * alpha * h).exp() - b / 2.0;
    let alpha_f_star = (log_arg > 0.0 && denom > 0.0).then(|| (b.ln() - log_arg.ln()) / denom);
    (alpha_star, alpha_f_star)
}

/// `m_reg = 2 (1-B/2) (1 - (1-B/2) alpha - e^{-2 alpha (1-B/2)})`.
pub fn m_reg(b: f64, alpha: f64) -> f64 {
    let h = 1.0 - b / 2.0;
    2.0 * h * (1.0 - h * alpha - (-2.0 * alpha * h).exp())
}

/// `C = (2/alpha_f) (e^{alpha_f B/2} - 1) e^{-alpha_f (1-B/2) e^{-2 alpha (1-B/2)}}`.
pub fn c_fmz(b: f64, alpha: f64, alpha_f: f64) -> f64 {
    let h = 1.0 - b / 2.0;
    2.0 / alpha_f * ((alpha_f * b / 2.0).exp() - 1.0) * (-alpha_f * h * (-2.0 * alpha * h).exp()).exp()
}

/// `U = 1 - (1 - B) e^{-2 alpha}`, the one-sided upper bound.
pub fn u_fmz(b: f64, alpha: f64) -> f64 {
    1.0 - (1.0 - b) * (-2.0 * alpha).exp()
}

/// `Gamma = (1-B/2) max_{y in (0,1]} (e^{-2 alpha (1-B/2) y} + y(1 - ln y) - 1)`.
pub fn gamma(b: f64, alpha: f64) -> f64 {
    let h = 1.0 - b / 2.0;
    let (_, v) = max_scan_unit(
        &|y: f64| (-2.0 * alpha * h * y).exp() + entropy_term(y) - 1.0,
        1.0,
        10_000,
    );
    h * v
}

/// `Lambda = max_{v in (0, Gamma]} (B/2 e^{-(alpha+alpha_f) v} + v (1 - ln(v/Gamma)) - Gamma)`.
///
/// The maximizer can sit many orders of magnitude below `Gamma` for large
/// premiums, so the scan is log-spaced near 0.
pub fn lambda(b: f64, alpha: f64, alpha_f: f64, gamma: f64) -> f64 {
    let rate = alpha + alpha_f;
    let (_, v) = max_scan_log(
        &|v: f64| b / 2.0 * (-rate * v).exp() + v * (1.0 - (v / gamma).ln()) - gamma,
        gamma,
        3_000,
    );
    v
}

/// Computes every bound quantity at `(B, alpha, alpha_f)`.
pub fn fmz_bounds(b: f64, alpha: f64, alpha_f: f64) -> FmzBounds {
    let (alpha_star, alpha_f_star) = fmz_thresholds(b, alpha);
    let m = m_reg(b, alpha);
    let c = c_fmz(b, alpha, alpha_f);
    let g = gamma(b, alpha);
    let l = lambda(b, alpha, alpha_f, g);
    FmzBounds {
        alpha_star,
        alpha_f_star,
        m_reg: m,
        c_fmz: c,
        l_fmz: m + b - c,
        u_fmz: u_fmz(b, alpha),
        gamma: g,
        lambda: l,
        admissible: alpha < alpha_star && alpha_f_star.is_some(),
    }
}
