//! Limit objectives for `alpha_f -> infinity` and the scalar thresholds of
//! the dominance analysis.
//!
//! As the premium grows, the maximized objectives converge to 1-D problems:
//!
//! ```text
//! Phi_OS(y) = (1 - B) e^{-2 alpha y} + y (1 - ln y) - 1          on (0, 1],
//! Phi_TS(y) = (1 - B/2) [e^{-2 alpha (1-B/2) y} + y (1 - ln y)] - 1,
//! ```
//!
//! with limiting unmatched fractions `U_OS = max Phi_OS` and
//! `U_TS = max(0, max Phi_TS)`. The threshold `alpha_bar(B)` is the root of
//! `max_y Phi_TS`, above which the two-sided allocation matches perfectly in
//! the limit; `B* = 2 - 2e/3` is the budget above which that happens for all
//! `alpha > 0`.

use crate::solve::{bisect, max_scan_unit};
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// `y (1 - ln y)` extended continuously by 0 at `y = 0`.
pub fn entropy_term(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        y * (1.0 - y.ln())
    }
}

/// One-sided limit objective `Phi_OS(y)`.
pub fn phi_os(b: f64, alpha: f64, y: f64) -> Result<f64, AsymptoticsError> {
    if y <= 0.0 {
        return Err(AsymptoticsError::DomainError(format!(
            "Phi_OS needs y > 0, got {y}"
        )));
    }
    Ok((1.0 - b) * (-2.0 * alpha * y).exp() + entropy_term(y) - 1.0)
}

/// Two-sided limit objective `Phi_TS(y)`.
pub fn phi_ts(b: f64, alpha: f64, y: f64) -> Result<f64, AsymptoticsError> {
    if y <= 0.0 {
        return Err(AsymptoticsError::DomainError(format!(
            "Phi_TS needs y > 0, got {y}"
        )));
    }
    let h = 1.0 - b / 2.0;
    Ok(h * ((-2.0 * alpha * h * y).exp() + entropy_term(y)) - 1.0)
}

/// Both limit objectives at `y`.
pub fn phi_limits(b: f64, alpha: f64, y: f64) -> Result<(f64, f64), AsymptoticsError> {
    Ok((phi_os(b, alpha, y)?, phi_ts(b, alpha, y)?))
}

/// Limiting unmatched fractions and their maximizers.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    /// `U_OS = max_{(0,1]} Phi_OS`.
    pub u_os: f64,
    /// `U_TS = max(0, max_{(0,1]} Phi_TS)`.
    pub u_ts: f64,
    pub y_os_star: f64,
    /// Maximizer of `Phi_TS`, present when the inner max is positive.
    pub y_ts_star: Option<f64>,
}

const SCAN_POINTS: usize = 10_000;

fn max_phi_ts(b: f64, alpha: f64) -> (f64, f64) {
    let h = 1.0 - b / 2.0;
    max_scan_unit(
        &|y: f64| h * ((-2.0 * alpha * h * y).exp() + entropy_term(y)) - 1.0,
        1.0,
        SCAN_POINTS,
    )
}

/// Maximizes both limit objectives over `(0, 1]`.
pub fn limit_unmatched(b: f64, alpha: f64) -> LimitReport {
    let (y_os, u_os) = max_scan_unit(
        &|y: f64| (1.0 - b) * (-2.0 * alpha * y).exp() + entropy_term(y) - 1.0,
        1.0,
        SCAN_POINTS,
    );
    let (y_ts, phi_ts_max) = max_phi_ts(b, alpha);
    LimitReport {
        u_os,
        u_ts: phi_ts_max.max(0.0),
        y_os_star: y_os,
        y_ts_star: (phi_ts_max > 0.0).then_some(y_ts),
    }
}

/// The budget threshold `B* = 2 - 2e/3 ~ 0.188`.
pub fn b_star() -> f64 {
    2.0 - 2.0 * E / 3.0
}

/// The proof-derived small-alpha threshold `e / (2 - B)` below which the
/// two-sided allocation dominates in the large-premium limit.
pub fn alpha_low(b: f64) -> f64 {
    E / (2.0 - b)
}

/// The unique `x` in `(0, 1)` with `x (1 - ln x) = 1 - B`; the left-hand side
/// is strictly increasing from 0 to 1 on `(0, 1)`.
pub fn solve_c_b(b: f64) -> f64 {
    bisect(
        |x| entropy_term(x) - (1.0 - b),
        1e-300,
        1.0,
        f64::MIN_POSITIVE,
        1e-13,
    )
}

/// The unique root of `Psi(alpha) = max_y Phi_TS(y; alpha, B)`, found by
/// bisection after doubling the upper bracket until `Psi < 0`. `Psi` is
/// strictly decreasing with `Psi(0) = 1 - B > 0`.
pub fn solve_alpha_bar(b: f64) -> f64 {
    let psi = |alpha: f64| max_phi_ts(b, alpha).1;
    let mut hi = 1.0;
    while psi(hi) >= 0.0 {
        hi *= 2.0;
        assert!(hi < 1e12, "Psi never became negative");
    }
    bisect(psi, 0.0, hi, 1e-12, 0.0)
}

/// The unique maximizer `y*` of `Phi_TS` in `(0, 1)` under the hypothesis
/// `2 alpha (1 - B/2) < e`: the fixed point `y = e^{-2 alpha (1-B/2) y}`.
/// Returns 1 at `alpha = 0`, the boundary case of the fixed-point equation.
pub fn solve_phi_ts_maximizer(b: f64, alpha: f64) -> Result<f64, AsymptoticsError> {
    let kappa = 2.0 * alpha * (1.0 - b / 2.0);
    if kappa >= E {
        return Err(AsymptoticsError::HypothesisViolated(format!(
            "need 2 alpha (1 - B/2) < e, got {kappa}"
        )));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok(bisect(
        |y| y - (-kappa * y).exp(),
        0.0,
        1.0,
        1e-16,
        1e-14,
    ))
}

/// Solution of `z e^z = (2 - B) alpha` together with the substitution
/// `y2* = e^{-z}` used in the large-alpha analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSolution {
    pub z: f64,
    pub y2_star: f64,
}

/// The unique `z` in `(0, 1]` with `z e^z = (2 - B) alpha`; requires
/// `(2 - B) alpha` in `(0, e]` (`z e^z` maps `[0, 1]` onto `[0, e]`).
pub fn solve_z(b: f64, alpha: f64) -> Result<ZSolution, AsymptoticsError> {
    let w = (2.0 - b) * alpha;
    if !(w > 0.0 && w <= E) {
        return Err(AsymptoticsError::HypothesisViolated(format!(
            "need (2 - B) alpha in (0, e], got {w}"
        )));
    }
    let z = bisect(|z| z * z.exp() - w, 0.0, 1.0, 1e-16, 1e-13);
    Ok(ZSolution {
        z,
        y2_star: (-z).exp(),
    })
}
