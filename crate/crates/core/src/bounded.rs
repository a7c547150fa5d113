//! Finite-support degree laws and the bounded-degree variational objective.
//!
//! For degree laws with PGFs `phi_x` (supply) and `psi_y` (demand), the
//! objective is
//!
//! ```text
//! F(t1, t2) = sum_x p[x] phi_x(sum_y a_left[x][y] (1 - psi_y'(1-t[y]) / psi_y'(1)))
//!           + sum_y q[y] (psi_y(1-t[y]) + t[y] psi_y'(1-t[y])) - 1,
//! ```
//!
//! valid whenever the laws and mixings satisfy the unimodularity constraint
//! `p[x] a_left[x][y] phi_x'(1) = q[y] a_right[y][x] psi_y'(1)`. Instantiated
//! with Poisson laws truncated at degree `d` it converges uniformly to the
//! Poisson objective of [`crate::variational::eval_f`] as `d` grows, which
//! bridges bounded-degree theory to the Poisson model.

use crate::model::{ModelSpec, ALGEBRA_TOL};
use thiserror::Error;

/// Tolerance for the unimodularity precondition on supplied laws/mixings.
pub const UNIMOD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundedError {
    #[error("invalid degree law: {0}")]
    InvalidLaw(String),
    #[error("unimodularity violation: {0}")]
    UnimodularityViolation(String),
}

/// A probability distribution on degrees `0..=d_max` with explicit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDegreeLaw {
    weights: Vec<f64>,
}

impl FiniteDegreeLaw {
    /// Validates weights: nonnegative, summing to 1 within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self, BoundedError> {
        if weights.is_empty() {
            return Err(BoundedError::InvalidLaw("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BoundedError::InvalidLaw(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > ALGEBRA_TOL {
            return Err(BoundedError::InvalidLaw(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// The law concentrated at a single degree.
    pub fn point_mass(degree: usize) -> Self {
        let mut weights = vec![0.0; degree + 1];
        weights[degree] = 1.0;
        Self { weights }
    }

    /// Poisson(`rate`) truncated at `d` with the excess mass moved to zero:
    /// `w[0] = P(X = 0) + P(X > d)`, `w[k] = P(X = k)` for `k = 1..=d`.
    pub fn truncated_poisson(rate: f64, d: usize) -> Self {
        assert!(rate >= 0.0 && rate.is_finite());
        if rate == 0.0 {
            return Self::point_mass(0);
        }
        let mut weights = vec![0.0; d + 1];
        let mut pk = (-rate).exp();
        let mut total = pk;
        weights[0] = pk;
        for k in 1..=d {
            pk *= rate / k as f64;
            weights[k] = pk;
            total += pk;
        }
        weights[0] += (1.0 - total).max(0.0); // tail mass P(X > d)
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_degree(&self) -> usize {
        self.weights.len() - 1
    }

    /// PGF `sum_k w[k] s^k` by Horner evaluation.
    pub fn pgf(&self, s: f64) -> f64 {
        self.weights.iter().rev().fold(0.0, |acc, &w| acc * s + w)
    }

    /// PGF derivative `sum_k k w[k] s^{k-1}`.
    pub fn pgf_deriv(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..self.weights.len()).rev() {
            acc = acc * s + k as f64 * self.weights[k];
        }
        acc
    }

    /// Mean degree, `pgf_deriv(1)`.
    pub fn mean(&self) -> f64 {
        (1..self.weights.len())
            .map(|k| k as f64 * self.weights[k])
            .sum()
    }

    /// The excess distribution `w_hat[k] = (k+1) w[k+1] / mean`, or `None`
    /// when the mean is zero.
    pub fn excess(&self) -> Option<Self> {
        let mean = self.mean();
        if mean <= 0.0 {
            return None;
        }
        let mut weights: Vec<f64> = (1..self.weights.len())
            .map(|k| k as f64 * self.weights[k] / mean)
            .collect();
        if weights.is_empty() {
            weights.push(1.0);
        }
        Some(Self { weights })
    }
}

/// Upper tail `P(Pois(rate) > d)`.
pub fn poisson_tail(rate: f64, d: usize) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    let mut pk = (-rate).exp();
    let mut cdf = pk;
    for k in 1..=d {
        pk *= rate / k as f64;
        cdf += pk;
    }
    (1.0 - cdf).max(0.0)
}

/// Expected fraction of vertices of degree above `d` in the limit:
/// `sum_x p[x] P(Pois(lambda[x]) > d) + sum_y q[y] P(Pois(M[y]) > d)`.
pub fn tau_d(m: &ModelSpec, d: usize) -> f64 {
    (0..2)
        .map(|x| m.p[x] * poisson_tail(m.lambda[x], d))
        .sum::<f64>()
        + (0..2)
            .map(|y| m.q[y] * poisson_tail(m.big_m[y], d))
            .sum::<f64>()
}

/// A validated bounded-degree instance: marginals, per-type degree laws, and
/// unimodular mixings.
#[derive(Debug, Clone)]
pub struct BoundedSpec {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub laws_l: [FiniteDegreeLaw; 2],
    pub laws_r: [FiniteDegreeLaw; 2],
    pub a_left: [[f64; 2]; 2],
    pub a_right: [[f64; 2]; 2],
}

impl BoundedSpec {
    /// Validates marginals and the unimodularity constraint
    /// `p[x] a_left[x][y] phi_x'(1) = q[y] a_right[y][x] psi_y'(1)`.
    pub fn new(
        p: [f64; 2],
        q: [f64; 2],
        laws_l: [FiniteDegreeLaw; 2],
        laws_r: [FiniteDegreeLaw; 2],
        a_left: [[f64; 2]; 2],
        a_right: [[f64; 2]; 2],
    ) -> Result<Self, BoundedError> {
        for (name, v) in [("p", &p), ("q", &q)] {
            if (v[0] + v[1] - 1.0).abs() > ALGEBRA_TOL || v.iter().any(|x| *x < 0.0) {
                return Err(BoundedError::InvalidLaw(format!(
                    "{name} must be a probability pair, got {v:?}"
                )));
            }
        }
        let ml = [laws_l[0].mean(), laws_l[1].mean()];
        let mr = [laws_r[0].mean(), laws_r[1].mean()];
        for x in 0..2 {
            for y in 0..2 {
                let lhs = p[x] * a_left[x][y] * ml[x];
                let rhs = q[y] * a_right[y][x] * mr[y];
                if (lhs - rhs).abs() > UNIMOD_TOL * lhs.abs().max(rhs.abs()).max(1.0) {
                    return Err(BoundedError::UnimodularityViolation(format!(
                        "pair (x={x}, y={y}): {lhs} vs {rhs}"
                    )));
                }
            }
        }
        Ok(Self {
            p,
            q,
            laws_l,
            laws_r,
            a_left,
            a_right,
        })
    }

    /// The `d`-truncated Poisson instance of a model.
    ///
    /// Laws are Poisson truncated with mass-to-zero; `a_left` is inherited
    /// from the model and `a_right` is recomputed from the unimodularity
    /// identity against the truncated means, so the constraint holds exactly
    /// (truncation shifts side means by slightly different factors, which
    /// rules out keeping both original mixings).
    pub fn truncated_poisson(m: &ModelSpec, d: usize) -> Self {
        let laws_l = [
            FiniteDegreeLaw::truncated_poisson(m.lambda[0], d),
            FiniteDegreeLaw::truncated_poisson(m.lambda[1], d),
        ];
        let laws_r = [
            FiniteDegreeLaw::truncated_poisson(m.big_m[0], d),
            FiniteDegreeLaw::truncated_poisson(m.big_m[1], d),
        ];
        let ml = [laws_l[0].mean(), laws_l[1].mean()];
        let mr = [laws_r[0].mean(), laws_r[1].mean()];
        let a_left = m.a_left;
        let mut a_right = [[0.0; 2]; 2];
        for y in 0..2 {
            for x in 0..2 {
                if m.q[y] * mr[y] > 0.0 {
                    a_right[y][x] = m.p[x] * a_left[x][y] * ml[x] / (m.q[y] * mr[y]);
                }
            }
        }
        Self {
            p: m.p,
            q: m.q,
            laws_l,
            laws_r,
            a_left,
            a_right,
        }
    }

    /// Evaluates the bounded-degree objective at `(t1, t2)`.
    ///
    /// A demand law with `psi'(1) = 0` has no edges; its derivative ratio is
    /// taken as 0 (the 0/0 convention) and the corresponding `t` coordinate
    /// is forced to 0.
    pub fn eval_f(&self, t1: f64, t2: f64) -> f64 {
        let mut t = [t1, t2];
        let mut ratio = [0.0; 2];
        for y in 0..2 {
            let d1 = self.laws_r[y].pgf_deriv(1.0);
            if d1 > 0.0 {
                ratio[y] = self.laws_r[y].pgf_deriv(1.0 - t[y]) / d1;
            } else {
                t[y] = 0.0;
            }
        }
        let mut total = -1.0;
        for x in 0..2 {
            let arg = self.a_left[x][0] * (1.0 - ratio[0]) + self.a_left[x][1] * (1.0 - ratio[1]);
            total += self.p[x] * self.laws_l[x].pgf(arg);
        }
        for y in 0..2 {
            total += self.q[y]
                * (self.laws_r[y].pgf(1.0 - t[y]) + t[y] * self.laws_r[y].pgf_deriv(1.0 - t[y]));
        }
        total
    }
}

/// Validates the inputs and evaluates the bounded-degree objective.
#[allow(clippy::too_many_arguments)]
pub fn eval_f_bounded(
    p: [f64; 2],
    q: [f64; 2],
    laws_l: [FiniteDegreeLaw; 2],
    laws_r: [FiniteDegreeLaw; 2],
    a_left: [[f64; 2]; 2],
    a_right: [[f64; 2]; 2],
    t1: f64,
    t2: f64,
) -> Result<f64, BoundedError> {
    Ok(BoundedSpec::new(p, q, laws_l, laws_r, a_left, a_right)?.eval_f(t1, t2))
}

/// The truncated-Poisson objective `F^(d)` of a model at `(t1, t2)`.
pub fn truncated_poisson_objective(m: &ModelSpec, d: usize, t1: f64, t2: f64) -> f64 {
    BoundedSpec::truncated_poisson(m, d).eval_f(t1, t2)
}
