//! Model parametrization: flexibility scenarios, the connection matrix, and
//! all derived rate quantities shared by the other modules.
//!
//! A market instance is a 2-type bipartite stochastic block model: supply
//! nodes are flexible (type 2) with probability `b_left`, demand nodes with
//! probability `b_right`, and a supply node of type `x` connects to a demand
//! node of type `y` with probability `c[x][y] / n`. The scenario
//! parametrization builds `c` from a baseline rate `alpha` and a flexibility
//! premium `alpha_f`; its key property is that expected edge density depends
//! on the total budget `B = b_left + b_right` but not on the split.

use thiserror::Error;

/// Tolerance for algebraic identities checked in double precision.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// How the flexibility budget is split across the two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Allocation {
    /// All budget on the supply side: `(b_left, b_right) = (B, 0)`.
    OneSided,
    /// Budget split equally: `(B/2, B/2)`.
    TwoSided,
    /// Explicit split; must satisfy `b_left + b_right = B`.
    Custom { b_left: f64, b_right: f64 },
}

/// A `(alpha, alpha_f, B, allocation)` scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexScenario {
    pub alpha: f64,
    pub alpha_f: f64,
    pub budget: f64,
    pub allocation: Allocation,
}

impl FlexScenario {
    pub fn new(
        alpha: f64,
        alpha_f: f64,
        budget: f64,
        allocation: Allocation,
    ) -> Result<Self, ModelError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "alpha must be a finite nonnegative real, got {alpha}"
            )));
        }
        if !alpha_f.is_finite() || alpha_f < alpha {
            return Err(ModelError::InvalidParams(format!(
                "alpha_f must satisfy alpha_f >= alpha, got alpha_f={alpha_f}, alpha={alpha}"
            )));
        }
        if !budget.is_finite() || !(0.0..=1.0).contains(&budget) {
            return Err(ModelError::InvalidParams(format!(
                "budget must lie in [0, 1], got {budget}"
            )));
        }
        if let Allocation::Custom { b_left, b_right } = allocation {
            if !(0.0..=1.0).contains(&b_left) || !(0.0..=1.0).contains(&b_right) {
                return Err(ModelError::InvalidParams(format!(
                    "custom split must lie in [0, 1]^2, got ({b_left}, {b_right})"
                )));
            }
            if (b_left + b_right - budget).abs() > ALGEBRA_TOL {
                return Err(ModelError::InvalidParams(format!(
                    "custom split must sum to the budget: {b_left} + {b_right} != {budget}"
                )));
            }
        }
        Ok(Self {
            alpha,
            alpha_f,
            budget,
            allocation,
        })
    }

    pub fn one_sided(budget: f64, alpha: f64, alpha_f: f64) -> Result<Self, ModelError> {
        Self::new(alpha, alpha_f, budget, Allocation::OneSided)
    }

    pub fn two_sided(budget: f64, alpha: f64, alpha_f: f64) -> Result<Self, ModelError> {
        Self::new(alpha, alpha_f, budget, Allocation::TwoSided)
    }
}

/// The 2x2 connection rate matrix; row = supply type, column = demand type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionMatrix {
    pub c: [[f64; 2]; 2],
}

impl ConnectionMatrix {
    /// Builds a matrix from raw rates. All entries must be finite and >= 0.
    pub fn new(c: [[f64; 2]; 2]) -> Result<Self, ModelError> {
        for row in &c {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::InvalidParams(format!(
                        "connection rates must be finite nonnegative reals, got {v}"
                    )));
                }
            }
        }
        Ok(Self { c })
    }

    pub fn transpose(&self) -> Self {
        Self {
            c: [
                [self.c[0][0], self.c[1][0]],
                [self.c[0][1], self.c[1][1]],
            ],
        }
    }
}

/// Builds `[[2a, a+af], [a+af, 2af]]`: regular-regular pairs connect at rate
/// `2 alpha`, mixed pairs at `alpha + alpha_f`, flexible-flexible at
/// `2 alpha_f`.
pub fn build_connection_matrix(alpha: f64, alpha_f: f64) -> Result<ConnectionMatrix, ModelError> {
    if !alpha.is_finite() || alpha < 0.0 || !alpha_f.is_finite() || alpha_f < alpha {
        return Err(ModelError::InvalidParams(format!(
            "need 0 <= alpha <= alpha_f, got alpha={alpha}, alpha_f={alpha_f}"
        )));
    }
    ConnectionMatrix::new([
        [2.0 * alpha, alpha + alpha_f],
        [alpha + alpha_f, 2.0 * alpha_f],
    ])
}

/// Resolves a scenario's allocation mode to the concrete `(b_left, b_right)`.
pub fn resolve_allocation(scenario: &FlexScenario) -> Result<(f64, f64), ModelError> {
    match scenario.allocation {
        Allocation::OneSided => Ok((scenario.budget, 0.0)),
        Allocation::TwoSided => Ok((scenario.budget / 2.0, scenario.budget / 2.0)),
        Allocation::Custom { b_left, b_right } => {
            if (b_left + b_right - scenario.budget).abs() > ALGEBRA_TOL {
                return Err(ModelError::InvalidParams(format!(
                    "custom split ({b_left}, {b_right}) does not sum to budget {}",
                    scenario.budget
                )));
            }
            Ok((b_left, b_right))
        }
    }
}

/// A fully derived model instance.
///
/// Besides the marginals `p`, `q` and the rate matrix `c`, this carries the
/// aggregate rates `lambda[x] = sum_y c[x][y] q[y]` and
/// `big_m[y] = sum_x c[x][y] p[x]`, and the neighbor-type mixing matrices
/// `a_left[x][y] = c[x][y] q[y] / lambda[x]`,
/// `a_right[y][x] = c[x][y] p[x] / big_m[y]`.
///
/// Rows with a zero aggregate rate are flagged degenerate and stored as all
/// zeros; downstream formulas never read a degenerate row against a nonzero
/// rate, so isolated types contribute `exp(0)` terms correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub c: ConnectionMatrix,
    pub lambda: [f64; 2],
    pub big_m: [f64; 2],
    pub a_left: [[f64; 2]; 2],
    pub a_right: [[f64; 2]; 2],
    pub left_degenerate: [bool; 2],
    pub right_degenerate: [bool; 2],
}

impl ModelSpec {
    /// Builds a model from arbitrary type marginals and a rate matrix.
    ///
    /// The variational formula holds for any such instance, not only the
    /// flexibility parametrization.
    pub fn new(p: [f64; 2], q: [f64; 2], c: ConnectionMatrix) -> Result<Self, ModelError> {
        for (name, v) in [("p", &p), ("q", &q)] {
            if v.iter().any(|x| !x.is_finite() || !(0.0..=1.0).contains(x)) {
                return Err(ModelError::InvalidParams(format!(
                    "{name} components must lie in [0, 1], got {v:?}"
                )));
            }
            if (v[0] + v[1] - 1.0).abs() > ALGEBRA_TOL {
                return Err(ModelError::InvalidParams(format!(
                    "{name} must sum to 1, got {v:?}"
                )));
            }
        }
        ConnectionMatrix::new(c.c)?;

        let lambda = [
            c.c[0][0] * q[0] + c.c[0][1] * q[1],
            c.c[1][0] * q[0] + c.c[1][1] * q[1],
        ];
        let big_m = [
            c.c[0][0] * p[0] + c.c[1][0] * p[1],
            c.c[0][1] * p[0] + c.c[1][1] * p[1],
        ];

        let mut a_left = [[0.0; 2]; 2];
        let mut a_right = [[0.0; 2]; 2];
        let mut left_degenerate = [false; 2];
        let mut right_degenerate = [false; 2];
        for x in 0..2 {
            if lambda[x] > 0.0 {
                for y in 0..2 {
                    a_left[x][y] = c.c[x][y] * q[y] / lambda[x];
                }
            } else {
                left_degenerate[x] = true;
            }
        }
        for y in 0..2 {
            if big_m[y] > 0.0 {
                for x in 0..2 {
                    a_right[y][x] = c.c[x][y] * p[x] / big_m[y];
                }
            } else {
                right_degenerate[y] = true;
            }
        }

        Ok(Self {
            p,
            q,
            c,
            lambda,
            big_m,
            a_left,
            a_right,
            left_degenerate,
            right_degenerate,
        })
    }

    /// Builds a model directly from a flexibility split.
    pub fn from_split(
        b_left: f64,
        b_right: f64,
        c: ConnectionMatrix,
    ) -> Result<Self, ModelError> {
        Self::new([1.0 - b_left, b_left], [1.0 - b_right, b_right], c)
    }

    /// The model with sides swapped: `(q, p, c^T)`. Maximum matching is
    /// side-symmetric, so the maximized objective must agree.
    pub fn transposed(&self) -> Self {
        Self::new(self.q, self.p, self.c.transpose()).expect("transpose of a valid model is valid")
    }

    /// Expected number of compatibility edges per node:
    /// `sum_{x,y} p[x] q[y] c[x][y]`. Under the flexibility parametrization
    /// this equals `2 alpha + (alpha_f - alpha) B` and is independent of the
    /// split.
    pub fn edge_density(&self) -> f64 {
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                s += self.p[x] * self.q[y] * self.c.c[x][y];
            }
        }
        s
    }

    /// Largest entry in the rate matrix.
    pub fn max_rate(&self) -> f64 {
        self.c.c.iter().flatten().fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// Derives the full model for a scenario.
pub fn derive_model(scenario: &FlexScenario) -> Result<ModelSpec, ModelError> {
    let (b_left, b_right) = resolve_allocation(scenario)?;
    let c = build_connection_matrix(scenario.alpha, scenario.alpha_f)?;
    ModelSpec::from_split(b_left, b_right, c)
}

/// Checks the unimodularity identity
/// `p[x] a_left[x][y] lambda[x] = q[y] a_right[y][x] big_m[y] = p[x] q[y] c[x][y]`
/// for every pair; returns the largest absolute residual.
pub fn unimodularity_residual(m: &ModelSpec) -> f64 {
    let mut worst = 0.0_f64;
    for x in 0..2 {
        for y in 0..2 {
            let edge = m.p[x] * m.q[y] * m.c.c[x][y];
            let lhs = m.p[x] * m.a_left[x][y] * m.lambda[x];
            let rhs = m.q[y] * m.a_right[y][x] * m.big_m[y];
            worst = worst.max((lhs - edge).abs()).max((rhs - edge).abs());
        }
    }
    worst
}
