//! Exact asymptotic matching rates for 2-type bipartite stochastic block
//! models under flexibility allocation.
//!
//! The crate evaluates and maximizes the variational objective `F` whose
//! maximum determines the asymptotic matching rate `eta = 1 - max F`,
//! compares one-sided vs two-sided flexibility allocations across the
//! `(alpha, alpha_f, B)` parameter space, and cross-validates the formula
//! three ways: finite-graph Monte-Carlo (Hopcroft-Karp on sampled graphs),
//! a population-dynamics solver for the underlying recursive distributional
//! equation, and closed-form comparison bounds.
//!
//! Module map:
//! - [`model`]: scenario parametrization, connection matrix, derived rates.
//! - [`variational`]: objective `F`, gradient, `H` map, maximization, rates.
//! - [`bounded`]: finite-support degree laws, PGF objective, truncation.
//! - [`asymptotics`]: `alpha_f -> inf` limit objectives and scalar thresholds.
//! - [`fmz`]: closed-form lower/upper comparison bounds.
//! - [`graph`]: graph sampling, maximum matching, Monte-Carlo estimation.
//! - [`rde`]: population dynamics for the distributional fixed point.
//! - [`atlas`]: dominance classification, sweeps, crossovers, CSV output.
//! - [`validation`]: the acceptance checks run by tests and the CLI.

pub mod asymptotics;
pub mod atlas;
pub mod bounded;
pub mod fmz;
pub mod graph;
pub mod model;
pub mod rde;
pub mod seed;
pub mod solve;
pub mod validation;
pub mod variational;

pub use atlas::{classify, crossover_alpha_f, sweep, DominanceCell, GridSpec, Verdict};
pub use model::{
    build_connection_matrix, derive_model, resolve_allocation, Allocation, ConnectionMatrix,
    FlexScenario, ModelSpec,
};
pub use variational::{eta_pair, eval_f, grad_f, h_map, maximize_f, EtaPair, MaximizerResult};
