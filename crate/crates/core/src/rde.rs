//! Population-dynamics solver for the recursive distributional equation on
//! the 2-type limit tree.
//!
//! The pair of laws `mu = (mu_1, mu_2)` on `[0, 1]` solves `mu = Theta(mu)`,
//! where a sample of component `x` is
//!
//! ```text
//! Y_x = (1 + sum_{i <= N_x} (sum_{j <= N'_i} X_ij)^{-1})^{-1},
//! ```
//!
//! with `N_x` from the supply offspring law, each child's type drawn from
//! `a_left[x][.]`, `N'_i` from the demand excess law of that type, and each
//! `X_ij` resampled from the mixture `sum_x' a_right[y][x'] mu_x'`. The
//! conventions `0^{-1} = inf`, `inf^{-1} = 0` are implemented as branches:
//! an inner sum of zero forces `Y_x = 0`, and `N_x = 0` forces `Y_x = 1`.
//!
//! Each law is represented by an empirical sample (population). Iterating
//! `Theta` from the constant-1 populations (stochastically largest) walks
//! down to the largest fixed point, whose positivity vector realizes the
//! maximizer of the variational objective; the matching rate follows by one
//! final root step. Used as an oracle against [`crate::variational`].

use crate::bounded::FiniteDegreeLaw;
use crate::model::ModelSpec;
use crate::seed::mix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Empirical approximations of the measure pair `(mu_1, mu_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub pop: [Vec<f64>; 2],
    pub iteration: usize,
}

impl PopulationState {
    pub fn all_ones(size: usize) -> Self {
        Self {
            pop: [vec![1.0; size], vec![1.0; size]],
            iteration: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.pop[0].len()
    }

    /// Plain-text dump: the type-1 population one value per line, then the
    /// type-2 population, for cross-implementation comparison.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for pop in &self.pop {
            for v in pop {
                writeln!(out, "{v:.17}").unwrap();
            }
        }
        out
    }

    fn means(&self) -> [f64; 2] {
        [0, 1].map(|x| self.pop[x].iter().sum::<f64>() / self.size().max(1) as f64)
    }

    /// Empirical CDF on a `bins`-cell grid over [0, 1].
    fn cdf_hist(&self, x: usize, bins: usize) -> Vec<f64> {
        let mut counts = vec![0usize; bins + 1];
        for &v in &self.pop[x] {
            let b = ((v * bins as f64) as usize).min(bins);
            counts[b] += 1;
        }
        let mut acc = 0usize;
        let total = self.pop[x].len() as f64;
        counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }
}

/// An integer offspring law the sampler can draw from.
#[derive(Debug, Clone)]
pub enum OffspringLaw {
    /// Poisson with the given rate; rate 0 is the constant 0.
    Poisson(f64),
    /// Finite-support law sampled by inverse CDF.
    Truncated(FiniteDegreeLaw),
}

impl OffspringLaw {
    /// The excess (size-biased minus one) law. Poisson is its own excess
    /// law; finite laws get the explicit transform.
    pub fn excess(&self) -> OffspringLaw {
        match self {
            OffspringLaw::Poisson(r) => OffspringLaw::Poisson(*r),
            OffspringLaw::Truncated(law) => OffspringLaw::Truncated(
                law.excess()
                    .unwrap_or_else(|| FiniteDegreeLaw::point_mass(0)),
            ),
        }
    }
}

/// A compiled law: distributions precomputed for fast repeated sampling.
#[derive(Debug, Clone)]
enum Sampler {
    Zero,
    Poisson(Poisson<f64>),
    Table(Vec<f64>), // CDF
}

impl Sampler {
    fn compile(law: &OffspringLaw) -> Self {
        match law {
            OffspringLaw::Poisson(r) if *r == 0.0 => Sampler::Zero,
            OffspringLaw::Poisson(r) => Sampler::Poisson(Poisson::new(*r).expect("rate > 0")),
            OffspringLaw::Truncated(law) => {
                let mut acc = 0.0;
                Sampler::Table(
                    law.weights()
                        .iter()
                        .map(|w| {
                            acc += w;
                            acc
                        })
                        .collect(),
                )
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Sampler::Zero => 0,
            Sampler::Poisson(p) => p.sample(rng) as usize,
            Sampler::Table(cdf) => {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c < u)
            }
        }
    }
}

/// The operator `Theta` for one model, with root and interior (excess)
/// offspring laws per type on both sides.
#[derive(Debug, Clone)]
pub struct RdeSystem {
    p: [f64; 2],
    a_left: [[f64; 2]; 2],
    a_right: [[f64; 2]; 2],
    root_supply: [Sampler; 2],
    excess_supply: [Sampler; 2],
    excess_demand: [Sampler; 2],
}

impl RdeSystem {
    /// Poisson laws from the model rates. Root and interior supply laws
    /// coincide because Poisson is its own excess distribution.
    pub fn poisson(m: &ModelSpec) -> Self {
        let root: [OffspringLaw; 2] = [
            OffspringLaw::Poisson(m.lambda[0]),
            OffspringLaw::Poisson(m.lambda[1]),
        ];
        let demand: [OffspringLaw; 2] = [
            OffspringLaw::Poisson(m.big_m[0]),
            OffspringLaw::Poisson(m.big_m[1]),
        ];
        Self::from_laws(m, root, demand)
    }

    /// Truncated-Poisson laws at cutoff `d` (mass-to-zero truncation), used
    /// to bridge to the bounded-degree theory.
    pub fn truncated(m: &ModelSpec, d: usize) -> Self {
        let root: [OffspringLaw; 2] = [
            OffspringLaw::Truncated(FiniteDegreeLaw::truncated_poisson(m.lambda[0], d)),
            OffspringLaw::Truncated(FiniteDegreeLaw::truncated_poisson(m.lambda[1], d)),
        ];
        let demand: [OffspringLaw; 2] = [
            OffspringLaw::Truncated(FiniteDegreeLaw::truncated_poisson(m.big_m[0], d)),
            OffspringLaw::Truncated(FiniteDegreeLaw::truncated_poisson(m.big_m[1], d)),
        ];
        Self::from_laws(m, root, demand)
    }

    fn from_laws(m: &ModelSpec, root_supply: [OffspringLaw; 2], demand: [OffspringLaw; 2]) -> Self {
        Self {
            p: m.p,
            a_left: m.a_left,
            a_right: m.a_right,
            excess_supply: [
                Sampler::compile(&root_supply[0].excess()),
                Sampler::compile(&root_supply[1].excess()),
            ],
            root_supply: [
                Sampler::compile(&root_supply[0]),
                Sampler::compile(&root_supply[1]),
            ],
            excess_demand: [
                Sampler::compile(&demand[0].excess()),
                Sampler::compile(&demand[1].excess()),
            ],
        }
    }

    fn pick(row: &[f64; 2], rng: &mut ChaCha8Rng) -> usize {
        usize::from(rng.random::<f64>() >= row[0])
    }

    /// One draw of `Y_x` against the current populations.
    fn sample_y(&self, x: usize, root: bool, state: &PopulationState, rng: &mut ChaCha8Rng) -> f64 {
        let law = if root {
            &self.root_supply[x]
        } else {
            &self.excess_supply[x]
        };
        let n = law.sample(rng);
        if n == 0 {
            return 1.0;
        }
        let size = state.size();
        let mut acc = 0.0;
        for _ in 0..n {
            let y = Self::pick(&self.a_left[x], rng);
            let np = self.excess_demand[y].sample(rng);
            let mut s = 0.0;
            for _ in 0..np {
                let xp = Self::pick(&self.a_right[y], rng);
                s += state.pop[xp][rng.random_range(0..size)];
            }
            if s == 0.0 {
                // one infinite term makes the whole sum infinite
                return 0.0;
            }
            acc += 1.0 / s;
        }
        1.0 / (1.0 + acc)
    }

    /// One application of `Theta`. `root_laws` selects the root supply law
    /// instead of the excess law. Sample `k` of type `x` uses the sub-seed
    /// `mix(seed, [3, x, k])`, so output is independent of worker count.
    pub fn theta_step(
        &self,
        state: &PopulationState,
        root_laws: bool,
        seed: u64,
    ) -> PopulationState {
        let size = state.size();
        let new = [0, 1].map(|x| {
            (0..size)
                .into_par_iter()
                .map(|k| {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(mix(seed, &[3, x as u64, k as u64]));
                    self.sample_y(x, root_laws, state, &mut rng)
                })
                .collect()
        });
        PopulationState {
            pop: new,
            iteration: state.iteration + 1,
        }
    }

    /// Iterates `Theta` from the all-ones populations (stochastically
    /// largest) for `iters` interior steps, collecting diagnostics.
    pub fn solve_fixed_point(
        &self,
        pop_size: usize,
        iters: usize,
        seed: u64,
    ) -> (PopulationState, RdeDiagnostics) {
        let mut state = PopulationState::all_ones(pop_size);
        let mut diag = RdeDiagnostics::default();
        let mut prev_cdf = [state.cdf_hist(0, 100), state.cdf_hist(1, 100)];
        for it in 0..iters {
            state = self.theta_step(&state, false, mix(seed, &[4, it as u64]));
            let cdf = [state.cdf_hist(0, 100), state.cdf_hist(1, 100)];
            let dist = |a: &[f64], b: &[f64]| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max)
            };
            diag.cdf_dist
                .push((dist(&cdf[0], &prev_cdf[0]), dist(&cdf[1], &prev_cdf[1])));
            diag.positivity.push(self.positivity_vector(&state));
            diag.means.push(state.means());
            prev_cdf = cdf;
        }
        (state, diag)
    }

    /// Positivity vector `t[y] = sum_x a_right[y][x] P(pop_x > 0)`. The
    /// threshold is exactly zero: zeros arise only through the explicit
    /// convention branch, never through rounding.
    pub fn positivity_vector(&self, state: &PopulationState) -> (f64, f64) {
        let frac = [0, 1].map(|x| {
            state.pop[x].iter().filter(|&&v| v > 0.0).count() as f64 / state.size() as f64
        });
        (
            self.a_right[0][0] * frac[0] + self.a_right[0][1] * frac[1],
            self.a_right[1][0] * frac[0] + self.a_right[1][1] * frac[1],
        )
    }

    /// Solves the fixed point, then draws `root_samples` root values
    /// `R* ~ sum_x p[x] (Theta mu*)_x` with the root supply law, returning
    /// `eta_hat = 1 - mean(R*)` with its standard error.
    pub fn matching_rate(
        &self,
        pop_size: usize,
        iters: usize,
        root_samples: usize,
        seed: u64,
    ) -> RdeEstimate {
        let (state, diag) = self.solve_fixed_point(pop_size, iters, seed);
        let vals: Vec<f64> = (0..root_samples)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[5, k as u64]));
                let x = usize::from(rng.random::<f64>() >= self.p[0]);
                self.sample_y(x, true, &state, &mut rng)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / root_samples as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (root_samples - 1).max(1) as f64;
        RdeEstimate {
            eta_hat: 1.0 - mean,
            std_err: (var / root_samples as f64).sqrt(),
            t_hat: self.positivity_vector(&state),
            state,
            diagnostics: diag,
        }
    }
}

/// Per-iteration convergence diagnostics.
#[derive(Debug, Clone, Default)]
pub struct RdeDiagnostics {
    /// Sup distance between successive empirical CDFs (100-bin grid).
    pub cdf_dist: Vec<(f64, f64)>,
    /// Positivity vector after each iteration.
    pub positivity: Vec<(f64, f64)>,
    /// Population means after each iteration.
    pub means: Vec<[f64; 2]>,
}

/// Output of [`RdeSystem::matching_rate`].
#[derive(Debug, Clone)]
pub struct RdeEstimate {
    pub eta_hat: f64,
    pub std_err: f64,
    /// Positivity vector of the final populations.
    pub t_hat: (f64, f64),
    pub state: PopulationState,
    pub diagnostics: RdeDiagnostics,
}

/// One interior (or root) `Theta` step under Poisson laws.
pub fn theta_step(
    state: &PopulationState,
    m: &ModelSpec,
    root_laws: bool,
    seed: u64,
) -> PopulationState {
    RdeSystem::poisson(m).theta_step(state, root_laws, seed)
}

/// Fixed-point iteration under Poisson laws from the all-ones start.
pub fn solve_fixed_point(
    m: &ModelSpec,
    pop_size: usize,
    iters: usize,
    seed: u64,
) -> (PopulationState, RdeDiagnostics) {
    RdeSystem::poisson(m).solve_fixed_point(pop_size, iters, seed)
}

/// Positivity vector of a state under the model's mixing matrix.
pub fn positivity_vector(state: &PopulationState, m: &ModelSpec) -> (f64, f64) {
    RdeSystem::poisson(m).positivity_vector(state)
}

/// Matching-rate estimate under Poisson laws.
pub fn rde_matching_rate(
    m: &ModelSpec,
    pop_size: usize,
    iters: usize,
    root_samples: usize,
    seed: u64,
) -> RdeEstimate {
    RdeSystem::poisson(m).matching_rate(pop_size, iters, root_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_model, FlexScenario};
    use crate::variational::{maximize_f, MaximizeOptions};

    fn model(b: f64, a: f64, af: f64) -> ModelSpec {
        derive_model(&FlexScenario::two_sided(b, a, af).unwrap()).unwrap()
    }

    #[test]
    fn empty_graph_populations_stay_at_one() {
        let m = model(0.5, 0.0, 0.0);
        let sys = RdeSystem::poisson(&m);
        let (state, _) = sys.solve_fixed_point(200, 5, 1);
        assert!(state.pop.iter().flatten().all(|&v| v == 1.0));
        let est = sys.matching_rate(200, 3, 500, 1);
        assert_eq!(est.eta_hat, 0.0);
    }

    #[test]
    fn zero_populations_map_to_zero_or_one() {
        // From all-zero populations, any sample with children is killed by the
        // inverse conventions; samples without children are exactly one.
        let m = model(0.6, 1.0, 5.0);
        let state = PopulationState {
            pop: [vec![0.0; 500], vec![0.0; 500]],
            iteration: 0,
        };
        let next = theta_step(&state, &m, false, 9);
        assert!(next.pop.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
        // stochastically below the all-ones image
        let ones = PopulationState::all_ones(500);
        let next_ones = theta_step(&ones, &m, false, 9);
        let mean = |s: &PopulationState, x: usize| {
            s.pop[x].iter().sum::<f64>() / s.pop[x].len() as f64
        };
        for x in 0..2 {
            assert!(mean(&next, x) <= mean(&next_ones, x) + 1e-12);
        }
    }

    #[test]
    fn samples_stay_in_unit_interval() {
        let m = model(0.6, 1.0, 5.0);
        let (state, _) = solve_fixed_point(&m, 2_000, 10, 3);
        assert!(state
            .pop
            .iter()
            .flatten()
            .all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn theta_step_deterministic_in_seed() {
        let m = model(0.6, 1.0, 5.0);
        let state = PopulationState::all_ones(300);
        let a = theta_step(&state, &m, false, 7);
        let b = theta_step(&state, &m, false, 7);
        assert_eq!(a, b);
        let c = theta_step(&state, &m, false, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn positivity_vector_degenerate_cases() {
        let m = model(0.6, 1.0, 5.0);
        let ones = PopulationState::all_ones(100);
        let t = positivity_vector(&ones, &m);
        assert!((t.0 - 1.0).abs() < 1e-12 && (t.1 - 1.0).abs() < 1e-12);
        let zeros = PopulationState {
            pop: [vec![0.0; 100], vec![0.0; 100]],
            iteration: 0,
        };
        assert_eq!(positivity_vector(&zeros, &m), (0.0, 0.0));
    }

    #[test]
    fn population_means_decrease_from_ones() {
        let m = model(0.6, 1.0, 5.0);
        let (_, diag) = solve_fixed_point(&m, 20_000, 12, 5);
        let noise = 3.0 / (20_000f64).sqrt();
        for x in 0..2 {
            for w in diag.means.windows(2) {
                assert!(
                    w[1][x] <= w[0][x] + noise,
                    "mean increased: {} -> {}",
                    w[0][x],
                    w[1][x]
                );
            }
        }
    }

    #[test]
    fn positivity_tracks_variational_maximizer() {
        let m = model(0.6, 1.0, 5.0);
        let sys = RdeSystem::poisson(&m);
        let (state, _) = sys.solve_fixed_point(20_000, 60, 13);
        let t_hat = sys.positivity_vector(&state);
        let t_star = maximize_f(&m, &MaximizeOptions::default()).unwrap().t_star;
        assert!((t_hat.0 - t_star.0).abs() < 0.02, "{t_hat:?} vs {t_star:?}");
        assert!((t_hat.1 - t_star.1).abs() < 0.02, "{t_hat:?} vs {t_star:?}");
    }

    #[test]
    fn single_type_er_matches_variational_eta() {
        // alpha = alpha_f collapses to a single-type bipartite ER graph.
        let m = model(0.4, 1.0, 1.0);
        let est = RdeSystem::poisson(&m).matching_rate(20_000, 40, 100_000, 21);
        let eta = maximize_f(&m, &MaximizeOptions::default()).unwrap().eta;
        assert!(
            (est.eta_hat - eta).abs() <= 0.01,
            "rde {} vs formula {eta}",
            est.eta_hat
        );
    }

    #[test]
    fn truncated_mode_close_to_poisson_mode() {
        let m = model(0.6, 1.0, 5.0);
        let pois = RdeSystem::poisson(&m).matching_rate(20_000, 40, 100_000, 31);
        let trunc = RdeSystem::truncated(&m, 30).matching_rate(20_000, 40, 100_000, 31);
        assert!(
            (pois.eta_hat - trunc.eta_hat).abs() <= 0.005,
            "poisson {} vs truncated {}",
            pois.eta_hat,
            trunc.eta_hat
        );
    }

    #[test]
    fn dump_lists_both_populations() {
        let state = PopulationState {
            pop: [vec![0.25, 1.0], vec![0.0, 0.5]],
            iteration: 3,
        };
        let text = state.dump();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!((lines[0].parse::<f64>().unwrap() - 0.25).abs() < 1e-15);
        assert!((lines[3].parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
    }
}
