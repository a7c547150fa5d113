//! Finite compatibility graphs: sampling, exact maximum matching, degree
//! truncation, and Monte-Carlo estimation of the matching fraction.

use crate::model::ModelSpec;
use crate::seed::mix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use std::collections::HashSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("dense regime: rate {rate} exceeds n = {n}, edge probability would exceed 1")]
    DenseRegime { rate: f64, n: usize },
    #[error("graph too large for exhaustive matching: n = {0} > 12")]
    TooLarge(usize),
}

/// A sampled bipartite compatibility graph with `n` nodes per side.
/// Types are 1 (regular) or 2 (flexible); adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub n: usize,
    pub supply_types: Vec<u8>,
    pub demand_types: Vec<u8>,
    /// Demand neighbors of each supply node.
    pub adjacency: Vec<Vec<u32>>,
    pub edge_count: usize,
}

impl BipartiteGraph {
    pub fn supply_degrees(&self) -> Vec<u32> {
        self.adjacency.iter().map(|a| a.len() as u32).collect()
    }

    pub fn demand_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for adj in &self.adjacency {
            for &j in adj {
                deg[j as usize] += 1;
            }
        }
        deg
    }

    /// Plain-text dump: `n <n>`, then `s <i> <type>` / `d <j> <type>` lines,
    /// then `e <i> <j>` lines. Intended for debugging and cross-implementation
    /// diffs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.n).unwrap();
        for (i, t) in self.supply_types.iter().enumerate() {
            writeln!(out, "s {i} {t}").unwrap();
        }
        for (j, t) in self.demand_types.iter().enumerate() {
            writeln!(out, "d {j} {t}").unwrap();
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &j in adj {
                writeln!(out, "e {i} {j}").unwrap();
            }
        }
        out
    }
}

/// Samples a graph from the block model: types i.i.d. from `p`/`q`, then per
/// type block `(x, y)` a `Binomial(n_x n_y, c[x][y]/n)` edge count placed
/// uniformly with duplicate pairs rejected and resampled. Deterministic in
/// `seed` (per-block sub-seeds, insertion order preserved).
pub fn sample_graph(m: &ModelSpec, n: usize, seed: u64) -> Result<BipartiteGraph, GraphError> {
    assert!(n >= 1);
    let nf = n as f64;
    if let Some(&rate) = m
        .c
        .c
        .iter()
        .flatten()
        .find(|&&rate| rate > nf)
    {
        return Err(GraphError::DenseRegime { rate, n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[0]));
    let draw_types = |rng: &mut ChaCha8Rng, p2: f64| -> Vec<u8> {
        (0..n)
            .map(|_| if rng.random::<f64>() < p2 { 2 } else { 1 })
            .collect()
    };
    let supply_types = draw_types(&mut rng, m.p[1]);
    let demand_types = draw_types(&mut rng, m.q[1]);

    let mut supply_by_type: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    let mut demand_by_type: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (i, &t) in supply_types.iter().enumerate() {
        supply_by_type[(t - 1) as usize].push(i as u32);
    }
    for (j, &t) in demand_types.iter().enumerate() {
        demand_by_type[(t - 1) as usize].push(j as u32);
    }

    let mut adjacency = vec![Vec::new(); n];
    let mut edge_count = 0usize;
    for x in 0..2 {
        for y in 0..2 {
            let nx = supply_by_type[x].len() as u64;
            let ny = demand_by_type[y].len() as u64;
            let prob = m.c.c[x][y] / nf;
            if nx == 0 || ny == 0 || prob == 0.0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[1, x as u64, y as u64]));
            let pairs = nx * ny;
            let count = Binomial::new(pairs, prob.min(1.0))
                .expect("valid binomial parameters")
                .sample(&mut rng);
            let mut seen: HashSet<u64> = HashSet::with_capacity(count as usize * 2);
            let mut placed = 0u64;
            while placed < count {
                let i = rng.random_range(0..nx);
                let j = rng.random_range(0..ny);
                if seen.insert(i * ny + j) {
                    let si = supply_by_type[x][i as usize];
                    let dj = demand_by_type[y][j as usize];
                    adjacency[si as usize].push(dj);
                    placed += 1;
                }
            }
            edge_count += count as usize;
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    Ok(BipartiteGraph {
        n,
        supply_types,
        demand_types,
        adjacency,
        edge_count,
    })
}

/// A maximum-cardinality matching with per-node partner maps.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub size: usize,
    pub fraction: f64,
    pub matched_supply: Vec<Option<u32>>,
    pub matched_demand: Vec<Option<u32>>,
}

impl MatchingResult {
    /// Checks the matching is valid for `g`: mutually consistent partner
    /// maps, each pair an actual edge, size consistent.
    pub fn is_valid_for(&self, g: &BipartiteGraph) -> bool {
        let mut count = 0;
        for (i, &mj) in self.matched_supply.iter().enumerate() {
            if let Some(j) = mj {
                if self.matched_demand[j as usize] != Some(i as u32) {
                    return false;
                }
                if g.adjacency[i].binary_search(&j).is_err() {
                    return false;
                }
                count += 1;
            }
        }
        let back = self
            .matched_demand
            .iter()
            .filter(|d| d.is_some())
            .count();
        count == self.size && back == self.size
    }
}

const UNMATCHED: u32 = u32::MAX;

/// Maximum-cardinality matching via Hopcroft-Karp: BFS builds level sets from
/// free supply nodes, DFS augments along them, repeated until no augmenting
/// path exists. Deterministic given adjacency order.
pub fn max_matching(g: &BipartiteGraph) -> MatchingResult {
    let n = g.n;
    let mut ms = vec![UNMATCHED; n]; // supply -> demand
    let mut md = vec![UNMATCHED; n]; // demand -> supply
    let mut dist = vec![u32::MAX; n];
    let mut queue = Vec::with_capacity(n);

    loop {
        // BFS over supply nodes; level 0 = free supply nodes.
        queue.clear();
        for i in 0..n {
            if ms[i] == UNMATCHED {
                dist[i] = 0;
                queue.push(i as u32);
            } else {
                dist[i] = u32::MAX;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head] as usize;
            head += 1;
            for &j in &g.adjacency[i] {
                let owner = md[j as usize];
                if owner == UNMATCHED {
                    found = true;
                } else if dist[owner as usize] == u32::MAX {
                    dist[owner as usize] = dist[i] + 1;
                    queue.push(owner);
                }
            }
        }
        if !found {
            break;
        }
        for i in 0..n {
            if ms[i] == UNMATCHED {
                augment(g, i, &mut ms, &mut md, &mut dist);
            }
        }
    }

    let size = ms.iter().filter(|&&j| j != UNMATCHED).count();
    MatchingResult {
        size,
        fraction: size as f64 / n as f64,
        matched_supply: ms
            .iter()
            .map(|&j| (j != UNMATCHED).then_some(j))
            .collect(),
        matched_demand: md
            .iter()
            .map(|&i| (i != UNMATCHED).then_some(i))
            .collect(),
    }
}

fn augment(g: &BipartiteGraph, i: usize, ms: &mut [u32], md: &mut [u32], dist: &mut [u32]) -> bool {
    let d = dist[i];
    dist[i] = u32::MAX; // visited
    for &j in &g.adjacency[i] {
        let owner = md[j as usize];
        if owner == UNMATCHED
            || (dist[owner as usize] == d + 1 && augment(g, owner as usize, ms, md, dist))
        {
            ms[i] = j;
            md[j as usize] = i as u32;
            return true;
        }
    }
    false
}

/// Exact maximum matching size by exhaustive augmenting-path search, as an
/// independent oracle for [`max_matching`]. Limited to `n <= 12`.
pub fn brute_force_matching(g: &BipartiteGraph) -> Result<usize, GraphError> {
    if g.n > 12 {
        return Err(GraphError::TooLarge(g.n));
    }
    fn try_augment(g: &BipartiteGraph, i: usize, seen: &mut [bool], md: &mut [Option<usize>]) -> bool {
        for &j in &g.adjacency[i] {
            let j = j as usize;
            if !seen[j] {
                seen[j] = true;
                if md[j].is_none() || try_augment(g, md[j].unwrap(), seen, md) {
                    md[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut md: Vec<Option<usize>> = vec![None; g.n];
    let mut size = 0;
    for i in 0..g.n {
        let mut seen = vec![false; g.n];
        if try_augment(g, i, &mut seen, &mut md) {
            size += 1;
        }
    }
    Ok(size)
}

/// Isolates every vertex (either side) of degree greater than `d` by removing
/// all of its incident edges. Returns the truncated graph and the number of
/// isolated vertices; the matching size can drop by at most that count.
pub fn truncate(g: &BipartiteGraph, d: usize) -> (BipartiteGraph, usize) {
    let sdeg = g.supply_degrees();
    let ddeg = g.demand_degrees();
    let d = d as u32;
    let supply_iso: Vec<bool> = sdeg.iter().map(|&k| k > d).collect();
    let demand_iso: Vec<bool> = ddeg.iter().map(|&k| k > d).collect();
    let isolated_count = supply_iso.iter().filter(|&&b| b).count()
        + demand_iso.iter().filter(|&&b| b).count();
    let mut adjacency = vec![Vec::new(); g.n];
    let mut edge_count = 0;
    for (i, adj) in g.adjacency.iter().enumerate() {
        if supply_iso[i] {
            continue;
        }
        for &j in adj {
            if !demand_iso[j as usize] {
                adjacency[i].push(j);
                edge_count += 1;
            }
        }
    }
    (
        BipartiteGraph {
            n: g.n,
            supply_types: g.supply_types.clone(),
            demand_types: g.demand_types.clone(),
            adjacency,
            edge_count,
        },
        isolated_count,
    )
}

/// Mean and standard error of the matched fraction `M(G)/n` over independent
/// seeded trials. Trial `i` uses the sub-seed `mix(seed, [2, i])`; trials run
/// in parallel with results identical to sequential execution.
pub fn monte_carlo_rate(
    m: &ModelSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), GraphError> {
    assert!(trials >= 1);
    let fractions: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let g = sample_graph(m, n, mix(seed, &[2, i as u64]))?;
            Ok(max_matching(&g).fraction)
        })
        .collect::<Result<_, GraphError>>()?;
    let mean = fractions.iter().sum::<f64>() / trials as f64;
    let std_err = if trials > 1 {
        let var = fractions.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, std_err))
}
