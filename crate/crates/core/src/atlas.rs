//! Dominance classification over the `(alpha, alpha_f, B)` space: per-point
//! verdicts, grid sweeps, crossover location, and plot-ready CSV output.

use crate::fmz::fmz_thresholds;
use crate::variational::{eta_pair_with, MaximizeOptions, VariationalError};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Which allocation wins at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    OneSided,
    TwoSided,
    Tie,
}

impl Verdict {
    pub fn as_csv(&self) -> &'static str {
        match self {
            Verdict::OneSided => "OS",
            Verdict::TwoSided => "TS",
            Verdict::Tie => "TIE",
        }
    }

    pub fn from_csv(s: &str) -> Option<Self> {
        match s {
            "OS" => Some(Verdict::OneSided),
            "TS" => Some(Verdict::TwoSided),
            "TIE" => Some(Verdict::Tie),
            _ => None,
        }
    }
}

/// One evaluated parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCell {
    pub budget: f64,
    pub alpha: f64,
    pub alpha_f: f64,
    pub eta_os: f64,
    pub eta_ts: f64,
    pub adv_os: f64,
    pub verdict: Verdict,
    /// Whether the closed-form two-sided-dominance certificate applies here
    /// (`alpha < alpha_star(B)` and `alpha_f > alpha_f_star(B, alpha)`).
    pub fmz_admissible: bool,
}

/// Default absolute tie tolerance on `|eta_os - eta_ts|`. A tolerance on the
/// ratio would blow up where `eta_ts` is near zero.
pub const DEFAULT_TIE_TOL: f64 = 1e-6;

/// Classifies one parameter point.
pub fn classify(
    budget: f64,
    alpha: f64,
    alpha_f: f64,
    tie_tol: f64,
) -> Result<DominanceCell, VariationalError> {
    classify_with(budget, alpha, alpha_f, tie_tol, &MaximizeOptions::default())
}

pub fn classify_with(
    budget: f64,
    alpha: f64,
    alpha_f: f64,
    tie_tol: f64,
    opts: &MaximizeOptions,
) -> Result<DominanceCell, VariationalError> {
    assert!(tie_tol > 0.0);
    let pair = eta_pair_with(budget, alpha, alpha_f, opts)?;
    let diff = pair.eta_os - pair.eta_ts;
    let verdict = if diff.abs() <= tie_tol {
        Verdict::Tie
    } else if diff > 0.0 {
        Verdict::OneSided
    } else {
        Verdict::TwoSided
    };
    let (alpha_star, alpha_f_star) = fmz_thresholds(budget, alpha);
    let fmz_admissible = alpha < alpha_star && alpha_f_star.is_some_and(|v| alpha_f > v);
    Ok(DominanceCell {
        budget,
        alpha,
        alpha_f,
        eta_os: pair.eta_os,
        eta_ts: pair.eta_ts,
        adv_os: pair.adv_os,
        verdict,
        fmz_admissible,
    })
}

/// An inclusive uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        assert!(count >= 1 && max >= min);
        Self { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Evaluates every `(B, alpha, alpha_f)` cell in row-major order
/// (budget-major, then alpha, then alpha_f). Cells with `alpha_f < alpha`
/// fall outside the parametrization and are skipped. Cells evaluate in
/// parallel; output order is deterministic.
pub fn sweep(
    b_values: &[f64],
    alpha_grid: &GridSpec,
    alpha_f_grid: &GridSpec,
    tie_tol: f64,
) -> Result<Vec<DominanceCell>, VariationalError> {
    sweep_with(
        b_values,
        alpha_grid,
        alpha_f_grid,
        tie_tol,
        &MaximizeOptions::default(),
    )
}

pub fn sweep_with(
    b_values: &[f64],
    alpha_grid: &GridSpec,
    alpha_f_grid: &GridSpec,
    tie_tol: f64,
    opts: &MaximizeOptions,
) -> Result<Vec<DominanceCell>, VariationalError> {
    let mut points = Vec::new();
    for &b in b_values {
        for &a in &alpha_grid.values() {
            for &af in &alpha_f_grid.values() {
                if af >= a {
                    points.push((b, a, af));
                }
            }
        }
    }
    points
        .into_par_iter()
        .map(|(b, a, af)| classify_with(b, a, af, tie_tol, opts))
        .collect()
}

/// Result of scanning for the smallest premium at which the two-sided
/// allocation overtakes the one-sided one.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverScan {
    /// First crossover of `eta_ts - eta_os` from `<= 0` to `> 0`, bisected
    /// to width 1e-6; absent when the scan finds no sign change.
    pub crossover: Option<f64>,
    /// Every crossing found by the coarse scan. More than one entry means
    /// the single-crossing picture does not hold at these parameters.
    pub sign_changes: Vec<f64>,
}

/// Scans `alpha_f` in `(alpha, search_max]` with 64 coarse points and
/// bisects each sign change of `eta_ts - eta_os`.
pub fn crossover_alpha_f(
    budget: f64,
    alpha: f64,
    search_max: f64,
) -> Result<CrossoverScan, VariationalError> {
    assert!(search_max > alpha);
    let opts = MaximizeOptions::default();
    let diff = |af: f64| -> Result<f64, VariationalError> {
        let p = eta_pair_with(budget, alpha, af, &opts)?;
        Ok(p.eta_ts - p.eta_os)
    };
    const COARSE: usize = 64;
    let step = (search_max - alpha) / COARSE as f64;
    let mut sign_changes = Vec::new();
    let mut prev_af = alpha + step;
    let mut prev = diff(prev_af)?;
    for i in 2..=COARSE {
        let af = alpha + i as f64 * step;
        let cur = diff(af)?;
        if prev <= 0.0 && cur > 0.0 {
            let (mut lo, mut hi) = (prev_af, af);
            while hi - lo > 1e-6 {
                let mid = 0.5 * (lo + hi);
                if diff(mid)? > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            sign_changes.push(0.5 * (lo + hi));
        }
        prev = cur;
        prev_af = af;
    }
    Ok(CrossoverScan {
        crossover: sign_changes.first().copied(),
        sign_changes,
    })
}

/// Formats a float with 12 significant digits.
fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Renders cells to the CSV schema
/// `budget,alpha,alpha_f,eta_os,eta_ts,adv_os,verdict,fmz_admissible` with a
/// mandatory header row.
pub fn cells_to_csv(cells: &[DominanceCell]) -> String {
    let mut out = String::from("budget,alpha,alpha_f,eta_os,eta_ts,adv_os,verdict,fmz_admissible\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_sig12(c.budget),
            fmt_sig12(c.alpha),
            fmt_sig12(c.alpha_f),
            fmt_sig12(c.eta_os),
            fmt_sig12(c.eta_ts),
            fmt_sig12(c.adv_os),
            c.verdict.as_csv(),
            c.fmz_admissible
        )
        .unwrap();
    }
    out
}

/// Parses [`cells_to_csv`] output. Lines starting with `#` (provenance
/// comments) are ignored.
pub fn cells_from_csv(text: &str) -> Result<Vec<DominanceCell>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or("empty csv")?;
    if header != "budget,alpha,alpha_f,eta_os,eta_ts,adv_os,verdict,fmz_admissible" {
        return Err(format!("unexpected header: {header}"));
    }
    let mut cells = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(format!("line {}: expected 8 fields", ln + 2));
        }
        let num = |i: usize| -> Result<f64, String> {
            fields[i]
                .parse()
                .map_err(|e| format!("line {}: {e}", ln + 2))
        };
        cells.push(DominanceCell {
            budget: num(0)?,
            alpha: num(1)?,
            alpha_f: num(2)?,
            eta_os: num(3)?,
            eta_ts: num(4)?,
            adv_os: num(5)?,
            verdict: Verdict::from_csv(fields[6])
                .ok_or_else(|| format!("line {}: bad verdict {}", ln + 2, fields[6]))?,
            fmz_admissible: fields[7]
                .parse()
                .map_err(|e| format!("line {}: {e}", ln + 2))?,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        // identical graph law
        let c = classify(0.5, 1.0, 1.0, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(c.verdict, Verdict::Tie);
        // full budget, distinct rates: one-sided strictly dominates
        let c = classify(1.0, 0.5, 3.0, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(c.verdict, Verdict::OneSided);
        // small budget, huge premium: two-sided
        let c = classify(0.1, 1.0, 20.0, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(c.verdict, Verdict::TwoSided);
        assert!(c.eta_os <= 1.0 && c.eta_ts <= 1.0 && c.eta_os >= 0.0);
    }

    #[test]
    fn verdict_consistent_with_ratio() {
        for (b, a, af) in [(0.6, 1.0, 5.0), (1.0, 0.0, 2.5), (0.4, 0.9, 1.1)] {
            let c = classify(b, a, af, DEFAULT_TIE_TOL).unwrap();
            match c.verdict {
                Verdict::OneSided => assert!(c.adv_os > 1.0),
                Verdict::TwoSided => assert!(c.adv_os < 1.0),
                Verdict::Tie => assert!((c.eta_os - c.eta_ts).abs() <= DEFAULT_TIE_TOL),
            }
        }
    }

    #[test]
    fn single_cell_sweep_reduces_to_classify() {
        let g1 = GridSpec::new(0.7, 0.7, 1);
        let g2 = GridSpec::new(2.0, 2.0, 1);
        let cells = sweep(&[0.5], &g1, &g2, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0], classify(0.5, 0.7, 2.0, DEFAULT_TIE_TOL).unwrap());
    }

    #[test]
    fn sweep_skips_invalid_cells_and_orders_rows() {
        let g = GridSpec::new(0.5, 1.5, 3); // {0.5, 1.0, 1.5}
        let cells = sweep(&[0.6], &g, &g, DEFAULT_TIE_TOL).unwrap();
        // upper triangle incl. diagonal: 6 cells
        assert_eq!(cells.len(), 6);
        let mut expect = Vec::new();
        for &a in &g.values() {
            for &af in &g.values() {
                if af >= a {
                    expect.push((a, af));
                }
            }
        }
        let got: Vec<(f64, f64)> = cells.iter().map(|c| (c.alpha, c.alpha_f)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn full_budget_has_no_two_sided_cells() {
        let g = GridSpec::new(0.25, 5.0, 20);
        let cells = sweep(&[1.0], &g, &g, DEFAULT_TIE_TOL).unwrap();
        assert!(cells.iter().all(|c| c.verdict != Verdict::TwoSided));
        // strict cells are one-sided
        assert!(cells
            .iter()
            .filter(|c| (c.alpha - c.alpha_f).abs() >= 0.5)
            .all(|c| c.verdict == Verdict::OneSided));
    }

    #[test]
    fn crossover_examples() {
        // B = 1: one-sided always weakly dominates, no crossing.
        let scan = crossover_alpha_f(1.0, 1.0, 30.0).unwrap();
        assert_eq!(scan.crossover, None);
        assert!(scan.sign_changes.is_empty());
        // B = 0.6, alpha = 1: a finite crossover below 50.
        let scan = crossover_alpha_f(0.6, 1.0, 50.0).unwrap();
        let c = scan.crossover.expect("crossover must exist");
        assert!(c > 1.0 && c < 50.0);
        let at = classify(0.6, 1.0, c, 1e-12).unwrap();
        assert!(
            (at.eta_ts - at.eta_os).abs() <= 1e-5,
            "residual {}",
            at.eta_ts - at.eta_os
        );
        let after = classify(0.6, 1.0, c + 0.1, 1e-12).unwrap();
        assert!(after.eta_ts > after.eta_os);
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::new(0.5, 2.0, 3);
        let cells = sweep(&[0.4, 1.0], &g, &g, DEFAULT_TIE_TOL).unwrap();
        let text = cells_to_csv(&cells);
        assert!(text.starts_with(
            "budget,alpha,alpha_f,eta_os,eta_ts,adv_os,verdict,fmz_admissible\n"
        ));
        let parsed = cells_from_csv(&text).unwrap();
        assert_eq!(parsed.len(), cells.len());
        // 12 significant digits survive the round trip bit-for-bit after
        // re-rendering
        assert_eq!(cells_to_csv(&parsed), text);
        for (a, b) in parsed.iter().zip(&cells) {
            assert_eq!(a.verdict, b.verdict);
            assert!((a.eta_os - b.eta_os).abs() < 1e-11);
        }
        // comment lines are ignored
        let with_comment = format!("{text}# config: {{\"seed\":0}}\n");
        assert_eq!(cells_from_csv(&with_comment).unwrap().len(), cells.len());
    }

    #[test]
    fn fmz_flag_marks_certified_cells() {
        // deep in the certified regime: tiny alpha, huge premium
        let c = classify(0.5, 0.01, 40.0, DEFAULT_TIE_TOL).unwrap();
        assert!(c.fmz_admissible);
        assert_eq!(c.verdict, Verdict::TwoSided);
        // outside: full budget
        let c = classify(1.0, 0.5, 3.0, DEFAULT_TIE_TOL).unwrap();
        assert!(!c.fmz_admissible);
    }
}
