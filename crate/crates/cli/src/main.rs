//! Command-line front end: exact rates, dominance sweeps, simulation and
//! population-dynamics cross-checks, limits and bounds, and the acceptance
//! check suite.
//!
//! Exit codes: 0 success, 2 parameter error, 3 numeric failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use flexmatch::asymptotics::{
    alpha_low, b_star, limit_unmatched, solve_alpha_bar, solve_c_b, solve_phi_ts_maximizer,
    solve_z,
};
use flexmatch::atlas::{cells_to_csv, sweep_with, GridSpec, DEFAULT_TIE_TOL};
use flexmatch::fmz::fmz_bounds;
use flexmatch::graph::monte_carlo_rate;
use flexmatch::model::{derive_model, Allocation, FlexScenario, ModelError};
use flexmatch::rde::RdeSystem;
use flexmatch::validation;
use flexmatch::variational::{eta_pair_with, maximize_f, MaximizeOptions, VariationalError};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "flexmatch",
    version,
    about = "Matching rates and flexibility-allocation analysis for 2-type bipartite markets"
)]
struct Cli {
    /// Worker threads for parallel sweeps and trials (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the artifact to this path instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact format (default: json for scalar commands, csv for sweep)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Master seed; recorded in every artifact
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// `one`, `two`, or `custom:<bL>,<bR>`.
#[derive(Clone, Copy, Debug)]
struct Side(Allocation);

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one" => Ok(Side(Allocation::OneSided)),
            "two" => Ok(Side(Allocation::TwoSided)),
            other => {
                let rest = other
                    .strip_prefix("custom:")
                    .ok_or("expected one|two|custom:<bL>,<bR>")?;
                let (l, r) = rest.split_once(',').ok_or("custom needs <bL>,<bR>")?;
                let b_left: f64 = l.trim().parse().map_err(|e| format!("bad bL: {e}"))?;
                let b_right: f64 = r.trim().parse().map_err(|e| format!("bad bR: {e}"))?;
                Ok(Side(Allocation::Custom { b_left, b_right }))
            }
        }
    }
}

impl Side {
    fn label(&self) -> String {
        match self.0 {
            Allocation::OneSided => "one".into(),
            Allocation::TwoSided => "two".into(),
            Allocation::Custom { b_left, b_right } => format!("custom:{b_left},{b_right}"),
        }
    }
}

/// `min:max:count` inclusive grid.
#[derive(Clone, Copy, Debug)]
struct GridArg(GridSpec);

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("expected min:max:count".into());
        }
        let min: f64 = parts[0].parse().map_err(|e| format!("bad min: {e}"))?;
        let max: f64 = parts[1].parse().map_err(|e| format!("bad max: {e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
        if count == 0 || max < min {
            return Err("need count >= 1 and max >= min".into());
        }
        Ok(GridArg(GridSpec::new(min, max, count)))
    }
}

#[derive(Args)]
struct PointArgs {
    /// Total flexibility budget B in [0, 1]
    #[arg(long)]
    budget: f64,
    /// Baseline connection rate
    #[arg(long)]
    alpha: f64,
    /// Flexibility premium (must be >= alpha)
    #[arg(long = "alpha-f")]
    alpha_f: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact matching rates and the advantage ratio at one point
    Eval {
        #[command(flatten)]
        point: PointArgs,
        /// Grid resolution of the maximizer fallback
        #[arg(long = "grid-n", default_value_t = 401)]
        grid_n: usize,
    },
    /// Dominance sweep over (B, alpha, alpha_f); emits the cell CSV
    Sweep {
        /// Comma-separated budgets, e.g. 0.1,0.5,1.0
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        /// alpha grid as min:max:count
        #[arg(long = "alpha-grid", default_value = "0.1:5:50")]
        alpha_grid: GridArg,
        /// alpha_f grid as min:max:count
        #[arg(long = "alpha-f-grid", default_value = "0.1:10:50")]
        alpha_f_grid: GridArg,
        /// Absolute tie tolerance on |eta_os - eta_ts|
        #[arg(long = "tie-tol", default_value_t = DEFAULT_TIE_TOL)]
        tie_tol: f64,
        #[arg(long = "grid-n", default_value_t = 401)]
        grid_n: usize,
    },
    /// Sample finite graphs and compare the matched fraction to the formula
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        /// Allocation: one, two, or custom:<bL>,<bR>
        #[arg(long, default_value = "one")]
        side: Side,
        /// Nodes per side
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Write the first trial's graph as a plain-text edge list
        #[arg(long = "dump-graph")]
        dump_graph: Option<PathBuf>,
    },
    /// Population-dynamics estimate of the matching rate
    Rde {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value = "one")]
        side: Side,
        #[arg(long = "pop-size", default_value_t = 100_000)]
        pop_size: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long = "root-samples", default_value_t = 1_000_000)]
        root_samples: usize,
        /// Write the final populations (one value per line) to this path
        #[arg(long = "dump-pop")]
        dump_pop: Option<PathBuf>,
    },
    /// Large-premium limit quantities and scalar thresholds
    Limits {
        /// Total flexibility budget B in (0, 1)
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Closed-form comparison bounds at one point
    Bounds {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Run the acceptance checks and print a pass/fail table
    Validate {
        /// Comma-separated criterion ids (default: all)
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<usize>>,
    },
}

enum CliError {
    Parameter(String),
    Numeric(String),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Parameter(e.to_string())
    }
}

impl From<VariationalError> for CliError {
    fn from(e: VariationalError) -> Self {
        match e {
            VariationalError::Model(m) => CliError::Parameter(m.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<flexmatch::graph::GraphError> for CliError {
    fn from(e: flexmatch::graph::GraphError) -> Self {
        CliError::Parameter(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Parameter(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn scenario_for(point: &PointArgs, side: Side) -> Result<FlexScenario, CliError> {
    Ok(FlexScenario::new(
        point.alpha,
        point.alpha_f,
        point.budget,
        side.0,
    )?)
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let format = cli.format.unwrap_or(match cli.command {
        Command::Sweep { .. } => Format::Csv,
        _ => Format::Json,
    });
    match &cli.command {
        Command::Eval { point, grid_n } => {
            if *grid_n < 2 {
                return Err(CliError::Parameter("--grid-n must be at least 2".into()));
            }
            let opts = MaximizeOptions {
                grid_n: Some(*grid_n),
                ..MaximizeOptions::default()
            };
            let pair = eta_pair_with(point.budget, point.alpha, point.alpha_f, &opts)?;
            let config = json!({
                "command": "eval",
                "budget": point.budget,
                "alpha": point.alpha,
                "alpha_f": point.alpha_f,
                "grid_n": grid_n,
                "seed": cli.seed,
            });
            let artifact = json!({
                "config": config,
                "eta_os": pair.eta_os,
                "eta_ts": pair.eta_ts,
                "adv_os": pair.adv_os,
                "t_star_os": [pair.t_star_os.0, pair.t_star_os.1],
                "t_star_ts": [pair.t_star_ts.0, pair.t_star_ts.1],
            });
            emit(cli, format, &artifact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            budgets,
            alpha_grid,
            alpha_f_grid,
            tie_tol,
            grid_n,
        } => {
            if *grid_n < 2 || *tie_tol <= 0.0 {
                return Err(CliError::Parameter(
                    "--grid-n must be >= 2 and --tie-tol > 0".into(),
                ));
            }
            if budgets
                .iter()
                .any(|b| !(0.0..=1.0).contains(b) || !b.is_finite())
            {
                return Err(CliError::Parameter("budgets must lie in [0, 1]".into()));
            }
            let opts = MaximizeOptions {
                grid_n: Some(*grid_n),
                ..MaximizeOptions::default()
            };
            let cells = sweep_with(budgets, &alpha_grid.0, &alpha_f_grid.0, *tie_tol, &opts)?;
            let config = json!({
                "command": "sweep",
                "budgets": budgets,
                "alpha_grid": format!("{}:{}:{}", alpha_grid.0.min, alpha_grid.0.max, alpha_grid.0.count),
                "alpha_f_grid": format!("{}:{}:{}", alpha_f_grid.0.min, alpha_f_grid.0.max, alpha_f_grid.0.count),
                "tie_tol": tie_tol,
                "grid_n": grid_n,
                "seed": cli.seed,
            });
            match format {
                Format::Csv => {
                    let mut text = cells_to_csv(&cells);
                    text.push_str(&format!("# config: {config}\n"));
                    write_out(cli, &text)?;
                }
                Format::Json => {
                    let rows: Vec<Value> = cells
                        .iter()
                        .map(|c| {
                            json!({
                                "budget": c.budget,
                                "alpha": c.alpha,
                                "alpha_f": c.alpha_f,
                                "eta_os": c.eta_os,
                                "eta_ts": c.eta_ts,
                                "adv_os": c.adv_os,
                                "verdict": c.verdict.as_csv(),
                                "fmz_admissible": c.fmz_admissible,
                            })
                        })
                        .collect();
                    emit(cli, format, &json!({"config": config, "cells": rows}))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            point,
            side,
            n,
            trials,
        } => {
            if *n < 1 || *trials < 1 {
                return Err(CliError::Parameter("--n and --trials must be >= 1".into()));
            }
            let scenario = scenario_for(point, *side)?;
            let model = derive_model(&scenario)?;
            let (mean, std_err) = monte_carlo_rate(&model, *n, *trials, cli.seed)?;
            let eta = maximize_f(&model, &MaximizeOptions::default())?.eta;
            let config = json!({
                "command": "simulate",
                "budget": point.budget,
                "alpha": point.alpha,
                "alpha_f": point.alpha_f,
                "side": side.label(),
                "n": n,
                "trials": trials,
                "seed": cli.seed,
            });
            let artifact = json!({
                "config": config,
                "mean": mean,
                "std_err": std_err,
                "formula_eta": eta,
                "abs_gap": (mean - eta).abs(),
            });
            emit(cli, format, &artifact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rde {
            point,
            side,
            pop_size,
            iters,
            root_samples,
            dump_pop,
        } => {
            if *pop_size < 1 || *iters < 1 || *root_samples < 2 {
                return Err(CliError::Parameter(
                    "--pop-size, --iters must be >= 1 and --root-samples >= 2".into(),
                ));
            }
            let scenario = scenario_for(point, *side)?;
            let model = derive_model(&scenario)?;
            let r = maximize_f(&model, &MaximizeOptions::default())?;
            let est = RdeSystem::poisson(&model).matching_rate(
                *pop_size,
                *iters,
                *root_samples,
                cli.seed,
            );
            if let Some(path) = dump_pop {
                std::fs::write(path, est.state.dump())
                    .map_err(|e| CliError::Parameter(format!("--dump-pop: {e}")))?;
            }
            let config = json!({
                "command": "rde",
                "budget": point.budget,
                "alpha": point.alpha,
                "alpha_f": point.alpha_f,
                "side": side.label(),
                "pop_size": pop_size,
                "iters": iters,
                "root_samples": root_samples,
                "seed": cli.seed,
            });
            let artifact = json!({
                "config": config,
                "eta_hat": est.eta_hat,
                "std_err": est.std_err,
                "formula_eta": r.eta,
                "abs_gap": (est.eta_hat - r.eta).abs(),
                "t_hat": [est.t_hat.0, est.t_hat.1],
                "t_star": [r.t_star.0, r.t_star.1],
            });
            emit(cli, format, &artifact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Limits { budget, alpha } => {
            if !(*budget > 0.0 && *budget < 1.0) {
                return Err(CliError::Parameter(
                    "limits needs a budget strictly inside (0, 1)".into(),
                ));
            }
            if !(*alpha >= 0.0) {
                return Err(CliError::Parameter("alpha must be >= 0".into()));
            }
            let rep = limit_unmatched(*budget, *alpha);
            let y_star = solve_phi_ts_maximizer(*budget, *alpha).ok();
            let z = solve_z(*budget, *alpha).ok();
            let config = json!({
                "command": "limits",
                "budget": budget,
                "alpha": alpha,
                "seed": cli.seed,
            });
            let artifact = json!({
                "config": config,
                "u_os": rep.u_os,
                "u_ts": rep.u_ts,
                "y_os_star": rep.y_os_star,
                "y_ts_star": rep.y_ts_star,
                "b_star": b_star(),
                "alpha_low": alpha_low(*budget),
                "c_b": solve_c_b(*budget),
                "alpha_bar": solve_alpha_bar(*budget),
                "phi_ts_maximizer": y_star,
                "z": z.map(|s| s.z),
                "y2_star": z.map(|s| s.y2_star),
            });
            emit(cli, format, &artifact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { point } => {
            if !(point.budget > 0.0 && point.budget < 1.0) {
                return Err(CliError::Parameter(
                    "bounds needs a budget strictly inside (0, 1)".into(),
                ));
            }
            if !(point.alpha >= 0.0 && point.alpha_f > 0.0) {
                return Err(CliError::Parameter(
                    "bounds needs alpha >= 0 and alpha_f > 0".into(),
                ));
            }
            let f = fmz_bounds(point.budget, point.alpha, point.alpha_f);
            let config = json!({
                "command": "bounds",
                "budget": point.budget,
                "alpha": point.alpha,
                "alpha_f": point.alpha_f,
                "seed": cli.seed,
            });
            let artifact = json!({
                "config": config,
                "alpha_star": f.alpha_star,
                "alpha_f_star": f.alpha_f_star,
                "m_reg": f.m_reg,
                "c_fmz": f.c_fmz,
                "l_fmz": f.l_fmz,
                "u_fmz": f.u_fmz,
                "gamma": f.gamma,
                "lambda": f.lambda,
                "admissible": f.admissible,
            });
            emit(cli, format, &artifact)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { criteria } => {
            let ids: Vec<usize> = match criteria {
                Some(ids) => {
                    if ids
                        .iter()
                        .any(|&i| i == 0 || i > validation::CRITERIA_COUNT)
                    {
                        return Err(CliError::Parameter(format!(
                            "criteria ids must lie in 1..={}",
                            validation::CRITERIA_COUNT
                        )));
                    }
                    ids.clone()
                }
                None => (1..=validation::CRITERIA_COUNT).collect(),
            };
            let mut reports = Vec::new();
            for id in ids {
                let rep = validation::run_criterion(id);
                println!("{}", rep.line());
                reports.push(rep);
            }
            let all_pass = reports.iter().all(|r| r.pass);
            println!(
                "{}: {}/{} criteria passed",
                if all_pass { "OK" } else { "FAILED" },
                reports.iter().filter(|r| r.pass).count(),
                reports.len()
            );
            let config = json!({"command": "validate", "seed": cli.seed});
            let artifact = json!({
                "config": config,
                "criteria": reports.iter().map(|r| json!({
                    "id": r.id,
                    "name": r.name,
                    "pass": r.pass,
                    "detail": r.detail,
                })).collect::<Vec<_>>(),
                "all_pass": all_pass,
            });
            if let Some(path) = &cli.out {
                std::fs::write(path, format!("{:#}\n", artifact))
                    .map_err(|e| CliError::Parameter(format!("--out: {e}")))?;
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

/// Writes a scalar artifact as pretty JSON or a key,value CSV.
fn emit(cli: &Cli, format: Format, artifact: &Value) -> Result<(), CliError> {
    let text = match format {
        Format::Json => format!("{artifact:#}\n"),
        Format::Csv => {
            let mut text = String::from("key,value\n");
            let obj = artifact.as_object().expect("artifact is an object");
            for (k, v) in obj {
                if k == "config" {
                    continue;
                }
                text.push_str(&format!("{k},{v}\n"));
            }
            text.push_str(&format!("# config: {}\n", obj["config"]));
            text
        }
    };
    write_out(cli, &text)
}

fn write_out(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Parameter(format!("--out: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
