//! The `run` and `sweep` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use linexp3::evaluation::{regret_grid, run_episode_against, slope_fit, ComparatorPolicy, RegretAccumulator};
use linexp3::{Environment, RegretCurve};

use crate::config::{ExperimentConfig, Resolved};
use crate::output::{curve_csv, json_number, sweep_csv};
use crate::CliError;

/// Sweep seeds are spaced this far apart per grid index.
pub const SWEEP_SEED_STRIDE: u64 = 1_000_000;

/// Where results go: files, or stdout (CSV) and stderr (summary).
#[derive(Debug, Clone, PartialEq)]
pub enum Sink {
    Files { csv: PathBuf, summary: PathBuf },
    Console,
}

impl Sink {
    pub fn new(output: Option<&str>) -> Self {
        match output {
            None => Sink::Console,
            Some(path) => Sink::Files {
                csv: PathBuf::from(path),
                summary: summary_path(Path::new(path)),
            },
        }
    }

    fn write(&self, csv: &str, summary: &serde_json::Value) -> Result<(), CliError> {
        let summary = serde_json::to_string_pretty(summary).expect("serializable summary") + "\n";
        match self {
            Sink::Console => {
                print!("{csv}");
                eprint!("{summary}");
                Ok(())
            }
            Sink::Files { csv: csv_path, summary: summary_path } => {
                if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                std::fs::write(csv_path, csv).map_err(|e| CliError::io(csv_path, e))?;
                std::fs::write(summary_path, summary).map_err(|e| CliError::io(summary_path, e))
            }
        }
    }
}

/// `results.csv` → `results.json`; `results.json` → `results.summary.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    match csv.extension().and_then(|e| e.to_str()) {
        Some("json") => csv.with_extension("summary.json"),
        _ => csv.with_extension("json"),
    }
}

/// Result of all replications at one horizon.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub horizon: usize,
    pub seed: u64,
    pub env: Environment,
    pub resolved: Resolved,
    pub curve: RegretCurve,
    pub wall_seconds: f64,
}

/// Runs every replication on `pool`; the result does not depend on the pool size.
pub fn execute(
    config: &ExperimentConfig,
    horizon: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let env = config.build_environment(horizon)?;
    let resolved = config.resolve(&env, horizon)?;
    let comparator = ComparatorPolicy::new(&env.adversary, horizon);
    let grid = regret_grid(horizon);
    let traces = pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| {
                run_episode_against(&env, &comparator, &resolved.learner, horizon, seed, r)
                    .map(|record| record.trace(&grid))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut acc = RegretAccumulator::new(grid);
    for trace in &traces {
        acc.push(trace)?;
    }
    Ok(RunOutcome {
        horizon,
        seed,
        env,
        resolved,
        curve: acc.finish(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn params_json(config: &ExperimentConfig, outcome: &RunOutcome) -> serde_json::Value {
    let l = &outcome.resolved.learner;
    let c = &outcome.resolved.clamped;
    let b = &outcome.env.bounds;
    json!({
        "T": outcome.horizon,
        "seed": outcome.seed,
        "eta": json_number(l.eta),
        "gamma": json_number(l.gamma),
        "beta": l.mgr.map(|m| json_number(m.beta())),
        "M": l.mgr.map(|m| m.iterations()),
        "auto": {
            "eta": config.eta.is_auto(),
            "gamma": config.gamma.is_auto(),
            "beta": config.beta.is_auto(),
            "M": config.iterations.is_auto(),
        },
        "clamped": {
            "eta": c.eta,
            "gamma": c.gamma,
            "log_argument": c.log_argument,
        },
        "warnings": outcome.resolved.warnings,
        "environment": {
            "sigma": json_number(b.sigma),
            "param_norm": json_number(b.param_norm),
            "lambda_min": json_number(b.lambda_min),
            "epsilon": json_number(outcome.env.adversary.epsilon()),
        },
    })
}

pub fn cmd_run(config: &ExperimentConfig, pool: &rayon::ThreadPool, sink: &Sink) -> Result<RunOutcome, CliError> {
    let outcome = execute(config, config.horizon, config.seed, pool)?;
    let summary = json!({
        "command": "run",
        "algorithm": config.algorithm.name(),
        "K": config.arms,
        "d": config.dim,
        "replications": config.replications,
        "mgr_mode": format!("{:?}", config.mgr_mode).to_lowercase(),
        "resolved": params_json(config, &outcome),
        "final_regret": json_number(outcome.curve.final_regret()),
        "final_stderr": json_number(outcome.curve.final_stderr()),
        "wall_time_seconds": outcome.wall_seconds,
    });
    sink.write(&curve_csv(&outcome.curve), &summary)?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub runs: Vec<RunOutcome>,
    pub exponent: f64,
}

pub fn cmd_sweep(
    config: &ExperimentConfig,
    grid: &[usize],
    pool: &rayon::ThreadPool,
    sink: &Sink,
) -> Result<SweepOutcome, CliError> {
    if grid.len() < 3 {
        return Err(CliError::Usage("--grid needs at least three horizons".into()));
    }
    if grid.iter().any(|t| *t == 0) {
        return Err(CliError::Usage("--grid horizons must be at least 1".into()));
    }
    let start = Instant::now();
    let runs = grid
        .iter()
        .enumerate()
        .map(|(i, t)| execute(config, *t, config.seed.wrapping_add(i as u64 * SWEEP_SEED_STRIDE), pool))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<(usize, f64, f64)> = runs
        .iter()
        .map(|r| (r.horizon, r.curve.final_regret(), r.curve.final_stderr()))
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|(t, r, _)| (*t as f64, *r)).collect();
    let fit = slope_fit(&points);
    let summary = json!({
        "command": "sweep",
        "algorithm": config.algorithm.name(),
        "K": config.arms,
        "d": config.dim,
        "replications": config.replications,
        "grid": grid,
        "exponent": fit.as_ref().ok().map(|e| json_number(*e)),
        "exponent_error": fit.as_ref().err().map(|e| e.to_string()),
        "runs": runs.iter().map(|r| {
            let mut v = params_json(config, r);
            v["final_regret"] = json_number(r.curve.final_regret());
            v["final_stderr"] = json_number(r.curve.final_stderr());
            v["wall_time_seconds"] = json!(r.wall_seconds);
            v
        }).collect::<Vec<_>>(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    sink.write(&sweep_csv(&rows), &summary)?;
    let exponent = fit.map_err(CliError::from)?;
    Ok(SweepOutcome {
        runs,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_next_to_csv() {
        assert_eq!(summary_path(Path::new("out/r.csv")), PathBuf::from("out/r.json"));
        assert_eq!(summary_path(Path::new("r")), PathBuf::from("r.json"));
        assert_eq!(summary_path(Path::new("r.json")), PathBuf::from("r.summary.json"));
    }
}
