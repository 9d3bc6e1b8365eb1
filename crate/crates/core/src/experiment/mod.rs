//! Experiment runner: repeated seeded runs on a regression dataset, one
//! trajectory CSV per run plus a per-iteration aggregate.
//!
//! Run `i` uses seed `base_seed + i`. Runs may execute concurrently; each
//! owns its output file and the aggregate is computed afterwards, so the
//! numbers never depend on scheduling.

mod config;
mod qubits;

pub use config::{Algorithm, DatasetSpec, ExperimentConfig, SolverConfig, SolverKind};
pub use qubits::{compare_qubit_counts, write_qubit_table, QubitRow};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::fmt::format_g;
use crate::linreg::{generate_synthetic_with_noise, read_dataset, RegressionDataset};
use crate::optimizer::{convergence_diagnostics, optimize, DiagnosticRow, StepSchedule, StoppingRule, Trajectory};

pub const RUN_HEADER: &str = "t,mse,dist_wstar,sigma,step_norm,qubo_energy";
pub const DIAGNOSTICS_HEADER: &str =
    "t,gap,residual_norm,correction,correction_half,bound,bound_squared,bound_half,bound_half_squared";
pub const AGGREGATE_HEADER: &str = "t,mse_median,mse_mean,dist_median,dist_mean,sigma_median,sigma_mean";

/// Precision of every float written to trajectory files.
const CSV_DIGITS: usize = 10;

/// Per-run outcome recorded in the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub file: Option<PathBuf>,
    pub final_mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
    pub aggregate_file: Option<PathBuf>,
}

impl ExperimentSummary {
    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<RegressionDataset> {
    match spec {
        DatasetSpec::Synthetic { d, samples, target_norm, seed, noise_std } => {
            generate_synthetic_with_noise(*d, *samples, *target_norm, *noise_std, *seed)
        }
        DatasetSpec::Csv(path) => read_dataset(path),
    }
}

/// Per-run outcomes in run order.
pub type RunResults = Vec<Result<Trajectory>>;

/// Executes every run in memory and returns the trajectories in run order.
///
/// `w*` comes from the closed-form optimum; it is `None` when the normal
/// equations are singular.
pub fn run_trajectories(
    cfg: &ExperimentConfig,
    ds: &RegressionDataset,
) -> Result<(Option<DVector<f64>>, RunResults)> {
    cfg.validate()?;
    let qp = ds.to_quadratic_program();
    let w_star = ds.closed_form_optimum().ok();
    let solver = cfg.solver.build()?;
    let schedule = match cfg.algorithm {
        Algorithm::Fixed => StepSchedule::Fixed { sigma: cfg.sigma.expect("validated") },
        Algorithm::Adaptive => StepSchedule::Window { len: cfg.window.expect("validated") },
    };
    let stop = StoppingRule::iterations(cfg.iterations);
    let w0 = DVector::zeros(ds.dim());

    let single = |run: usize| {
        optimize(&qp, &w0, cfg.n, schedule, &solver, &stop, cfg.base_seed + run as u64, w_star.as_ref())
            .map(|(_, traj)| traj)
    };
    Ok((w_star.clone(), parallel_map(cfg.runs, cfg.jobs, single)))
}

/// Runs the experiment and writes `run_XXX.csv`, `aggregate.csv` and
/// `summary.json` into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let (_, results) = run_trajectories(cfg, &ds)?;

    let mut runs = Vec::with_capacity(results.len());
    let mut finished = Vec::new();
    for (run, result) in results.into_iter().enumerate() {
        let seed = cfg.base_seed + run as u64;
        match result {
            Ok(traj) => {
                let file = cfg.output_dir.join(format!("run_{run:03}.csv"));
                write_run_csv(&traj, &file)?;
                runs.push(RunSummary {
                    run,
                    seed,
                    file: Some(file),
                    final_mse: Some(traj.final_loss()),
                    error: None,
                });
                finished.push(traj);
            }
            Err(e) => runs.push(RunSummary { run, seed, file: None, final_mse: None, error: Some(e.to_string()) }),
        }
    }

    let aggregate_file = if finished.is_empty() {
        None
    } else {
        let file = cfg.output_dir.join("aggregate.csv");
        write_aggregate_csv(&finished, &file)?;
        Some(file)
    };
    let summary = ExperimentSummary { config: cfg.clone(), runs, aggregate_file };
    fs::write(cfg.output_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Runs the first seed of `cfg` and reports the convergence-bound terms
/// along its trajectory.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<Vec<DiagnosticRow>> {
    let ds = load_dataset(&cfg.dataset)?;
    let w_star = ds.closed_form_optimum()?;
    let single = ExperimentConfig { runs: 1, jobs: 1, ..cfg.clone() };
    let (_, mut results) = run_trajectories(&single, &ds)?;
    let traj = results.remove(0)?;
    convergence_diagnostics(&ds.to_quadratic_program(), &traj, &w_star)
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticRow], mut out: W) -> Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in rows {
        let values = [
            r.gap,
            r.residual_norm,
            r.correction,
            r.correction_half,
            r.bound,
            r.bound_squared,
            r.bound_half,
            r.bound_half_squared,
        ];
        let fields: Vec<String> = values.iter().map(|&v| format_g(v, CSV_DIGITS)).collect();
        writeln!(out, "{},{}", r.t, fields.join(","))?;
    }
    Ok(())
}

/// Applies `f` to `0..count` on up to `jobs` threads, keeping input order.
fn parallel_map<T: Send>(count: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let value = f(i);
                slots.lock().expect("no panics while holding the lock")[i] = Some(value);
            });
        }
    });
    slots.into_inner().expect("threads joined").into_iter().map(|v| v.expect("every index ran")).collect()
}

/// One row per iteration, starting with the initial point at `t = 0`.
pub fn trajectory_rows(traj: &Trajectory) -> Vec<[f64; 6]> {
    let nan_if_none = |d: Option<f64>| d.unwrap_or(f64::NAN);
    let mut rows = vec![[0.0, traj.initial_loss, nan_if_none(traj.initial_distance), traj.initial_sigma, 0.0, 0.0]];
    rows.extend(traj.records.iter().map(|r| {
        [r.t as f64, r.loss, nan_if_none(r.distance), r.sigma, r.step_norm, r.qubo_energy]
    }));
    rows
}

pub fn write_run_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{RUN_HEADER}")?;
    for row in trajectory_rows(traj) {
        let fields: Vec<String> = std::iter::once(format!("{}", row[0] as u64))
            .chain(row[1..].iter().map(|&v| format_g(v, CSV_DIGITS)))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Per-iteration statistics across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mse_median: f64,
    pub mse_mean: f64,
    pub dist_median: f64,
    pub dist_mean: f64,
    pub sigma_median: f64,
    pub sigma_mean: f64,
}

/// Aggregates runs of equal length row by row.
pub fn aggregate(trajectories: &[Trajectory]) -> Vec<AggregateRow> {
    let tables: Vec<Vec<[f64; 6]>> = trajectories.iter().map(trajectory_rows).collect();
    let len = tables.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|t| {
            let column = |c: usize| tables.iter().map(|rows| rows[t][c]).collect::<Vec<f64>>();
            let (mse, dist, sigma) = (column(1), column(2), column(3));
            AggregateRow {
                t,
                mse_median: median(&mse),
                mse_mean: mean(&mse),
                dist_median: median(&dist),
                dist_mean: mean(&dist),
                sigma_median: median(&sigma),
                sigma_mean: mean(&sigma),
            }
        })
        .collect()
}

pub fn write_aggregate_csv(trajectories: &[Trajectory], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for row in aggregate(trajectories) {
        let values = [row.mse_median, row.mse_mean, row.dist_median, row.dist_mean, row.sigma_median, row.sigma_mean];
        let fields: Vec<String> = values.iter().map(|&v| format_g(v, CSV_DIGITS)).collect();
        writeln!(out, "{},{}", row.t, fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
