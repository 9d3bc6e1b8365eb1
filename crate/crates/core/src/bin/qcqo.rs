use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcqo::experiment::{
    compare_qubit_counts, diagnose, run_experiment, write_diagnostics_csv, write_qubit_table, Algorithm, DatasetSpec,
    ExperimentConfig, SolverKind,
};
use qcqo::linreg::{generate_synthetic_with_noise, write_dataset};
use qcqo::Error;

const OUTPUT_DIR_ENV: &str = "QCQO_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "qcqo", version, about = "Quadratic optimization through sequences of QUBO instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic linear-regression dataset as CSV plus a .meta sidecar.
    Generate(GenerateArgs),
    /// Run an experiment and write per-run and aggregate trajectory CSVs.
    Run(ExperimentArgs),
    /// Compare explicit fixed-point encodings with the per-iteration QUBO size.
    Qubits(QubitArgs),
    /// Report the convergence-bound terms along the first run's trajectory.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100.0)]
    target_norm: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the dataset from this CSV instead of the configured one.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    n: Option<usize>,
    /// Fixed step variance (selects the fixed algorithm unless --algorithm is given).
    #[arg(long)]
    sigma: Option<f64>,
    /// Window length (selects the adaptive algorithm unless --algorithm is given).
    #[arg(long = "window", alias = "T")]
    window: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    /// Annealing reads per QUBO.
    #[arg(long)]
    reads: Option<usize>,
    /// Annealing sweeps per read.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config value, then $QCQO_OUTPUT_DIR, then ./qcqo-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct QubitArgs {
    #[arg(long, default_value_t = 16)]
    d: usize,
    /// Comma-separated target precisions in (0, 0.5].
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1, 0.01, 1.0 / 510.0, 1e-4, 1e-6])]
    eps: Vec<f64>,
    /// QUBO variables per iteration used for comparison.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Write the report here instead of stdout.
    #[arg(long = "report")]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Qubits(args) => qubits(args),
        Command::Diagnose(args) => diagnose_cmd(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode, Error> {
    let ds = generate_synthetic_with_noise(args.d, args.samples, args.target_norm, args.noise_std, args.seed)?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_dataset(&ds, &args.out)?;
    eprintln!("wrote {} samples with d = {} to {}", ds.num_samples(), ds.dim(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(args: ExperimentArgs) -> Result<ExitCode, Error> {
    let cfg = build_config(&args)?;
    let summary = run_experiment(&cfg)?;
    for r in &summary.runs {
        match (&r.error, r.final_mse) {
            (Some(e), _) => eprintln!("run {} (seed {}) failed: {e}", r.run, r.seed),
            (None, Some(mse)) => eprintln!("run {} (seed {}) final mse {mse:.6e}", r.run, r.seed),
            _ => {}
        }
    }
    let failed = summary.failed_runs();
    if failed == summary.runs.len() {
        eprintln!("all {failed} runs failed");
        return Ok(ExitCode::FAILURE);
    }
    eprintln!("results in {}", cfg.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn qubits(args: QubitArgs) -> Result<ExitCode, Error> {
    let rows = compare_qubit_counts(args.d, &args.eps, args.n)?;
    with_output(args.out.as_deref(), |out| write_qubit_table(&rows, out))?;
    Ok(ExitCode::SUCCESS)
}

fn diagnose_cmd(args: DiagnoseArgs) -> Result<ExitCode, Error> {
    let cfg = build_config(&args.experiment)?;
    let rows = diagnose(&cfg)?;
    with_output(args.report.as_deref(), |out| write_diagnostics_csv(&rows, out))?;
    Ok(ExitCode::SUCCESS)
}

fn with_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> qcqo::Result<()>) -> qcqo::Result<()> {
    match path {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
        }
    }
    Ok(())
}

/// Config file, then environment, then flags.
fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let (mut cfg, output_dir_in_file) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let raw: serde_json::Value = serde_json::from_str(&text)?;
            let has_dir = raw.get("output_dir").is_some();
            (serde_json::from_value(raw)?, has_dir)
        }
        None => (ExperimentConfig::default(), false),
    };
    if !output_dir_in_file {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
    }

    if let Some(path) = &args.data {
        cfg.dataset = DatasetSpec::Csv(path.clone());
    }
    if let Some(sigma) = args.sigma {
        cfg.sigma = Some(sigma);
        cfg.algorithm = Algorithm::Fixed;
    }
    if let Some(window) = args.window {
        cfg.window = Some(window);
        cfg.algorithm = Algorithm::Adaptive;
    }
    if args.sigma.is_some() && args.window.is_some() && args.algorithm.is_none() {
        return Err(Error::InvalidParameter("--sigma and --window together need an explicit --algorithm".into()));
    }
    if let Some(algorithm) = args.algorithm {
        cfg.algorithm = algorithm;
    }
    match cfg.algorithm {
        Algorithm::Adaptive => {
            cfg.window.get_or_insert(10);
            cfg.sigma = None;
        }
        Algorithm::Fixed => cfg.window = None,
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(kind) = args.solver {
        cfg.solver.kind = kind;
    }
    if let Some(reads) = args.reads {
        cfg.solver.reads = reads;
    }
    if let Some(sweeps) = args.sweeps {
        cfg.solver.sweeps = sweeps;
    }
    if let Some(iters) = args.iters {
        cfg.iterations = iters;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}
