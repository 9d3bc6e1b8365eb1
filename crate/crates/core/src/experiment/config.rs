use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Exhaustive, DEFAULT_EXHAUSTIVE_CAP, SaParams, SimulatedAnnealing, Solver};

/// Where the regression data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        d: usize,
        samples: usize,
        #[serde(default = "default_target_norm")]
        target_norm: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        noise_std: f64,
    },
    Csv(PathBuf),
}

fn default_target_norm() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exhaustive,
    Sa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default = "default_reads")]
    pub reads: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    /// Explicit `[initial, final]` annealing temperatures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<(f64, f64)>,
    #[serde(default = "default_cap")]
    pub max_vars: usize,
}

fn default_reads() -> usize {
    SaParams::default().reads
}

fn default_sweeps() -> usize {
    SaParams::default().sweeps
}

fn default_cap() -> usize {
    DEFAULT_EXHAUSTIVE_CAP
}

impl SolverConfig {
    pub fn exhaustive() -> Self {
        Self {
            kind: SolverKind::Exhaustive,
            reads: default_reads(),
            sweeps: default_sweeps(),
            temperatures: None,
            max_vars: default_cap(),
        }
    }

    pub fn annealing(params: SaParams) -> Self {
        Self {
            kind: SolverKind::Sa,
            reads: params.reads,
            sweeps: params.sweeps,
            temperatures: params.temperatures,
            max_vars: default_cap(),
        }
    }

    pub fn build(&self) -> Result<Solver> {
        Ok(match self.kind {
            SolverKind::Exhaustive => Solver::Exhaustive(Exhaustive::with_cap(self.max_vars)),
            SolverKind::Sa => Solver::Annealing(SimulatedAnnealing::new(SaParams {
                reads: self.reads,
                sweeps: self.sweeps,
                temperatures: self.temperatures,
            })?),
        })
    }
}

/// One experiment: a dataset, an algorithm configuration and a run count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub algorithm: Algorithm,
    /// Rows of `R`, i.e. QUBO variables per iteration.
    pub n: usize,
    /// Target step variance; required for `fixed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Window length; required for `adaptive`.
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "T")]
    pub window: Option<usize>,
    pub solver: SolverConfig,
    pub iterations: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Maximum number of runs executed concurrently.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_runs() -> usize {
    10
}

fn default_jobs() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qcqo-out")
}

impl Default for ExperimentConfig {
    /// The linear-regression cell `n = 16`, `σ = 1.0`, fixed, exhaustive.
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Synthetic {
                d: 16,
                samples: 10_000,
                target_norm: 100.0,
                seed: 0,
                noise_std: 0.0,
            },
            algorithm: Algorithm::Fixed,
            n: 16,
            sigma: Some(1.0),
            window: None,
            solver: SolverConfig::exhaustive(),
            iterations: 1000,
            runs: default_runs(),
            base_seed: 0,
            output_dir: default_output_dir(),
            jobs: default_jobs(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return invalid("n must be at least 1".into());
        }
        match self.algorithm {
            Algorithm::Fixed => match self.sigma {
                Some(s) if s > 0.0 && s.is_finite() => {}
                Some(s) => return invalid(format!("sigma must be positive, got {s}")),
                None => return invalid("fixed algorithm requires sigma".into()),
            },
            Algorithm::Adaptive => match self.window {
                Some(t) if t >= 1 => {}
                Some(_) => return invalid("window T must be at least 1".into()),
                None => return invalid("adaptive algorithm requires window T".into()),
            },
        }
        let cap = self.solver.max_vars.min(DEFAULT_EXHAUSTIVE_CAP);
        if self.solver.kind == SolverKind::Exhaustive && self.n > cap {
            return invalid(format!("exhaustive solver supports n <= {cap}, got n = {}", self.n));
        }
        self.solver.build()?;
        if self.runs == 0 {
            return invalid("runs must be at least 1".into());
        }
        if self.jobs == 0 {
            return invalid("jobs must be at least 1".into());
        }
        if let DatasetSpec::Synthetic { d, samples, target_norm, noise_std, .. } = &self.dataset {
            if *d < 2 || *samples == 0 || !(*target_norm > 0.0) || !(*noise_std >= 0.0) {
                return invalid("synthetic dataset needs d >= 2, samples >= 1, target_norm > 0".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_json() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
                "dataset": {"synthetic": {"d": 4, "samples": 100, "seed": 3}},
                "algorithm": "adaptive",
                "n": 8,
                "T": 5,
                "solver": {"kind": "sa", "reads": 4, "sweeps": 50},
                "iterations": 20,
                "runs": 2
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.window, Some(5));
        assert_eq!(cfg.solver.reads, 4);
        assert_eq!(cfg.jobs, 1);
        assert_eq!(
            cfg.dataset,
            DatasetSpec::Synthetic { d: 4, samples: 100, target_norm: 100.0, seed: 3, noise_std: 0.0 }
        );
        cfg.validate().unwrap();
        let again: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn validation_catches_missing_mode_parameters() {
        let mut cfg = ExperimentConfig { sigma: None, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.algorithm = Algorithm::Adaptive;
        assert!(cfg.validate().is_err());
        cfg.window = Some(10);
        cfg.validate().unwrap();

        let cfg = ExperimentConfig { n: 26, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { n: 26, solver: SolverConfig::annealing(SaParams::default()), ..Default::default() };
        cfg.validate().unwrap();
        let cfg = ExperimentConfig { runs: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"dataset": {"csv": "x.csv"}, "algorithm": "fixed", "n": 4, "solver": {"kind": "exhaustive"}, "iterations": 1, "bogus": 1}"#);
        assert!(err.is_err());
    }
}
