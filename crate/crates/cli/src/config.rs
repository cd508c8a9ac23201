//! Run configuration: built-in defaults, an optional JSON config file, and
//! command-line overrides, merged in that order (flags win).

use std::path::{Path, PathBuf};

use ccpmo::nlp::SolverConfig;
use ccpmo::quadrotor::QuadrotorParams;
use ccpmo::sampling::{sample_uncertainty, SampleSet};
use ccpmo::{problem, quadrotor, ProblemInstance};

use crate::CliError;

/// Version stamp written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the smoothed-indicator family used by the solver: the C1
/// cubic with transition band (-epsilon, epsilon). Recorded in artifacts so
/// a result can be traced back to the exact surrogate.
pub const SMOOTHING_KIND: &str = "cubic_c1";

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in problem name: `example1`, `linear1d`, or `quadrotor`.
    pub builtin: Option<String>,
    /// Violation budget of the chance constraint.
    pub alpha: Option<f64>,
    /// Tightened budget actually solved against (defaults to `alpha`).
    pub alpha_prime: Option<f64>,
    pub n_samples: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Number of thresholds on the risk-cost frontier grid.
    pub frontier_grid: usize,
    /// Points per axis for the exhaustive grid baseline (dim <= 2 only).
    pub saa_resolution: usize,
    pub solver: SolverConfig,
    /// Geometry/dynamics overrides, honored only when `builtin = quadrotor`.
    pub quadrotor: Option<QuadrotorParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            builtin: None,
            alpha: None,
            alpha_prime: None,
            n_samples: 1000,
            epsilon: 0.01,
            gamma: 0.01,
            seed: 0,
            out_dir: PathBuf::from("out"),
            frontier_grid: 50,
            saa_resolution: 2001,
            solver: SolverConfig::default(),
            quadrotor: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config file {}: {e}", path.display())))
    }

    /// The violation budget, required from either a flag or the file.
    pub fn require_alpha(&self) -> Result<f64, CliError> {
        let alpha = self
            .alpha
            .ok_or_else(|| CliError::config("alpha is required (flag --alpha or config)"))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CliError::config(format!("alpha must be in [0, 1], got {alpha}")));
        }
        if let Some(ap) = self.alpha_prime {
            if !(0.0..=1.0).contains(&ap) || ap > alpha {
                return Err(CliError::config(format!(
                    "alpha_prime must satisfy 0 <= alpha_prime <= alpha, got {ap}"
                )));
            }
        }
        Ok(alpha)
    }

    /// Budget handed to the solvers: the tightened one when present.
    pub fn solve_alpha(&self) -> Result<f64, CliError> {
        let alpha = self.require_alpha()?;
        Ok(self.alpha_prime.unwrap_or(alpha))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.require_alpha()?;
        if self.n_samples == 0 {
            return Err(CliError::config("n_samples must be >= 1"));
        }
        if self.frontier_grid == 0 {
            return Err(CliError::config("frontier_grid must be >= 1"));
        }
        if self.saa_resolution < 2 {
            return Err(CliError::config("saa_resolution must be >= 2"));
        }
        self.solver.validate().map_err(CliError::from)?;
        Ok(())
    }
}

/// A fully materialized problem plus the sample set every solver consumes.
pub struct Instance {
    pub problem: ProblemInstance,
    pub samples: SampleSet,
}

/// Build the problem and draw its sample approximation. For the quadrotor
/// the same draw feeds the objective average, so objective and constraint
/// see common random numbers.
pub fn build_instance(cfg: &RunConfig) -> Result<Instance, CliError> {
    let name = cfg
        .builtin
        .as_deref()
        .ok_or_else(|| CliError::config("a problem is required (flag --builtin or config)"))?;
    match name {
        "quadrotor" => {
            let params = cfg.quadrotor.clone().unwrap_or_default();
            params.validate()?;
            let model = params.uncertainty_model()?;
            let samples = sample_uncertainty(&model, cfg.n_samples, cfg.seed)?;
            let problem = quadrotor::make_problem(&params, &samples)?;
            Ok(Instance { problem, samples })
        }
        other => {
            let problem = problem::builtin(other)?;
            let samples = sample_uncertainty(&problem.uncertainty, cfg.n_samples, cfg.seed)?;
            Ok(Instance { problem, samples })
        }
    }
}

/// Comma-separated list flag parser (`--s-list 1,2,5`).
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|e| CliError::config(format!("invalid {what} entry '{tok}': {e}")))
        })
        .collect()
}
