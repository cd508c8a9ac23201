//! `ccpmo` command line: solve chance-constrained problems with mixture
//! policies, run the supporting studies, and Monte-Carlo-validate saved
//! policies. Every command is reproducible: artifacts embed the full run
//! configuration and all randomness derives from explicit seeds.

mod config;
mod report;
mod solve;
mod study;
mod svg;
mod validate_cmd;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

/// Process failure with one of the documented exit codes.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 4, kind: "config_error", message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self { code: 3, kind: "solver_failure", message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 3, kind: "io_error", message: message.into() }
    }

    fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "exit_code": self.code,
            "message": self.message,
        })
        .to_string()
    }
}

impl From<ccpmo::Error> for CliError {
    fn from(e: ccpmo::Error) -> Self {
        let (code, kind) = match &e {
            ccpmo::Error::Infeasible(_) => (2, "infeasible"),
            ccpmo::Error::NonFinite { .. } => (3, "solver_failure"),
            ccpmo::Error::DimensionMismatch { .. }
            | ccpmo::Error::InvalidParameter(_)
            | ccpmo::Error::Unsupported(_) => (4, "config_error"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "ccpmo",
    version,
    about = "Chance-constrained optimization with two-point mixture policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with every method and write solution artifacts.
    Solve(SolveArgs),
    /// Run one of the standing experiments and write its report.
    Study(StudyArgs),
    /// Monte-Carlo-validate a policy from a saved solution file.
    Validate(validate_cmd::ValidateArgs),
}

/// Flags shared by `solve` and `study`; each overrides the config file.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Built-in problem: example1, linear1d, or quadrotor.
    #[arg(long)]
    builtin: Option<String>,
    /// JSON config file (see docs/config.md); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Violation budget of the chance constraint, in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Tightened budget handed to the solver (defaults to alpha).
    #[arg(long)]
    alpha_prime: Option<f64>,
    /// Sample-approximation size N.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Smoothing band half-width of the surrogate indicator.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Conservative inward shift applied inside the indicator.
    #[arg(long)]
    gamma: Option<f64>,
    /// Seed for the sample draw (solver multistarts derive from it).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multistart count for the nonlinear solver.
    #[arg(long)]
    multistarts: Option<usize>,
    /// Iteration cap per solver start.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Threshold count for the risk-cost frontier grid.
    #[arg(long)]
    frontier_grid: Option<usize>,
    /// Grid resolution of the exhaustive baseline (dim <= 2).
    #[arg(long)]
    saa_resolution: Option<usize>,
}

impl CommonArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if self.builtin.is_some() {
            cfg.builtin = self.builtin;
        }
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if self.alpha_prime.is_some() {
            cfg.alpha_prime = self.alpha_prime;
        }
        if let Some(n) = self.n_samples {
            cfg.n_samples = n;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.out {
            cfg.out_dir = o;
        }
        if let Some(m) = self.multistarts {
            cfg.solver.multistarts = m;
        }
        if let Some(i) = self.max_iterations {
            cfg.solver.max_iterations = i;
        }
        if let Some(f) = self.frontier_grid {
            cfg.frontier_grid = f;
        }
        if let Some(r) = self.saa_resolution {
            cfg.saa_resolution = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct StudyArgs {
    /// Which experiment to run.
    #[arg(value_enum)]
    kind: StudyKind,
    #[command(flatten)]
    common: CommonArgs,
    /// Support sizes for the support-size study, e.g. 1,2,5,10,20,30,50.
    #[arg(long)]
    s_list: Option<String>,
    /// Sample sizes for the convergence study, e.g. 100,1000,10000.
    #[arg(long)]
    n_list: Option<String>,
    /// Smoothing widths for the convergence study, e.g. 0.1,0.01.
    #[arg(long)]
    epsilon_list: Option<String>,
    /// Repetitions per convergence cell.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Trial count for the feasibility-bound study.
    #[arg(long)]
    trials: Option<usize>,
    /// Probe count for the margin-constant estimate.
    #[arg(long)]
    probes: Option<usize>,
    /// Reference sample size for oracle-free probability estimates.
    #[arg(long)]
    reference_size: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyKind {
    /// Objective versus mixture support size (flat beyond two points).
    SupportSize,
    /// Surrogate-optimum error versus sample size, per smoothing width.
    Convergence,
    /// Empirical infeasibility rate against the concentration bound.
    FeasibilityBound,
    /// Risk-cost frontier with the optimal mixture chord.
    Frontier,
}

fn init_threads() -> Result<(), CliError> {
    match std::env::var("CCPMO_THREADS") {
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| {
                CliError::config(format!("CCPMO_THREADS must be a positive integer, got '{v}'"))
            })?;
            if n == 0 {
                return Err(CliError::config("CCPMO_THREADS must be >= 1"));
            }
            // Ignore "already initialized": only possible in-process (tests).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(0);
        }
        CliError::config(e.to_string())
    })?;
    init_threads()?;
    match cli.command {
        Command::Solve(args) => solve::cmd_solve(&args.common.into_config()?),
        Command::Study(args) => study::cmd_study(args),
        Command::Validate(args) => validate_cmd::cmd_validate(args),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.code);
        }
    }
}
