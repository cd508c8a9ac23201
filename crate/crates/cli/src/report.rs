//! Artifact schemas and serialization helpers. JSON artifacts carry a
//! `schema_version` plus the complete run configuration, and floats are
//! written with Rust's shortest round-trip formatting, so re-running a
//! command with the same inputs reproduces every file byte for byte.

use std::path::Path;

use ccpmo::solver::{Frontier, FrontierMix};
use ccpmo::validate::ValidationReport;
use ccpmo::Policy;

use crate::config::{RunConfig, SMOOTHING_KIND};
use crate::CliError;

/// One solver's outcome, in a shape shared by every method.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MethodReport {
    pub policy: Policy,
    pub objective: f64,
    /// Smoothed mixture probability minus the required level; nonnegative
    /// means the surrogate constraint holds.
    pub constraint_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub starts_used: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
    /// Weighted mean threshold, present on the frontier-mix method only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_threshold: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SmoothingStamp {
    pub kind: String,
    pub epsilon: f64,
    pub gamma: f64,
}

impl SmoothingStamp {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self { kind: SMOOTHING_KIND.to_string(), epsilon: cfg.epsilon, gamma: cfg.gamma }
    }
}

/// `solution.json`: everything needed to reproduce and validate a run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolutionDoc {
    pub schema_version: u32,
    pub run: RunConfig,
    pub smoothing: SmoothingStamp,
    pub deterministic: MethodReport,
    pub two_point: MethodReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frontier_mix: Option<MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scenario: Option<MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub saa: Option<MethodReport>,
    pub frontier: Frontier,
    /// Method-name keyed notes for branches that were skipped or failed.
    pub notes: Vec<String>,
}

impl SolutionDoc {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        match name {
            "deterministic" => Some(&self.deterministic),
            "two-point" => Some(&self.two_point),
            "frontier-mix" => self.frontier_mix.as_ref(),
            "scenario" => self.scenario.as_ref(),
            "saa" => self.saa.as_ref(),
            _ => None,
        }
    }
}

/// `validation.json` payload.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ValidationDoc {
    pub schema_version: u32,
    pub method: String,
    pub policy: Policy,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FrontierMixDoc {
    pub schema_version: u32,
    pub alpha: f64,
    pub mix: FrontierMix,
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid JSON in {}: {e}", path.display())))
}

/// Write a CSV with a fixed header. Cells are preformatted strings; floats
/// use Rust's default `Display`, which round-trips bit-exactly.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}
