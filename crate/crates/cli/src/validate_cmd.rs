//! The `validate` command: Monte-Carlo evaluation of a saved policy on
//! fresh scenario draws, with confidence intervals on cost and violation
//! probability. For the quadrotor it also renders sampled trajectories.

use std::path::PathBuf;

use clap::Args;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ccpmo::quadrotor::{margin, rollout};
use ccpmo::sampling::draw_one;
use ccpmo::special::mix_seed;
use ccpmo::validate::monte_carlo_validate;

use crate::config::{build_instance, SCHEMA_VERSION};
use crate::report::{
    ensure_out_dir, fmt_f64, read_json, write_csv, write_json, SolutionDoc, ValidationDoc,
};
use crate::svg::quadrotor_trajectories;
use crate::CliError;

#[derive(Args)]
pub struct ValidateArgs {
    /// Path to a solution.json written by `solve`.
    #[arg(long)]
    policy: PathBuf,
    /// Stored method to validate: deterministic, two-point, frontier-mix,
    /// scenario, or saa.
    #[arg(long, default_value = "two-point")]
    method: String,
    /// Monte-Carlo trial count (at least 100).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Seed for the validation draws, independent of the solve seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to the directory of the policy file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let doc: SolutionDoc = read_json(&args.policy)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {} in {}",
            doc.schema_version,
            args.policy.display()
        )));
    }
    let entry = doc.method(&args.method).ok_or_else(|| {
        CliError::config(format!(
            "method '{}' is not present in the solution file (available: deterministic, \
             two-point, frontier-mix, scenario, saa)",
            args.method
        ))
    })?;

    // The run config embedded in the file reproduces the exact instance the
    // policy was solved on (same samples for the quadrotor objective).
    let inst = build_instance(&doc.run)?;
    let report = monte_carlo_validate(&inst.problem, &entry.policy, args.trials, args.seed)?;

    let out_dir = match &args.out {
        Some(d) => d.clone(),
        None => args.policy.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
    };
    ensure_out_dir(&out_dir)?;

    write_json(
        &out_dir.join("validation.json"),
        &ValidationDoc {
            schema_version: SCHEMA_VERSION,
            method: args.method.clone(),
            policy: entry.policy.clone(),
            report: report.clone(),
        },
    )?;
    write_csv(
        &out_dir.join("validation.csv"),
        &[
            "method",
            "trials",
            "expected_cost",
            "cost_ci_halfwidth",
            "violation_probability",
            "violation_ci_halfwidth",
            "violation_count",
            "seed",
        ],
        &[vec![
            args.method.clone(),
            report.trials.to_string(),
            fmt_f64(report.expected_cost),
            fmt_f64(report.cost_ci_halfwidth),
            fmt_f64(report.violation_probability),
            fmt_f64(report.violation_ci_halfwidth),
            report.violation_count.to_string(),
            report.seed.to_string(),
        ]],
    )?;

    if doc.run.builtin.as_deref() == Some("quadrotor") {
        let params = doc.run.quadrotor.clone().unwrap_or_default();
        let model = params.uncertainty_model()?;
        // Replay the first trials with the validation's per-trial streams so
        // the picture shows exactly what was measured.
        let shown = args.trials.min(150);
        let mut trials = Vec::with_capacity(shown);
        for t in 0..shown {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(args.seed, t as u64));
            let x = entry.policy.draw(&mut rng).to_vec();
            let xi = draw_one(&model, &mut rng);
            let traj = rollout(&params, &x, &xi)?;
            let feasible = margin(&params, &traj) <= 0.0;
            trials.push((traj, feasible));
        }
        let title = format!(
            "Quadrotor {} policy: {} of {} shown trials feasible",
            args.method,
            trials.iter().filter(|t| t.1).count(),
            shown
        );
        let svg = quadrotor_trajectories(&params, &trials, &title);
        std::fs::write(out_dir.join("trajectories.svg"), svg)
            .map_err(|e| CliError::io(format!("cannot write trajectories: {e}")))?;
        println!("wrote {}", out_dir.join("trajectories.svg").display());
    }

    println!(
        "expected cost {} (+/- {}), violation probability {} (+/- {}) over {} trials",
        report.expected_cost,
        report.cost_ci_halfwidth,
        report.violation_probability,
        report.violation_ci_halfwidth,
        report.trials
    );
    Ok(())
}
