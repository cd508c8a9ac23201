//! The `solve` command: run every method on one instance and write
//! `solution.json` plus `summary.csv`.

use ccpmo::baselines::{saa_grid_solve, scenario_solve};
use ccpmo::smoothing::smooth_prob;
use ccpmo::solver::{
    build_frontier, default_alpha_grid, mix_from_frontier, solve_deterministic, solve_two_point,
};
use ccpmo::{Error, Policy, SampleSet, SmoothingParams};

use crate::config::{build_instance, RunConfig, SCHEMA_VERSION};
use crate::report::{
    ensure_out_dir, fmt_f64, write_csv, write_json, MethodReport, SmoothingStamp, SolutionDoc,
};
use crate::CliError;

/// Default threshold grid extended with the query threshold itself.
pub fn frontier_grid(alpha_prime: f64, count: usize) -> Vec<f64> {
    let mut grid = default_alpha_grid(alpha_prime, count);
    if !grid.iter().any(|&a| a == alpha_prime) {
        grid.push(alpha_prime);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

/// Signed surrogate slack of a mixture: weighted smoothed probability minus
/// the required level `1 - alpha'`.
fn policy_slack(
    problem: &ccpmo::ProblemInstance,
    policy: &Policy,
    d: &SampleSet,
    sp: &SmoothingParams,
    alpha_prime: f64,
) -> Result<f64, CliError> {
    let need = 1.0 - alpha_prime;
    let prob = match policy {
        Policy::Deterministic { point } => smooth_prob(problem, point, d, sp)?,
        Policy::TwoPoint(p) => {
            p.mu1 * smooth_prob(problem, &p.x1, d, sp)?
                + (1.0 - p.mu1) * smooth_prob(problem, &p.x2, d, sp)?
        }
        Policy::SPoint(p) => {
            let mut acc = 0.0;
            for (w, x) in p.weights.iter().zip(&p.points) {
                if *w > 0.0 {
                    acc += w * smooth_prob(problem, x, d, sp)?;
                }
            }
            acc
        }
    };
    Ok(prob - need)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha_prime = cfg.solve_alpha()?;
    let inst = build_instance(cfg)?;
    let sp = SmoothingParams::new(cfg.epsilon, cfg.gamma)?;
    let mut notes = Vec::new();

    let det = solve_deterministic(&inst.problem, alpha_prime, &inst.samples, &sp, &cfg.solver)?;
    let det_policy = Policy::Deterministic { point: det.point.clone() };
    let det_report = MethodReport {
        objective: det.objective_value,
        constraint_slack: policy_slack(
            &inst.problem,
            &det_policy,
            &inst.samples,
            &sp,
            alpha_prime,
        )?,
        policy: det_policy,
        converged: det.converged,
        iterations: det.iterations,
        starts_used: det.starts_used,
        diagnostic: det.diagnostic.clone(),
        mean_threshold: None,
    };

    let tp = solve_two_point(&inst.problem, alpha_prime, &inst.samples, &sp, &cfg.solver)?;
    let tp_report = MethodReport {
        policy: Policy::TwoPoint(tp.policy.clone()),
        objective: tp.surrogate_objective,
        constraint_slack: tp.constraint_slack,
        converged: tp.converged,
        iterations: tp.iterations,
        starts_used: tp.starts_used,
        diagnostic: tp.diagnostic.clone(),
        mean_threshold: None,
    };

    // Frontier route: deterministic optima across a threshold grid, then the
    // best mixture read off that curve. The grid always includes the query
    // threshold itself so a convex frontier degenerates to the single
    // deterministic optimum instead of a nearby chord.
    let grid = frontier_grid(alpha_prime, cfg.frontier_grid);
    let frontier = build_frontier(&inst.problem, &grid, &inst.samples, &sp, &cfg.solver)?;
    let mix_report = match mix_from_frontier(&frontier, alpha_prime) {
        Ok(mix) => {
            let policy = Policy::TwoPoint(mix.policy.clone());
            Some(MethodReport {
                constraint_slack: policy_slack(
                    &inst.problem,
                    &policy,
                    &inst.samples,
                    &sp,
                    alpha_prime,
                )?,
                policy,
                objective: mix.objective,
                converged: true,
                iterations: 0,
                starts_used: 0,
                diagnostic: None,
                mean_threshold: Some(mix.mean_threshold),
            })
        }
        Err(e) => {
            notes.push(format!("frontier_mix unavailable: {e}"));
            None
        }
    };

    let scenario_report = match scenario_solve(&inst.problem, &inst.samples, &cfg.solver) {
        Ok(sc) => {
            let policy = Policy::Deterministic { point: sc.point.clone() };
            Some(MethodReport {
                objective: sc.objective_value,
                constraint_slack: policy_slack(
                    &inst.problem,
                    &policy,
                    &inst.samples,
                    &sp,
                    alpha_prime,
                )?,
                policy,
                converged: sc.converged,
                iterations: sc.iterations,
                starts_used: sc.starts_used,
                diagnostic: sc.diagnostic.clone(),
                mean_threshold: None,
            })
        }
        Err(e) => {
            notes.push(format!("scenario baseline failed: {e}"));
            None
        }
    };

    let alpha = cfg.require_alpha()?;
    let saa_report = match saa_grid_solve(&inst.problem, alpha, &inst.samples, cfg.saa_resolution) {
        Ok(sa) => {
            let policy = Policy::Deterministic { point: sa.point.clone() };
            Some(MethodReport {
                objective: sa.objective_value,
                constraint_slack: policy_slack(
                    &inst.problem,
                    &policy,
                    &inst.samples,
                    &sp,
                    alpha_prime,
                )?,
                policy,
                converged: sa.converged,
                iterations: sa.iterations,
                starts_used: sa.starts_used,
                diagnostic: sa.diagnostic.clone(),
                mean_threshold: None,
            })
        }
        Err(Error::Unsupported(msg)) => {
            notes.push(format!("saa skipped: {msg}"));
            None
        }
        Err(Error::Infeasible(msg)) => {
            notes.push(format!("saa infeasible: {msg}"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let ordering_ok = tp.surrogate_objective <= det.objective_value + 1e-6;

    ensure_out_dir(&cfg.out_dir)?;
    let doc = SolutionDoc {
        schema_version: SCHEMA_VERSION,
        run: cfg.clone(),
        smoothing: SmoothingStamp::from_config(cfg),
        deterministic: det_report,
        two_point: tp_report,
        frontier_mix: mix_report,
        scenario: scenario_report,
        saa: saa_report,
        frontier,
        notes,
    };
    write_json(&cfg.out_dir.join("solution.json"), &doc)?;
    write_summary_csv(cfg, &doc, ordering_ok)?;

    println!(
        "deterministic objective {:.6}, two-point objective {:.6} (mu1 = {:.4})",
        doc.deterministic.objective,
        doc.two_point.objective,
        match &doc.two_point.policy {
            Policy::TwoPoint(p) => p.mu1,
            _ => 1.0,
        }
    );
    if !doc.two_point.converged {
        return Err(CliError::solver(format!(
            "two-point solve did not converge: {}",
            doc.two_point.diagnostic.as_deref().unwrap_or("no diagnostic")
        )));
    }
    Ok(())
}

fn write_summary_csv(
    cfg: &RunConfig,
    doc: &SolutionDoc,
    ordering_ok: bool,
) -> Result<(), CliError> {
    let header = [
        "method",
        "objective",
        "constraint_slack",
        "converged",
        "iterations",
        "starts_used",
        "two_point_leq_deterministic",
    ];
    let mut rows = Vec::new();
    let mut push = |name: &str, r: &MethodReport| {
        rows.push(vec![
            name.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.constraint_slack),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.starts_used.to_string(),
            ordering_ok.to_string(),
        ]);
    };
    push("deterministic", &doc.deterministic);
    push("two_point", &doc.two_point);
    if let Some(m) = &doc.frontier_mix {
        push("frontier_mix", m);
    }
    if let Some(m) = &doc.scenario {
        push("scenario", m);
    }
    if let Some(m) = &doc.saa {
        push("saa", m);
    }
    write_csv(&cfg.out_dir.join("summary.csv"), &header, &rows)
}
