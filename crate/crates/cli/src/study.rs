//! The `study` command: standing experiments over one instance, each
//! emitting a CSV report (plus JSON where the report is a single record) and
//! an SVG chart.

use ccpmo::oracle::two_point_grid_1d;
use ccpmo::solver::{build_frontier, mix_from_frontier, solve_two_point};
use ccpmo::validate::{
    convergence_study, feasibility_bound_study, support_size_study, ConvergenceOracle,
};
use ccpmo::{SmoothingParams, TwoPointPolicy};

use crate::config::{build_instance, parse_list, RunConfig, SCHEMA_VERSION};
use crate::report::{ensure_out_dir, fmt_f64, write_csv, write_json, FrontierMixDoc};
use crate::svg::Chart;
use crate::{CliError, StudyArgs, StudyKind};

const PALETTE: [&str; 5] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#2266cc"];

pub fn cmd_study(args: StudyArgs) -> Result<(), CliError> {
    let kind = args.kind;
    let cfg = args.common.clone().into_config()?;
    ensure_out_dir(&cfg.out_dir)?;
    match kind {
        StudyKind::SupportSize => support_size(&cfg, &args),
        StudyKind::Convergence => convergence(&cfg, &args),
        StudyKind::FeasibilityBound => feasibility_bound(&cfg, &args),
        StudyKind::Frontier => frontier(&cfg),
    }
}

fn support_size(cfg: &RunConfig, args: &StudyArgs) -> Result<(), CliError> {
    let s_list: Vec<usize> = match &args.s_list {
        Some(text) => parse_list(text, "s_list")?,
        None => vec![1, 2, 5, 10, 20, 30, 50],
    };
    let alpha_prime = cfg.solve_alpha()?;
    let inst = build_instance(cfg)?;
    let sp = SmoothingParams::new(cfg.epsilon, cfg.gamma)?;
    let rows =
        support_size_study(&inst.problem, alpha_prime, &s_list, &inst.samples, &sp, &cfg.solver)?;

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.s.to_string(), fmt_f64(r.objective), r.converged.to_string()])
        .collect();
    write_csv(&cfg.out_dir.join("support_size.csv"), &["s", "objective", "converged"], &csv_rows)?;

    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.s as f64, r.objective)).collect();
    let mut chart = Chart::new(
        "Mixture objective versus support size",
        "support points S",
        "surrogate objective",
    );
    chart.line(&pts, PALETTE[0], Some("objective"));
    chart.dots(&pts, PALETTE[0]);
    std::fs::write(cfg.out_dir.join("support_size.svg"), chart.render())
        .map_err(|e| CliError::io(format!("cannot write chart: {e}")))?;
    println!("wrote {}", cfg.out_dir.join("support_size.svg").display());
    Ok(())
}

fn convergence(cfg: &RunConfig, args: &StudyArgs) -> Result<(), CliError> {
    let n_list: Vec<usize> = match &args.n_list {
        Some(text) => parse_list(text, "n_list")?,
        None => vec![100, 1000, 10_000],
    };
    let epsilon_list: Vec<f64> = match &args.epsilon_list {
        Some(text) => parse_list(text, "epsilon_list")?,
        None => vec![0.1, 0.01],
    };
    let repetitions = args.repetitions.unwrap_or(10);
    let alpha_prime = cfg.solve_alpha()?;
    let inst = build_instance(cfg)?;

    // Reference optimum: exhaustive grid search when a closed-form
    // probability exists (1-d built-ins); otherwise a high-effort solve at
    // the largest sample size stands in.
    let oracle = if inst.problem.dim() == 1 && inst.problem.has_oracle() {
        let g = two_point_grid_1d(&inst.problem, alpha_prime, 0.01, 0.001)?;
        ConvergenceOracle {
            objective: g.value,
            policy: TwoPointPolicy { mu1: g.mu1, x1: vec![g.x1], x2: vec![g.x2] },
        }
    } else {
        println!("no closed-form oracle; using a high-effort reference solve");
        let n_ref = *n_list.iter().max().expect("n_list is nonempty");
        let d = ccpmo::sample_uncertainty(&inst.problem.uncertainty, n_ref, cfg.seed ^ 0x9e37)?;
        let sp = SmoothingParams::new(*epsilon_list.last().unwrap(), 0.0)?;
        let mut hard = cfg.solver.clone();
        hard.multistarts = cfg.solver.multistarts.max(8);
        let sol = solve_two_point(&inst.problem, alpha_prime, &d, &sp, &hard)?;
        ConvergenceOracle { objective: sol.surrogate_objective, policy: sol.policy }
    };

    let rep = convergence_study(
        &inst.problem,
        alpha_prime,
        &n_list,
        &epsilon_list,
        repetitions,
        &oracle,
        &cfg.solver,
        cfg.seed,
    )?;

    let csv_rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.epsilon),
                fmt_f64(r.median_objective_error),
                fmt_f64(r.median_solution_distance),
                r.repetitions.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("convergence.csv"),
        &["n", "epsilon", "median_objective_error", "median_solution_distance", "repetitions"],
        &csv_rows,
    )?;

    let mut chart = Chart::new(
        "Surrogate optimum error versus sample size",
        "sample size N",
        "median objective error",
    )
    .with_log_x()
    .with_log_y();
    for (i, &eps) in epsilon_list.iter().enumerate() {
        let pts: Vec<(f64, f64)> = rep
            .rows
            .iter()
            .filter(|r| r.epsilon == eps)
            .map(|r| (r.n as f64, r.median_objective_error.max(1e-12)))
            .collect();
        let color = PALETTE[i % PALETTE.len()];
        chart.line(&pts, color, Some(&format!("epsilon = {eps}")));
        chart.dots(&pts, color);
    }
    std::fs::write(cfg.out_dir.join("convergence.svg"), chart.render())
        .map_err(|e| CliError::io(format!("cannot write chart: {e}")))?;
    println!("wrote {}", cfg.out_dir.join("convergence.svg").display());
    Ok(())
}

fn feasibility_bound(cfg: &RunConfig, args: &StudyArgs) -> Result<(), CliError> {
    let alpha = cfg.require_alpha()?;
    let alpha_prime = cfg
        .alpha_prime
        .ok_or_else(|| CliError::config("feasibility-bound requires --alpha-prime < alpha"))?;
    let trials = args.trials.unwrap_or(200);
    let probes = args.probes.unwrap_or(200);
    let reference_size = args.reference_size.unwrap_or(50_000);
    let inst = build_instance(cfg)?;
    let sp = SmoothingParams::new(cfg.epsilon, cfg.gamma)?;

    let rep = feasibility_bound_study(
        &inst.problem,
        alpha,
        alpha_prime,
        cfg.n_samples,
        trials,
        &sp,
        &cfg.solver,
        cfg.seed,
        probes,
        reference_size,
    )?;

    write_csv(
        &cfg.out_dir.join("feasibility_bound.csv"),
        &[
            "n",
            "alpha",
            "alpha_prime",
            "r_estimate",
            "bound",
            "empirical_infeasible_fraction",
            "trials",
        ],
        &[vec![
            rep.n.to_string(),
            fmt_f64(rep.alpha),
            fmt_f64(rep.alpha_prime),
            fmt_f64(rep.r_estimate),
            fmt_f64(rep.bound),
            fmt_f64(rep.empirical_infeasible_fraction),
            rep.trials.to_string(),
        ]],
    )?;
    write_json(
        &cfg.out_dir.join("feasibility_bound.json"),
        &serde_json::json!({ "schema_version": SCHEMA_VERSION, "report": rep }),
    )?;
    println!(
        "empirical infeasible fraction {} against bound {}",
        rep.empirical_infeasible_fraction, rep.bound
    );
    Ok(())
}

fn frontier(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.require_alpha()?;
    let alpha_prime = cfg.solve_alpha()?;
    let inst = build_instance(cfg)?;
    let sp = SmoothingParams::new(cfg.epsilon, cfg.gamma)?;
    let grid = crate::solve::frontier_grid(alpha_prime, cfg.frontier_grid);
    let front = build_frontier(&inst.problem, &grid, &inst.samples, &sp, &cfg.solver)?;
    let mix = mix_from_frontier(&front, alpha_prime)?;

    let csv_rows: Vec<Vec<String>> =
        front.entries.iter().map(|e| vec![fmt_f64(e.alpha_tilde), fmt_f64(e.jstar)]).collect();
    write_csv(&cfg.out_dir.join("frontier.csv"), &["alpha_tilde", "jstar"], &csv_rows)?;
    write_json(
        &cfg.out_dir.join("frontier_mix.json"),
        &FrontierMixDoc { schema_version: SCHEMA_VERSION, alpha, mix: mix.clone() },
    )?;

    let pts: Vec<(f64, f64)> = front.entries.iter().map(|e| (e.alpha_tilde, e.jstar)).collect();
    let mut chart = Chart::new(
        "Risk-cost frontier and optimal mixture chord",
        "violation threshold",
        "deterministic optimum",
    );
    chart.line(&pts, PALETTE[4], Some("frontier"));
    chart.dots(&pts, PALETTE[4]);
    // The chord connects the two frontier entries the mixture blends; it
    // degenerates to a marker when one entry is already optimal.
    let e1 = front.entries.iter().find(|e| e.xstar == mix.policy.x1);
    let e2 = front.entries.iter().find(|e| e.xstar == mix.policy.x2);
    if let (Some(a), Some(b)) = (e1, e2) {
        if a.alpha_tilde != b.alpha_tilde {
            chart.dashed_line(
                &[(a.alpha_tilde, a.jstar), (b.alpha_tilde, b.jstar)],
                PALETTE[1],
                Some("optimal chord"),
            );
        }
    }
    chart.dots(&[(mix.mean_threshold, mix.objective)], PALETTE[1]);
    std::fs::write(cfg.out_dir.join("frontier.svg"), chart.render())
        .map_err(|e| CliError::io(format!("cannot write chart: {e}")))?;
    println!("wrote {}", cfg.out_dir.join("frontier.svg").display());
    println!("mixture objective {} at mean threshold {}", mix.objective, mix.mean_threshold);
    Ok(())
}
