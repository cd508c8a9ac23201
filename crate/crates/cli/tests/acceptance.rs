//! Acceptance gate: one test per shipped guarantee, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see the lines for passing
//! tests). Tolerances and runtime budgets are pinned here in code.

use std::time::{Duration, Instant};

use ccpmo::baselines::scenario_solve;
use ccpmo::nlp::SolverConfig;
use ccpmo::oracle::{deterministic_grid_1d, two_point_grid_1d};
use ccpmo::problem::{eval_hbar, example1, linear1d, linear1d_pointmass, true_probability};
use ccpmo::quadrotor::{make_problem, QuadrotorParams};
use ccpmo::sampling::sample_uncertainty;
use ccpmo::smoothing::{smooth_prob, smooth_prob_grad};
use ccpmo::solver::{solve_deterministic, solve_two_point, TwoPointPolicy};
use ccpmo::special::normal_cdf;
use ccpmo::validate::{
    convergence_study, feasibility_bound_study, monte_carlo_validate, support_size_study,
    ConvergenceOracle,
};
use ccpmo::{Policy, SmoothingParams};

/// Closed-form optimum of the example-1 two-point mixture.
const TWO_POINT_OPTIMUM: f64 = -1.6120075780525869;
/// Closed-form violation probability of the (0.67, 0.33) mixture on (-1, 2).
const REFERENCE_MIX_VIOLATION: f64 = 0.24498882021195512;

/// Collects sub-checks of one criterion and prints the single PASS/FAIL line.
struct Gate {
    n: u32,
    started: Instant,
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Gate {
    fn new(n: u32) -> Self {
        Self { n, started: Instant::now(), notes: Vec::new(), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if ok {
            self.notes.push(detail);
        } else {
            self.failures.push(detail);
        }
    }

    /// Also enforces the runtime budget, then prints and asserts.
    fn finish(mut self, budget: Duration) {
        let elapsed = self.started.elapsed();
        self.check(
            elapsed <= budget,
            format!("runtime {:.1}s within {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()),
        );
        if self.failures.is_empty() {
            println!("criterion {}: PASS ({})", self.n, self.notes.join("; "));
        } else {
            println!("criterion {}: FAIL ({})", self.n, self.failures.join("; "));
            panic!("criterion {} failed: {}", self.n, self.failures.join("; "));
        }
    }
}

fn fast_cfg(multistarts: usize, max_iterations: usize) -> SolverConfig {
    SolverConfig { multistarts, max_iterations, ..Default::default() }
}

#[test]
fn criterion_01_example1_closed_forms_and_reference_mixture() {
    let mut gate = Gate::new(1);
    let p = example1();

    let j1 = p.objective(&[-1.0]);
    let j2 = p.objective(&[2.0]);
    gate.check(j1 == 1.84, format!("J(-1) = {j1} exactly 1.84"));
    gate.check(j2 == -4.76, format!("J(2) = {j2} exactly -4.76"));

    let v1 = 1.0 - true_probability(&p, &[-1.0]).unwrap();
    let v2 = 1.0 - true_probability(&p, &[2.0]).unwrap();
    gate.check(
        (v1 - 0.008).abs() <= 0.004,
        format!("violation at -1 is {v1:.4} vs 0.008 +/- 0.004"),
    );
    gate.check(
        (v2 - 0.729).abs() <= 0.004,
        format!("violation at 2 is {v2:.4} vs 0.729 +/- 0.004"),
    );

    let mix = TwoPointPolicy { mu1: 0.67, x1: vec![-1.0], x2: vec![2.0] };
    let analytic = mix.expected_objective(&p);
    gate.check(
        (analytic - (-0.338)).abs() <= 0.001,
        format!("mixture expectation {analytic:.6} vs -0.338 +/- 0.001"),
    );

    let mc = monte_carlo_validate(&p, &Policy::TwoPoint(mix), 1_000_000, 24).unwrap();
    gate.check(
        (mc.expected_cost - (-0.338)).abs() <= 0.01,
        format!("MC cost {:.4} vs -0.338 +/- 0.01", mc.expected_cost),
    );
    gate.check(
        (mc.violation_probability - REFERENCE_MIX_VIOLATION).abs() <= 0.003,
        format!("MC violation {:.4} vs 0.2450 +/- 0.003", mc.violation_probability),
    );

    gate.finish(Duration::from_secs(10));
}

#[test]
fn criterion_02_smoothed_probability_tracks_the_normal_cdf() {
    let mut gate = Gate::new(2);
    let p = example1();
    let d = sample_uncertainty(&p.uncertainty, 10_000, 2).unwrap();
    let sp = SmoothingParams::new(0.01, 0.0).unwrap();

    let mut worst = 0.0_f64;
    for i in 0..41 {
        let x = -2.0 + 4.0 * i as f64 / 40.0;
        let approx = smooth_prob(&p, &[x], &d, &sp).unwrap();
        let exact = normal_cdf(1.4 - x);
        worst = worst.max((approx - exact).abs());
    }
    gate.check(worst <= 0.02, format!("max |smooth_prob - Phi| = {worst:.4} over 41 grid points"));

    gate.finish(Duration::from_secs(5));
}

/// Central finite difference of the smoothed probability along coordinate k.
fn fd_prob(
    p: &ccpmo::ProblemInstance,
    x: &[f64],
    k: usize,
    d: &ccpmo::SampleSet,
    sp: &SmoothingParams,
) -> f64 {
    let h = 1e-6 * (1.0 + x[k].abs());
    let mut hi = x.to_vec();
    let mut lo = x.to_vec();
    hi[k] += h;
    lo[k] -= h;
    (smooth_prob(p, &hi, d, sp).unwrap() - smooth_prob(p, &lo, d, sp).unwrap()) / (2.0 * h)
}

#[test]
fn criterion_03_gradients_match_finite_differences() {
    let mut gate = Gate::new(3);

    // 1-D example: 20 probes spread over the box.
    let p = example1();
    let d = sample_uncertainty(&p.uncertainty, 2_000, 3).unwrap();
    let sp = SmoothingParams::new(0.01, 0.01).unwrap();
    let mut worst_rel = 0.0_f64;
    for i in 0..20 {
        let x = [-2.0 + 4.0 * (i as f64 + 0.5) / 20.0];
        let g = smooth_prob_grad(&p, &x, &d, &sp).unwrap()[0];
        let fd = fd_prob(&p, &x, 0, &d, &sp);
        worst_rel = worst_rel.max((g - fd).abs() / (1.0 + fd.abs()));
    }
    gate.check(worst_rel <= 1e-4, format!("example rel err {worst_rel:.2e} over 20 probes"));

    // Quadrotor: probes are sustained moderate ramps (purely random inputs
    // can cross the explicit-Euler stability limit, where finite differences
    // stop being a usable reference). The smoothing width is then calibrated
    // to the margin scale those trajectories actually produce, so the
    // indicator's transition band is populated and the gradient is live.
    let params = QuadrotorParams::default();
    let model = params.uncertainty_model().unwrap();
    let dq = sample_uncertainty(&model, 100, 4).unwrap();
    let pq = make_problem(&params, &dq).unwrap();
    let dim = pq.dim();
    let probes: Vec<Vec<f64>> = (0..20)
        .map(|probe| {
            let scale = 0.85 + 0.015 * probe as f64;
            (0..dim)
                .map(|k| {
                    let base = if k < dim / 2 { 1.2 } else { -0.6 };
                    let jitter = 0.3 * (((probe * 31 + k * 7) % 11) as f64 / 10.0 - 0.5);
                    scale * base + jitter
                })
                .collect()
        })
        .collect();
    let mut margin_scale = 0.0_f64;
    for u in &probes {
        let mean_abs =
            dq.iter().map(|xi| eval_hbar(&pq, u, xi).unwrap().abs()).sum::<f64>() / dq.len() as f64;
        margin_scale = margin_scale.max(mean_abs);
    }
    let spq = SmoothingParams::new(1.5 * margin_scale, 0.05).unwrap();
    let mut worst_rel_q = 0.0_f64;
    let mut live_probes = 0usize;
    for u in &probes {
        let g = smooth_prob_grad(&pq, u, &dq, &spq).unwrap();
        if g.iter().any(|&gi| gi != 0.0) {
            live_probes += 1;
        }
        for k in 0..u.len() {
            let fd = fd_prob(&pq, u, k, &dq, &spq);
            worst_rel_q = worst_rel_q.max((g[k] - fd).abs() / (1.0 + fd.abs()));
        }
    }
    gate.check(worst_rel_q <= 1e-4, format!("quadrotor rel err {worst_rel_q:.2e} over 20 probes"));
    gate.check(
        live_probes >= 15,
        format!("{live_probes}/20 quadrotor probes have a nonzero gradient"),
    );

    gate.finish(Duration::from_secs(30));
}

#[test]
fn criterion_04_two_point_never_loses_and_matches_the_grid_oracle() {
    let mut gate = Gate::new(4);
    let sp = SmoothingParams::new(0.01, 0.01).unwrap();
    let cfg = fast_cfg(8, 300);

    // The mixture can only improve on the single point: every built-in,
    // several seeds.
    for problem in [example1(), linear1d()] {
        for seed in [0_u64, 1, 2] {
            let d = sample_uncertainty(&problem.uncertainty, 1_000, seed).unwrap();
            let det = solve_deterministic(&problem, 0.25, &d, &sp, &cfg).unwrap();
            let tp = solve_two_point(&problem, 0.25, &d, &sp, &cfg).unwrap();
            gate.check(
                tp.surrogate_objective <= det.objective_value + 1e-6,
                format!(
                    "{} seed {seed}: two-point {:.6} <= deterministic {:.6} + 1e-6",
                    problem.name, tp.surrogate_objective, det.objective_value
                ),
            );
        }
    }
    {
        let params = QuadrotorParams::default();
        let model = params.uncertainty_model().unwrap();
        let d = sample_uncertainty(&model, 120, 5).unwrap();
        let problem = make_problem(&params, &d).unwrap();
        let spq = SmoothingParams::new(0.5, 0.05).unwrap();
        let cfgq = SolverConfig {
            multistarts: 2,
            max_iterations: 150,
            kkt_tolerance: 1e-3,
            feasibility_tolerance: 1e-6,
            ..Default::default()
        };
        let det = solve_deterministic(&problem, 0.93, &d, &spq, &cfgq).unwrap();
        let tp = solve_two_point(&problem, 0.93, &d, &spq, &cfgq).unwrap();
        gate.check(
            tp.surrogate_objective <= det.objective_value + 1e-6,
            format!(
                "quadrotor seed 5: two-point {:.6} <= deterministic {:.6} + 1e-6",
                tp.surrogate_objective, det.objective_value
            ),
        );
    }

    // Against the exhaustive oracle on the concave 1-D example.
    let oracle_clock = Instant::now();
    let oracle = two_point_grid_1d(&example1(), 0.25, 0.01, 0.001).unwrap();
    let oracle_secs = oracle_clock.elapsed().as_secs_f64();
    gate.check(oracle_secs < 60.0, format!("oracle runtime {oracle_secs:.1}s < 60s"));
    gate.check(
        (oracle.value - TWO_POINT_OPTIMUM).abs() <= 5e-3,
        format!("oracle value {:.6} near closed form {TWO_POINT_OPTIMUM:.6}", oracle.value),
    );
    let d = sample_uncertainty(&example1().uncertainty, 1_000, 0).unwrap();
    let tp = solve_two_point(&example1(), 0.25, &d, &sp, &cfg).unwrap();
    gate.check(
        (tp.surrogate_objective - oracle.value).abs() <= 0.05,
        format!(
            "two-point {:.4} within 0.05 of oracle {:.4}",
            tp.surrogate_objective, oracle.value
        ),
    );

    gate.finish(Duration::from_secs(120));
}

#[test]
fn criterion_05_objective_flat_beyond_two_support_points() {
    let mut gate = Gate::new(5);
    let p = example1();
    let d = sample_uncertainty(&p.uncertainty, 1_000, 0).unwrap();
    let sp = SmoothingParams::new(0.01, 0.01).unwrap();
    let cfg = fast_cfg(8, 300);

    let rows = support_size_study(&p, 0.25, &[1, 2, 5, 10, 20, 30, 50], &d, &sp, &cfg).unwrap();
    let j = |s: usize| rows.iter().find(|r| r.s == s).unwrap().objective;
    let j2 = j(2);
    for s in [5, 10, 20, 30, 50] {
        gate.check(
            (j(s) - j2).abs() <= 0.05,
            format!("|J({s}) - J(2)| = {:.4} <= 0.05", (j(s) - j2).abs()),
        );
    }
    gate.check(
        j(1) - j2 >= 1.0,
        format!("J(1) - J(2) = {:.4} >= 1.0 (analytic gap 1.652)", j(1) - j2),
    );

    gate.finish(Duration::from_secs(300));
}

#[test]
fn criterion_06_support_points_sit_on_the_frontier_and_convex_case_degenerates() {
    let mut gate = Gate::new(6);
    let sp = SmoothingParams::new(0.01, 0.01).unwrap();
    let cfg = fast_cfg(8, 300);

    // Each optimal support point must be quantile-optimal: no cheaper point
    // exists at its own realized violation level.
    let p = example1();
    let d = sample_uncertainty(&p.uncertainty, 2_000, 1).unwrap();
    let tp = solve_two_point(&p, 0.25, &d, &sp, &cfg).unwrap();
    for x in [&tp.policy.x1, &tp.policy.x2] {
        let beta = 1.0 - true_probability(&p, x).unwrap();
        let (_, jstar) = deterministic_grid_1d(&p, beta, 1e-4).unwrap();
        let jx = p.objective(x);
        gate.check(
            (jx - jstar).abs() <= 0.02,
            format!("support {:.4}: J = {jx:.4} vs frontier {jstar:.4} (beta {beta:.4})", x[0]),
        );
    }

    // Convex frontier: mixing cannot help.
    let lin = linear1d();
    let dl = sample_uncertainty(&lin.uncertainty, 2_000, 1).unwrap();
    let det = solve_deterministic(&lin, 0.25, &dl, &sp, &cfg).unwrap();
    let tpl = solve_two_point(&lin, 0.25, &dl, &sp, &cfg).unwrap();
    gate.check(
        (tpl.surrogate_objective - det.objective_value).abs() <= 0.02,
        format!(
            "linear case: |two-point {:.4} - deterministic {:.4}| <= 0.02",
            tpl.surrogate_objective, det.objective_value
        ),
    );

    // Degenerate noise, zero violation budget: the mixture collapses onto the
    // deterministic optimum exactly (up to solver tolerance).
    let pm = linear1d_pointmass(0.5);
    let dm = sample_uncertainty(&pm.uncertainty, 100, 1).unwrap();
    let detm = solve_deterministic(&pm, 0.0, &dm, &sp, &cfg).unwrap();
    let tpm = solve_two_point(&pm, 0.0, &dm, &sp, &cfg).unwrap();
    gate.check(
        (tpm.surrogate_objective - detm.objective_value).abs() <= 1e-6,
        format!(
            "point-mass alpha=0: |two-point {:.8} - deterministic {:.8}| <= 1e-6",
            tpm.surrogate_objective, detm.objective_value
        ),
    );

    gate.finish(Duration::from_secs(120));
}

#[test]
fn criterion_07_median_error_shrinks_with_sample_size() {
    let mut gate = Gate::new(7);
    let p = example1();
    let oracle = ConvergenceOracle {
        objective: TWO_POINT_OPTIMUM,
        policy: TwoPointPolicy { mu1: 0.6558317545723777, x1: vec![-2.0], x2: vec![2.0] },
    };
    let cfg = fast_cfg(6, 300);
    let report =
        convergence_study(&p, 0.25, &[100, 1_000, 10_000], &[0.1, 0.01], 10, &oracle, &cfg, 0)
            .unwrap();

    for eps in [0.1, 0.01] {
        let meds: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.epsilon == eps)
            .map(|r| r.median_objective_error)
            .collect();
        assert_eq!(meds.len(), 3);
        gate.check(
            meds[0] >= meds[1] && meds[1] >= meds[2],
            format!("eps {eps}: medians {:.4} >= {:.4} >= {:.4}", meds[0], meds[1], meds[2]),
        );
        gate.check(meds[2] <= 0.05, format!("eps {eps}: final median {:.4} <= 0.05", meds[2]));
    }

    gate.finish(Duration::from_secs(600));
}

#[test]
fn criterion_08_infeasibility_rate_respects_the_exponential_bound() {
    let mut gate = Gate::new(8);
    let p = example1();
    let sp = SmoothingParams::new(0.01, 0.01).unwrap();
    let cfg = fast_cfg(4, 200);

    let rep =
        feasibility_bound_study(&p, 0.25, 0.20, 500, 200, &sp, &cfg, 11, 200, 100_000).unwrap();
    let slack = 2.0
        * (rep.empirical_infeasible_fraction * (1.0 - rep.empirical_infeasible_fraction)
            / rep.trials as f64)
            .sqrt();
    gate.check(
        rep.empirical_infeasible_fraction <= rep.bound + slack,
        format!(
            "infeasible fraction {:.4} <= exp(-2 N R^2) = {:.4} + binomial slack {:.4} (R = {:.4})",
            rep.empirical_infeasible_fraction, rep.bound, slack, rep.r_estimate
        ),
    );

    gate.finish(Duration::from_secs(600));
}

#[test]
fn criterion_09_quadrotor_desk_scale() {
    let mut gate = Gate::new(9);
    let params = QuadrotorParams::default();
    let model = params.uncertainty_model().unwrap();
    let d = sample_uncertainty(&model, 500, 9).unwrap();
    let problem = make_problem(&params, &d).unwrap();
    let sp = SmoothingParams::new(0.5, 0.05).unwrap();
    let cfg = SolverConfig {
        multistarts: 4,
        max_iterations: 300,
        kkt_tolerance: 1e-3,
        feasibility_tolerance: 1e-6,
        ..Default::default()
    };

    let det = solve_deterministic(&problem, 0.15, &d, &sp, &cfg).unwrap();
    let tp = solve_two_point(&problem, 0.15, &d, &sp, &cfg).unwrap();
    let scen = scenario_solve(&problem, &d, &cfg).unwrap();

    let mc_tp =
        monte_carlo_validate(&problem, &Policy::TwoPoint(tp.policy.clone()), 2_000, 77).unwrap();
    let mc_det = monte_carlo_validate(
        &problem,
        &Policy::Deterministic { point: det.point.clone() },
        2_000,
        77,
    )
    .unwrap();
    let mc_scen = monte_carlo_validate(
        &problem,
        &Policy::Deterministic { point: scen.point.clone() },
        2_000,
        77,
    )
    .unwrap();

    // (a) Two-point policy holds the violation budget out of sample.
    gate.check(
        mc_tp.violation_probability <= 0.17,
        format!("(a) two-point MC violation {:.4} <= 0.17", mc_tp.violation_probability),
    );
    // (b) The mixture is no more expensive than the deterministic policy.
    gate.check(
        mc_tp.expected_cost <= mc_det.expected_cost,
        format!(
            "(b) two-point cost {:.4} <= deterministic cost {:.4}",
            mc_tp.expected_cost, mc_det.expected_cost
        ),
    );
    // (c) The all-scenarios baseline is near-zero-risk out of sample.
    gate.check(
        mc_scen.violation_probability <= 0.02,
        format!("(c) scenario MC violation {:.4} <= 0.02", mc_scen.violation_probability),
    );

    gate.finish(Duration::from_secs(900));
}

#[test]
fn criterion_10_csv_artifacts_reproduce_bitwise() {
    let mut gate = Gate::new(10);
    let tmp = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_rerun");
    let _ = std::fs::remove_dir_all(&tmp);

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ccpmo"))
            .args([
                "solve",
                "--builtin",
                "example1",
                "--alpha",
                "0.25",
                "--n-samples",
                "800",
                "--seed",
                "3",
                "--multistarts",
                "4",
                "--frontier-grid",
                "5",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    run(&tmp.join("a"));
    run(&tmp.join("b"));
    let a = std::fs::read(tmp.join("a/summary.csv")).unwrap();
    let b = std::fs::read(tmp.join("b/summary.csv")).unwrap();
    gate.check(a == b, format!("summary.csv reruns agree bitwise ({} bytes)", a.len()));

    let study = |out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ccpmo"))
            .args([
                "study",
                "frontier",
                "--builtin",
                "example1",
                "--alpha",
                "0.25",
                "--n-samples",
                "500",
                "--seed",
                "3",
                "--multistarts",
                "4",
                "--frontier-grid",
                "6",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    study(&tmp.join("c"));
    study(&tmp.join("d"));
    let c = std::fs::read(tmp.join("c/frontier.csv")).unwrap();
    let e = std::fs::read(tmp.join("d/frontier.csv")).unwrap();
    gate.check(c == e, format!("frontier.csv reruns agree bitwise ({} bytes)", c.len()));

    gate.finish(Duration::from_secs(120));
}
