//! Monte-Carlo validation of policies against the true uncertainty, plus the
//! empirical studies: sample-size/smoothing convergence, support-size
//! flatness, and the Hoeffding-style feasibility bound with its constant R.

use rayon::prelude::*;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nlp::SolverConfig;
use crate::problem::{true_probability, ProblemInstance};
use crate::sampling::{draw_one, sample_uncertainty, SampleSet};
use crate::smoothing::{empirical_prob, smooth_prob, SmoothingParams};
use crate::solver::{solve_s_point, solve_two_point, Policy, TwoPointPolicy};
use crate::special::{beta_quantile, mix_seed, pairwise_sum, u64_to_open01};
use crate::{Error, Result};

/// Out-of-sample estimate of a policy's expected cost and violation
/// probability, with 95% confidence halfwidths.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub expected_cost: f64,
    pub cost_ci_halfwidth: f64,
    pub violation_probability: f64,
    pub violation_ci_halfwidth: f64,
    pub violation_count: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Per-(N, epsilon) median errors of the mixture solve against a reference
/// optimum, over repeated fresh sample sets.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub epsilon: f64,
    pub median_objective_error: f64,
    pub median_solution_distance: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

/// Reference optimum a convergence study measures against.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceOracle {
    pub objective: f64,
    pub policy: TwoPointPolicy,
}

/// Outcome of the feasibility-bound experiment: the estimated margin
/// constant R, the resulting exponential bound, and the observed fraction of
/// trials whose returned policy misses the true probability threshold.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeasibilityBoundReport {
    pub n: usize,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub r_estimate: f64,
    pub bound: f64,
    pub empirical_infeasible_fraction: f64,
    pub trials: usize,
}

/// One S-vs-objective row of the support-size study.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SupportSizeRow {
    pub s: usize,
    pub objective: f64,
    pub converged: bool,
}

/// Estimate expected cost and violation probability of a policy by fresh
/// Monte-Carlo trials. Each trial derives its own generator from `seed`, so
/// results are independent of execution order and thread count; one uniform
/// selects the decision, then the scenario is drawn from the same stream.
pub fn monte_carlo_validate(
    problem: &ProblemInstance,
    policy: &Policy,
    m: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if m < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials for confidence intervals, got {m}"
        )));
    }
    let rows: Vec<(f64, bool)> = (0..m)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, t as u64));
            let x = policy.draw(&mut rng);
            let xi = draw_one(&problem.uncertainty, &mut rng);
            let mut scratch = Vec::new();
            let (hbar, _) = problem.constraints.eval_max(x, &xi, &mut scratch);
            (problem.scenario_cost(x, &xi), hbar > 0.0)
        })
        .collect();

    let costs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mf = m as f64;
    let mean = pairwise_sum(&costs) / mf;
    let sq: Vec<f64> = costs.iter().map(|c| (c - mean) * (c - mean)).collect();
    let var = pairwise_sum(&sq) / (mf - 1.0);
    let cost_hw = 1.96 * (var / mf).sqrt();

    let k = rows.iter().filter(|r| r.1).count();
    let p = k as f64 / mf;
    // Normal-approximation interval, except near the boundary (fewer than 10
    // counts on either side) where the exact binomial interval is used; the
    // reported halfwidth is the larger side of that interval.
    let viol_hw = if k < 10 || m - k < 10 {
        let lower = if k == 0 { 0.0 } else { beta_quantile(k as f64, (m - k + 1) as f64, 0.025) };
        let upper = if k == m { 1.0 } else { beta_quantile((k + 1) as f64, (m - k) as f64, 0.975) };
        (p - lower).max(upper - p)
    } else {
        1.96 * (p * (1.0 - p) / mf).sqrt()
    };

    Ok(ValidationReport {
        expected_cost: mean,
        cost_ci_halfwidth: cost_hw,
        violation_probability: p,
        violation_ci_halfwidth: viol_hw,
        violation_count: k,
        trials: m,
        seed,
    })
}

/// `Σ_i mu_i P(x_i)` under the closed-form probability when available,
/// otherwise the empirical fraction over `reference`.
pub fn mixture_probability(
    problem: &ProblemInstance,
    policy: &TwoPointPolicy,
    reference: Option<&SampleSet>,
) -> Result<f64> {
    let point_prob = |x: &[f64]| -> Result<f64> {
        if let Some(p) = true_probability(problem, x) {
            Ok(p)
        } else if let Some(r) = reference {
            empirical_prob(problem, x, r)
        } else {
            Err(Error::Unsupported("no closed-form probability and no reference sample set".into()))
        }
    };
    Ok(policy.mu1 * point_prob(&policy.x1)? + (1.0 - policy.mu1) * point_prob(&policy.x2)?)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Distance between two-point mixtures up to relabeling of the support.
pub fn policy_distance(a: &TwoPointPolicy, b: &TwoPointPolicy) -> f64 {
    let pt = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    };
    let direct = pt(&a.x1, &b.x1) + pt(&a.x2, &b.x2) + (a.mu1 - b.mu1).abs();
    let swapped = pt(&a.x1, &b.x2) + pt(&a.x2, &b.x1) + (a.mu1 - (1.0 - b.mu1)).abs();
    direct.min(swapped)
}

/// For each (N, epsilon) run the two-point solve on `repetitions` fresh
/// sample sets (gamma = 0) and record median errors against the reference
/// optimum. Rows are ordered epsilon-major, N ascending within.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    problem: &ProblemInstance,
    alpha: f64,
    n_list: &[usize],
    epsilon_list: &[f64],
    repetitions: usize,
    oracle: &ConvergenceOracle,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || epsilon_list.is_empty() || repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need nonempty N list, epsilon list, and repetitions >= 1".into(),
        ));
    }
    for w in n_list.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter("N list must be strictly increasing".into()));
        }
    }
    let mut rows = Vec::new();
    for (ei, &eps) in epsilon_list.iter().enumerate() {
        let sp = SmoothingParams::new(eps, 0.0)?;
        // One seed stream per epsilon, shared by every N: the sample streams
        // are prefix-stable, so successive N reuse the smaller set's draws
        // (common random numbers) and the error medians decay cleanly.
        let cell = mix_seed(seed, ei as u64);
        for &n in n_list.iter() {
            let runs: Vec<Result<(f64, f64)>> = (0..repetitions)
                .into_par_iter()
                .map(|rep| {
                    let d =
                        sample_uncertainty(&problem.uncertainty, n, mix_seed(cell, rep as u64))?;
                    let sol = solve_two_point(problem, alpha, &d, &sp, cfg)?;
                    Ok((
                        (sol.surrogate_objective - oracle.objective).abs(),
                        policy_distance(&sol.policy, &oracle.policy),
                    ))
                })
                .collect();
            let mut errs = Vec::with_capacity(repetitions);
            let mut dists = Vec::with_capacity(repetitions);
            for r in runs {
                let (e, d) = r?;
                errs.push(e);
                dists.push(d);
            }
            rows.push(ConvergenceRow {
                n,
                epsilon: eps,
                median_objective_error: median(&mut errs),
                median_solution_distance: median(&mut dists),
                repetitions,
            });
        }
    }
    Ok(ConvergenceReport { rows })
}

/// `exp(-2 N R^2)`, the exponential bound on the probability that the
/// sample-approximate solution violates the true chance constraint; vacuous
/// (= 1) when R <= 0.
pub fn hoeffding_feasibility_bound(n: usize, r: f64) -> f64 {
    assert!(n >= 1, "sample count must be >= 1");
    if r <= 0.0 || !r.is_finite() {
        return 1.0;
    }
    (-2.0 * n as f64 * r * r).exp()
}

/// Estimate the margin constant R = (alpha - alpha') + inf_x [P(x) -
/// P_smooth(x)] by probing seeded uniform points in the decision box. The
/// infimum of the mixture form over the simplex sits at a vertex, so single
/// points suffice. P comes from the closed form when available, else from
/// `reference`; the smoothed probability always averages over `reference`.
/// Finitely many probes can only overestimate R.
pub fn estimate_r(
    problem: &ProblemInstance,
    alpha: f64,
    alpha_prime: f64,
    sp: &SmoothingParams,
    reference: &SampleSet,
    probe_count: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha_prime < alpha) {
        return Err(Error::InvalidParameter(format!(
            "need alpha_prime < alpha, got {alpha_prime} >= {alpha}"
        )));
    }
    if probe_count < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 probe points, got {probe_count}"
        )));
    }
    let dim = problem.dim();
    let lower = problem.domain.lower().to_vec();
    let upper = problem.domain.upper().to_vec();
    let probes: Vec<Vec<f64>> = {
        use rand_chacha::rand_core::RngCore;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..probe_count)
            .map(|_| {
                (0..dim)
                    .map(|k| lower[k] + (upper[k] - lower[k]) * u64_to_open01(rng.next_u64()))
                    .collect()
            })
            .collect()
    };
    let gaps: Vec<Result<f64>> = probes
        .par_iter()
        .map(|x| {
            let p = match true_probability(problem, x) {
                Some(p) => p,
                None => empirical_prob(problem, x, reference)?,
            };
            Ok(p - smooth_prob(problem, x, reference, sp)?)
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    for g in gaps {
        min_gap = min_gap.min(g?);
    }
    Ok((alpha - alpha_prime) + min_gap)
}

/// Repeated two-point solves at the tightened threshold `alpha_prime`, each
/// on a fresh sample set of size `n`; a trial counts as infeasible when the
/// returned mixture misses the true threshold `alpha`. Reported next to the
/// exponential bound at the estimated R.
#[allow(clippy::too_many_arguments)]
pub fn feasibility_bound_study(
    problem: &ProblemInstance,
    alpha: f64,
    alpha_prime: f64,
    n: usize,
    trials: usize,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
    seed: u64,
    probe_count: usize,
    reference_size: usize,
) -> Result<FeasibilityBoundReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let reference =
        sample_uncertainty(&problem.uncertainty, reference_size, mix_seed(seed, u64::MAX))?;
    let r_estimate =
        estimate_r(problem, alpha, alpha_prime, sp, &reference, probe_count, mix_seed(seed, 777))?;
    let bound = hoeffding_feasibility_bound(n, r_estimate);

    let flags: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let d = sample_uncertainty(&problem.uncertainty, n, mix_seed(seed, t as u64))?;
            let sol = solve_two_point(problem, alpha_prime, &d, sp, cfg)?;
            let true_mix = mixture_probability(problem, &sol.policy, Some(&reference))?;
            Ok(true_mix < 1.0 - alpha)
        })
        .collect();
    let mut infeasible = 0usize;
    for f in flags {
        if f? {
            infeasible += 1;
        }
    }
    Ok(FeasibilityBoundReport {
        n,
        alpha,
        alpha_prime,
        r_estimate,
        bound,
        empirical_infeasible_fraction: infeasible as f64 / trials as f64,
        trials,
    })
}

/// One mixture solve per support size S; S = 1 is the deterministic solve.
pub fn support_size_study(
    problem: &ProblemInstance,
    alpha: f64,
    s_list: &[usize],
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Result<Vec<SupportSizeRow>> {
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("support size list is empty".into()));
    }
    let mut rows = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let sol = solve_s_point(problem, s, alpha, d, sp, cfg)?;
        rows.push(SupportSizeRow {
            s,
            objective: sol.surrogate_objective,
            converged: sol.converged,
        });
    }
    Ok(rows)
}
