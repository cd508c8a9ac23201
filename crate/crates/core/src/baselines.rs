//! Deterministic-decision baselines: the scenario approach (every sampled
//! constraint enforced hard) and sample-average approximation over an
//! exhaustive grid. Both produce a single decision for head-to-head
//! comparison with the mixture solvers.

use std::sync::Arc;

use rayon::prelude::*;

use crate::nlp::{minimize, Inequality, NlpProblem, SolveResult, SolverConfig};
use crate::problem::ProblemInstance;
use crate::sampling::SampleSet;
use crate::smoothing::empirical_prob;
use crate::{Error, Result};

/// Temperature schedule for the log-sum-exp surrogate of the scenario max.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioOptions {
    pub temperature_init: f64,
    pub temperature_shrink: f64,
    pub max_rounds: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { temperature_init: 0.1, temperature_shrink: 0.1, max_rounds: 6 }
    }
}

/// `max_j h_j` overestimated smoothly: `m + tau ln Σ exp((h_j - m)/tau)`
/// with `m = max_j h_j`, so the surrogate never sits below the true max and
/// surrogate-feasible points are feasible for every sample.
fn lse_max(h: &[f64], tau: f64) -> f64 {
    let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = h.iter().map(|&v| ((v - m) / tau).exp()).sum();
    m + tau * sum.ln()
}

fn scenario_margins(problem: &ProblemInstance, x: &[f64], d: &SampleSet) -> Vec<f64> {
    let mut scratch = Vec::new();
    d.iter().map(|xi| problem.constraints.eval_max(x, xi, &mut scratch).0).collect()
}

/// Scenario approach with default temperature schedule.
pub fn scenario_solve(
    problem: &ProblemInstance,
    d: &SampleSet,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    scenario_solve_with(problem, d, cfg, &ScenarioOptions::default())
}

/// Minimize `J(x)` subject to `hbar(x, xi_j) <= 0` for every sample. The max
/// over samples is smoothed by a log-sum-exp overestimate whose temperature
/// shrinks over outer rounds (warm-started) until the true max at the
/// solution is within the feasibility tolerance.
pub fn scenario_solve_with(
    problem: &ProblemInstance,
    d: &SampleSet,
    cfg: &SolverConfig,
    opts: &ScenarioOptions,
) -> Result<SolveResult> {
    if d.is_empty() {
        return Err(Error::InvalidParameter("scenario sample set is empty".into()));
    }
    if !(opts.temperature_init > 0.0
        && opts.temperature_shrink > 0.0
        && opts.temperature_shrink < 1.0
        && opts.max_rounds >= 1)
    {
        return Err(Error::InvalidParameter("invalid scenario temperature schedule".into()));
    }
    if d.dim() != problem.uncertainty.dim() {
        return Err(Error::DimensionMismatch {
            what: "scenario samples",
            expected: problem.uncertainty.dim(),
            got: d.dim(),
        });
    }

    let mut tau = opts.temperature_init;
    let mut warm: Vec<Vec<f64>> = vec![problem.domain.midpoint()];
    let mut best: Option<SolveResult> = None;
    let mut iterations = 0usize;
    let mut starts_used = 0usize;

    for round in 0..opts.max_rounds {
        let ctx = Arc::new((problem.clone(), d.clone()));
        let (ce, cg) = (ctx.clone(), ctx.clone());
        let c_obj = Arc::new(problem.clone());
        let c_grad = Arc::new(problem.clone());
        let tau_e = tau;
        let nlp = NlpProblem {
            lower: problem.domain.lower().to_vec(),
            upper: problem.domain.upper().to_vec(),
            objective: Arc::new(move |v: &[f64]| c_obj.objective(v)),
            gradient: Arc::new(move |v: &[f64]| c_grad.objective_grad(v)),
            inequalities: vec![Inequality {
                eval: Arc::new(move |v: &[f64]| lse_max(&scenario_margins(&ce.0, v, &ce.1), tau_e)),
                grad: Arc::new(move |v: &[f64]| {
                    // d lse / dx = sum_j softmax_j * d hbar_j / dx, with the
                    // per-sample max differentiated through its active row.
                    let (problem, d) = (&cg.0, &cg.1);
                    let mut scratch = Vec::new();
                    let evals: Vec<(f64, usize)> = d
                        .iter()
                        .map(|xi| problem.constraints.eval_max(v, xi, &mut scratch))
                        .collect();
                    let m = evals.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
                    let weights: Vec<f64> =
                        evals.iter().map(|e| ((e.0 - m) / tau_e).exp()).collect();
                    let total: f64 = weights.iter().sum();
                    let mut grad = vec![0.0; v.len()];
                    for (j, xi) in d.iter().enumerate() {
                        let w = weights[j] / total;
                        if w < 1e-300 {
                            continue;
                        }
                        let row = problem.constraints.jacobian_row(v, xi, evals[j].1);
                        for k in 0..grad.len() {
                            grad[k] += w * row[k];
                        }
                    }
                    grad
                }),
            }],
            warm_starts: warm.clone(),
        };
        // Full multistart sweep once, then cheap warm-started refinements.
        let round_cfg = if round == 0 { *cfg } else { SolverConfig { multistarts: 1, ..*cfg } };
        let sol = minimize(&nlp, &round_cfg)?;
        iterations += sol.iterations;
        starts_used += sol.starts_used;

        let margins = scenario_margins(problem, &sol.point, d);
        let true_max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let violation = true_max.max(0.0);
        let replace = match &best {
            None => true,
            Some(b) => {
                let b_feas = b.max_constraint_violation <= cfg.feasibility_tolerance;
                let s_feas = violation <= cfg.feasibility_tolerance;
                match (s_feas, b_feas) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => sol.objective_value < b.objective_value,
                    (false, false) => violation < b.max_constraint_violation,
                }
            }
        };
        if replace {
            let worst = margins
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
                .unwrap_or(0);
            best = Some(SolveResult {
                objective_value: sol.objective_value,
                max_constraint_violation: violation,
                converged: sol.converged && violation <= cfg.feasibility_tolerance,
                iterations: 0,
                starts_used: 0,
                diagnostic: if violation <= cfg.feasibility_tolerance {
                    None
                } else {
                    Some(format!(
                        "scenario constraints unsatisfied; worst sample index {worst} with margin {true_max:.3e}"
                    ))
                },
                point: sol.point.clone(),
            });
        }

        if violation <= cfg.feasibility_tolerance {
            break;
        }
        warm = vec![sol.point];
        tau *= opts.temperature_shrink;
    }

    let mut out = best.expect("at least one round ran");
    out.iterations = iterations;
    out.starts_used = starts_used;
    Ok(out)
}

/// Sample-average approximation by exhaustive grid enumeration: over a
/// uniform grid with `resolution` points per axis, return the point with the
/// lowest objective among those whose empirical feasible fraction reaches
/// `1 - alpha`. Only small decision dimensions are enumerable.
pub fn saa_grid_solve(
    problem: &ProblemInstance,
    alpha: f64,
    d: &SampleSet,
    resolution: usize,
) -> Result<SolveResult> {
    let n = problem.dim();
    if n > 2 {
        return Err(Error::Unsupported(format!(
            "grid enumeration is limited to 2 decision dimensions, got {n}; larger instances need a mixed-integer formulation"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be >= 2".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let lower = problem.domain.lower();
    let upper = problem.domain.upper();
    let axis =
        |k: usize, i: usize| lower[k] + (upper[k] - lower[k]) * i as f64 / (resolution - 1) as f64;
    let total = resolution.pow(n as u32);
    let need = 1.0 - alpha;

    // Parallel over first-axis slices; each slice scans in index order and
    // the final reduce keeps the lexicographically first minimizer.
    let per_slice: Vec<Option<(usize, f64, Vec<f64>, f64)>> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(usize, f64, Vec<f64>, f64)> = None;
            let inner = if n == 2 { resolution } else { 1 };
            for j in 0..inner {
                let x = if n == 2 { vec![axis(0, i), axis(1, j)] } else { vec![axis(0, i)] };
                let p = empirical_prob(problem, &x, d).expect("dims fixed");
                if p < need {
                    continue;
                }
                let val = problem.objective(&x);
                if best.as_ref().map_or(true, |b| val < b.1) {
                    best = Some((i * inner + j, val, x, p));
                }
            }
            best
        })
        .collect();

    let mut best: Option<(usize, f64, Vec<f64>, f64)> = None;
    for cand in per_slice.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => cand.1 < b.1 || (cand.1 == b.1 && cand.0 < b.0),
        };
        if better {
            best = Some(cand);
        }
    }
    match best {
        Some((_, val, x, p)) => Ok(SolveResult {
            point: x,
            objective_value: val,
            max_constraint_violation: (need - p).max(0.0),
            converged: true,
            iterations: 0,
            starts_used: total,
            diagnostic: None,
        }),
        None => {
            Err(Error::Infeasible(format!("no grid point reaches empirical probability {need}")))
        }
    }
}
