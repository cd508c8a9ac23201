//! Solvers for chance-constrained decisions: a single-point (deterministic)
//! solve, mixture solves over two or S support points, and the frontier/chord
//! route that recovers the optimal two-point mixture from deterministic
//! solves at a grid of violation thresholds.
//!
//! All randomized machinery (multistarts, sample draws) is seeded, and every
//! parallel aggregation is order-fixed, so repeated runs agree bitwise.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::nlp::{minimize, Inequality, NlpProblem, SolveResult, SolverConfig};
use crate::problem::ProblemInstance;
use crate::sampling::SampleSet;
use crate::smoothing::{smooth_prob, smooth_prob_grad, SmoothingParams};
use crate::special::{mix_seed, pairwise_sum, u64_to_open01};
use crate::{Error, Result};

/// Mixture of two decisions: play `x1` with probability `mu1`, else `x2`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwoPointPolicy {
    pub mu1: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl TwoPointPolicy {
    pub fn mu2(&self) -> f64 {
        1.0 - self.mu1
    }

    pub fn expected_objective(&self, problem: &ProblemInstance) -> f64 {
        self.mu1 * problem.objective(&self.x1) + (1.0 - self.mu1) * problem.objective(&self.x2)
    }

    /// Order the support points lexicographically (weight follows its point)
    /// so equal mixtures compare equal and serialized output is stable.
    pub fn canonicalize(&mut self) {
        if self.x2 < self.x1 {
            std::mem::swap(&mut self.x1, &mut self.x2);
            self.mu1 = 1.0 - self.mu1;
        }
    }
}

/// Mixture over S support points.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SPointPolicy {
    pub weights: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl SPointPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.points.len() || self.weights.is_empty() {
            return Err(Error::InvalidParameter(
                "weights and points must be nonempty and match in length".into(),
            ));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be >= 0".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights must sum to 1, got {total}")));
        }
        Ok(())
    }

    pub fn expected_objective(&self, problem: &ProblemInstance) -> f64 {
        self.weights.iter().zip(&self.points).map(|(w, x)| w * problem.objective(x)).sum()
    }
}

/// Any decision rule this crate can evaluate: a fixed point or a mixture.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Deterministic { point: Vec<f64> },
    TwoPoint(TwoPointPolicy),
    SPoint(SPointPolicy),
}

impl Policy {
    /// Draw a decision. Always consumes exactly one uniform from `rng`, so
    /// downstream random draws stay aligned across policy kinds; a two-point
    /// policy with `mu1 = 1` replays identically to the deterministic point.
    pub fn draw<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a [f64] {
        let u = u64_to_open01(rng.next_u64());
        match self {
            Policy::Deterministic { point } => point,
            Policy::TwoPoint(p) => {
                if u <= p.mu1 {
                    &p.x1
                } else {
                    &p.x2
                }
            }
            Policy::SPoint(p) => {
                let mut acc = 0.0;
                for (k, &w) in p.weights.iter().enumerate() {
                    acc += w;
                    if u <= acc {
                        return &p.points[k];
                    }
                }
                p.points.last().expect("nonempty policy")
            }
        }
    }
}

/// Result of a mixture solve: the policy, its sample-smoothed objective, and
/// the margin by which the smoothed probability clears the threshold
/// (positive = strictly feasible).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TwoPointSolve {
    pub policy: TwoPointPolicy,
    pub surrogate_objective: f64,
    pub constraint_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub starts_used: usize,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SPointSolve {
    pub policy: SPointPolicy,
    pub surrogate_objective: f64,
    pub constraint_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub starts_used: usize,
    pub diagnostic: Option<String>,
}

/// One deterministic solve at violation threshold `alpha_tilde`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrontierEntry {
    pub alpha_tilde: f64,
    pub jstar: f64,
    pub xstar: Vec<f64>,
}

/// Risk-cost frontier: deterministic optima versus violation threshold,
/// non-increasing in the threshold after the monotone repair pass.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Frontier {
    pub entries: Vec<FrontierEntry>,
    /// Thresholds whose solves did not converge, with the reason.
    pub dropped: Vec<(f64, String)>,
}

/// Best mixture read off a frontier: chord (or single entry) minimizing the
/// mixed objective subject to the mixed threshold staying at or below alpha.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FrontierMix {
    pub policy: TwoPointPolicy,
    pub objective: f64,
    /// Weighted mean of the entry thresholds; <= alpha by construction.
    pub mean_threshold: f64,
}

fn check_inputs(
    problem: &ProblemInstance,
    alpha_prime: f64,
    d: &SampleSet,
    sp: &SmoothingParams,
) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha_prime) {
        return Err(Error::InvalidParameter(format!(
            "violation threshold must be in [0, 1], got {alpha_prime}"
        )));
    }
    // One probe evaluation surfaces dimension mismatches before closures
    // (which cannot return errors) capture the data.
    smooth_prob(problem, &problem.domain.midpoint(), d, sp)?;
    Ok(())
}

/// Feasibility warm start for the constrained solves: maximize the smoothed
/// probability at a sequence of shrinking widths, starting from a width that
/// covers the sample margins at the box midpoint.
///
/// Far from the constraint boundary every sample margin sits outside the
/// user's smoothing band, so the smoothed probability is exactly flat and
/// generated starts feel no pull toward feasibility. Widening the band until
/// it spans the margins restores a C^1 signal everywhere; each continuation
/// stage then sharpens the band toward the user's width. Stops early once the
/// empirical probability already clears the threshold.
fn feasibility_start(
    problem: &ProblemInstance,
    alpha_prime: f64,
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Vec<f64> {
    let need = 1.0 - alpha_prime;
    let mut v = problem.domain.midpoint();

    let mut scratch = Vec::new();
    let scale = {
        let terms: Vec<f64> =
            d.iter().map(|xi| problem.constraints.eval_max(&v, xi, &mut scratch).0.abs()).collect();
        pairwise_sum(&terms) / terms.len().max(1) as f64
    };
    let floor = 4.0 * sp.epsilon;
    let mut eps = (2.0 * scale).max(floor);

    for stage in 0..6u64 {
        // Stop once the point satisfies the constraint as the main solve will
        // see it, i.e. under the caller's smoothing, not the raw indicator.
        match smooth_prob(problem, &v, d, sp) {
            Ok(p) if p >= need => break,
            Ok(_) => {}
            Err(_) => break,
        }
        let spk = SmoothingParams { epsilon: eps, gamma: 0.0 };
        let ce = Arc::new((problem.clone(), d.clone(), spk));
        let cg = ce.clone();
        let nlp = NlpProblem {
            lower: problem.domain.lower().to_vec(),
            upper: problem.domain.upper().to_vec(),
            objective: Arc::new(move |x: &[f64]| {
                -smooth_prob(&ce.0, x, &ce.1, &ce.2).expect("dims checked")
            }),
            gradient: Arc::new(move |x: &[f64]| {
                let mut g = smooth_prob_grad(&cg.0, x, &cg.1, &cg.2).expect("dims checked");
                for gi in &mut g {
                    *gi = -*gi;
                }
                g
            }),
            inequalities: vec![],
            warm_starts: vec![v.clone()],
        };
        let pre = SolverConfig {
            multistarts: 1,
            max_iterations: cfg.max_iterations.min(120),
            kkt_tolerance: cfg.kkt_tolerance.max(1e-5),
            seed: mix_seed(cfg.seed, 0x5eed + stage),
            ..*cfg
        };
        if let Ok(r) = minimize(&nlp, &pre) {
            v = r.point;
        }
        if eps <= floor {
            break;
        }
        eps = (eps / 4.0).max(floor);
    }
    v
}

/// Best single decision: minimize `J(x)` over the box subject to the
/// smoothed sample probability staying at or above `1 - alpha_prime`.
pub fn solve_deterministic(
    problem: &ProblemInstance,
    alpha_prime: f64,
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    check_inputs(problem, alpha_prime, d, sp)?;
    let ctx = Arc::new((problem.clone(), d.clone(), *sp));

    let c_obj = Arc::new(problem.clone());
    let c_grad = Arc::new(problem.clone());
    let (ce, cg) = (ctx.clone(), ctx.clone());
    let need = 1.0 - alpha_prime;
    let nlp = NlpProblem {
        lower: problem.domain.lower().to_vec(),
        upper: problem.domain.upper().to_vec(),
        objective: Arc::new(move |v: &[f64]| c_obj.objective(v)),
        gradient: Arc::new(move |v: &[f64]| c_grad.objective_grad(v)),
        inequalities: vec![Inequality {
            eval: Arc::new(move |v: &[f64]| {
                need - smooth_prob(&ce.0, v, &ce.1, &ce.2).expect("dims checked")
            }),
            grad: Arc::new(move |v: &[f64]| {
                let mut g = smooth_prob_grad(&cg.0, v, &cg.1, &cg.2).expect("dims checked");
                for gi in &mut g {
                    *gi = -*gi;
                }
                g
            }),
        }],
        warm_starts: vec![
            problem.domain.midpoint(),
            feasibility_start(problem, alpha_prime, d, sp, cfg),
        ],
    };
    minimize(&nlp, cfg)
}

/// Best two-point mixture. The deterministic solution is both a warm start
/// and an explicit fallback candidate, so the returned surrogate objective
/// never exceeds the deterministic one (beyond feasibility tolerance).
pub fn solve_two_point(
    problem: &ProblemInstance,
    alpha_prime: f64,
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Result<TwoPointSolve> {
    check_inputs(problem, alpha_prime, d, sp)?;
    let det = solve_deterministic(problem, alpha_prime, d, sp, cfg)?;
    let n = problem.dim();
    let need = 1.0 - alpha_prime;

    // Decision vector [mu1, x1, x2]; mu2 = 1 - mu1 eliminates the simplex.
    let mut lower = vec![0.0];
    lower.extend_from_slice(problem.domain.lower());
    lower.extend_from_slice(problem.domain.lower());
    let mut upper = vec![1.0];
    upper.extend_from_slice(problem.domain.upper());
    upper.extend_from_slice(problem.domain.upper());

    let mut warm = vec![1.0];
    warm.extend_from_slice(&det.point);
    warm.extend_from_slice(&det.point);

    let ctx = Arc::new((problem.clone(), d.clone(), *sp));
    let c_obj = Arc::new(problem.clone());
    let c_grad = Arc::new(problem.clone());
    let (ce, cg) = (ctx.clone(), ctx.clone());
    let nlp = NlpProblem {
        lower,
        upper,
        objective: Arc::new(move |v: &[f64]| {
            let (mu, x1, x2) = split_two_point(v, n);
            mu * c_obj.objective(x1) + (1.0 - mu) * c_obj.objective(x2)
        }),
        gradient: Arc::new(move |v: &[f64]| {
            let (mu, x1, x2) = split_two_point(v, n);
            let (j1, j2) = (c_grad.objective(x1), c_grad.objective(x2));
            let (g1, g2) = (c_grad.objective_grad(x1), c_grad.objective_grad(x2));
            let mut out = Vec::with_capacity(2 * n + 1);
            out.push(j1 - j2);
            out.extend(g1.iter().map(|g| mu * g));
            out.extend(g2.iter().map(|g| (1.0 - mu) * g));
            out
        }),
        inequalities: vec![Inequality {
            eval: Arc::new(move |v: &[f64]| {
                let (mu, x1, x2) = split_two_point(v, n);
                let p1 = smooth_prob(&ce.0, x1, &ce.1, &ce.2).expect("dims checked");
                let p2 = smooth_prob(&ce.0, x2, &ce.1, &ce.2).expect("dims checked");
                need - (mu * p1 + (1.0 - mu) * p2)
            }),
            grad: Arc::new(move |v: &[f64]| {
                let (mu, x1, x2) = split_two_point(v, n);
                let p1 = smooth_prob(&cg.0, x1, &cg.1, &cg.2).expect("dims checked");
                let p2 = smooth_prob(&cg.0, x2, &cg.1, &cg.2).expect("dims checked");
                let d1 = smooth_prob_grad(&cg.0, x1, &cg.1, &cg.2).expect("dims checked");
                let d2 = smooth_prob_grad(&cg.0, x2, &cg.1, &cg.2).expect("dims checked");
                let mut out = Vec::with_capacity(2 * n + 1);
                out.push(-(p1 - p2));
                out.extend(d1.iter().map(|g| -mu * g));
                out.extend(d2.iter().map(|g| -(1.0 - mu) * g));
                out
            }),
        }],
        warm_starts: vec![warm],
    };
    let sol = minimize(&nlp, cfg)?;

    // The degenerate mixture at the deterministic point competes directly;
    // whichever is feasible with the lower objective wins.
    let det_feasible = det.max_constraint_violation <= cfg.feasibility_tolerance;
    let sol_feasible = sol.max_constraint_violation <= cfg.feasibility_tolerance;
    let use_det = match (det_feasible, sol_feasible) {
        (true, false) => true,
        (true, true) => det.objective_value < sol.objective_value,
        _ => false,
    };

    let (point_vec, objective, violation, converged, iterations, starts, diagnostic) = if use_det {
        let mut v = vec![1.0];
        v.extend_from_slice(&det.point);
        v.extend_from_slice(&det.point);
        (
            v,
            det.objective_value,
            det.max_constraint_violation,
            det.converged,
            det.iterations,
            sol.starts_used,
            det.diagnostic,
        )
    } else {
        (
            sol.point.clone(),
            sol.objective_value,
            sol.max_constraint_violation,
            sol.converged,
            sol.iterations,
            sol.starts_used,
            sol.diagnostic,
        )
    };

    let (mu, x1, x2) = split_two_point(&point_vec, n);
    let mut policy = TwoPointPolicy { mu1: mu, x1: x1.to_vec(), x2: x2.to_vec() };
    policy.canonicalize();
    let p1 = smooth_prob(problem, &policy.x1, d, sp)?;
    let p2 = smooth_prob(problem, &policy.x2, d, sp)?;
    let slack = policy.mu1 * p1 + (1.0 - policy.mu1) * p2 - need;
    debug_assert!((slack + violation).abs() < 1e-9 || slack >= 0.0);
    Ok(TwoPointSolve {
        policy,
        surrogate_objective: objective,
        constraint_slack: slack,
        converged,
        iterations,
        starts_used: starts,
        diagnostic,
    })
}

fn split_two_point(v: &[f64], n: usize) -> (f64, &[f64], &[f64]) {
    (v[0].clamp(0.0, 1.0), &v[1..1 + n], &v[1 + n..1 + 2 * n])
}

/// Weights of the stick-breaking map: `w_k = t_k Π_{l<k}(1-t_l)` and the
/// last point takes the remaining mass, so any simplex point is reachable
/// from box variables `t ∈ [0,1]^{S-1}`.
fn stick_weights(t: &[f64]) -> Vec<f64> {
    let s = t.len() + 1;
    let mut w = vec![0.0; s];
    let mut b = 1.0;
    for k in 0..t.len() {
        w[k] = t[k] * b;
        b *= 1.0 - t[k];
    }
    w[s - 1] = b;
    w
}

/// Value and t-gradient of `Σ w_k(t) c_k` without dividing by possibly-zero
/// stick remainders: backward recursion `G_k = t_k c_k + (1-t_k) G_{k+1}`
/// gives dF/dt_k = B_{k-1} (c_k - G_{k+1}).
fn stick_value_grad(t: &[f64], c: &[f64]) -> (f64, Vec<f64>) {
    let s = c.len();
    let mut g = vec![0.0; s];
    g[s - 1] = c[s - 1];
    for k in (0..s - 1).rev() {
        g[k] = t[k] * c[k] + (1.0 - t[k]) * g[k + 1];
    }
    let mut dt = vec![0.0; s - 1];
    let mut b = 1.0;
    for k in 0..s - 1 {
        dt[k] = b * (c[k] - g[k + 1]);
        b *= 1.0 - t[k];
    }
    (g[0], dt)
}

/// Best S-point mixture. `S = 1` delegates to the deterministic solve;
/// `S >= 2` warm-starts from both the two-point solution and the
/// deterministic point, so the objective cannot regress against either.
pub fn solve_s_point(
    problem: &ProblemInstance,
    s: usize,
    alpha_prime: f64,
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Result<SPointSolve> {
    if s == 0 {
        return Err(Error::InvalidParameter("support size must be >= 1".into()));
    }
    if s > 64 {
        return Err(Error::Unsupported(format!(
            "support size {s} exceeds the supported maximum of 64"
        )));
    }
    check_inputs(problem, alpha_prime, d, sp)?;
    let need = 1.0 - alpha_prime;
    if s == 1 {
        let det = solve_deterministic(problem, alpha_prime, d, sp, cfg)?;
        let slack = smooth_prob(problem, &det.point, d, sp)? - need;
        return Ok(SPointSolve {
            policy: SPointPolicy { weights: vec![1.0], points: vec![det.point.clone()] },
            surrogate_objective: det.objective_value,
            constraint_slack: slack,
            converged: det.converged,
            iterations: det.iterations,
            starts_used: det.starts_used,
            diagnostic: det.diagnostic,
        });
    }

    let two = solve_two_point(problem, alpha_prime, d, sp, cfg)?;
    let n = problem.dim();

    // Decision vector [t_1..t_{S-1}, x_1.., ..., x_S..].
    let mut lower = vec![0.0; s - 1];
    let mut upper = vec![1.0; s - 1];
    for _ in 0..s {
        lower.extend_from_slice(problem.domain.lower());
        upper.extend_from_slice(problem.domain.upper());
    }

    // Two-point solution embedded: t_1 = mu1, t_2 = 1 kills points 3..S.
    let mut warm_two = vec![0.5; s - 1];
    warm_two[0] = two.policy.mu1;
    if s >= 3 {
        warm_two[1] = 1.0;
    }
    warm_two.extend_from_slice(&two.policy.x1);
    for _ in 1..s {
        warm_two.extend_from_slice(&two.policy.x2);
    }

    let det_point = if two.policy.mu1 >= 0.5 { &two.policy.x1 } else { &two.policy.x2 };
    let mut warm_det = vec![1.0; s - 1];
    for _ in 0..s {
        warm_det.extend_from_slice(det_point);
    }

    let ctx = Arc::new((problem.clone(), d.clone(), *sp));
    let c_obj = Arc::new(problem.clone());
    let c_grad = Arc::new(problem.clone());
    let (ce, cg) = (ctx.clone(), ctx.clone());

    let objective = {
        let s = s;
        Arc::new(move |v: &[f64]| {
            let (t, xs) = split_s_point(v, s, n);
            let w = stick_weights(t);
            (0..s).map(|k| w[k] * c_obj.objective(&xs[k * n..(k + 1) * n])).sum()
        })
    };
    let gradient = {
        let s = s;
        Arc::new(move |v: &[f64]| {
            let (t, xs) = split_s_point(v, s, n);
            let c: Vec<f64> = (0..s).map(|k| c_grad.objective(&xs[k * n..(k + 1) * n])).collect();
            let (_, dt) = stick_value_grad(t, &c);
            let w = stick_weights(t);
            let mut out = dt;
            for k in 0..s {
                if w[k] == 0.0 {
                    out.extend(std::iter::repeat(0.0).take(n));
                } else {
                    let g = c_grad.objective_grad(&xs[k * n..(k + 1) * n]);
                    out.extend(g.iter().map(|gi| w[k] * gi));
                }
            }
            out
        })
    };
    let ineq = Inequality {
        eval: {
            let s = s;
            Arc::new(move |v: &[f64]| {
                let (t, xs) = split_s_point(v, s, n);
                let c: Vec<f64> = (0..s)
                    .map(|k| {
                        smooth_prob(&ce.0, &xs[k * n..(k + 1) * n], &ce.1, &ce.2)
                            .expect("dims checked")
                    })
                    .collect();
                let (val, _) = stick_value_grad(t, &c);
                need - val
            })
        },
        grad: {
            let s = s;
            Arc::new(move |v: &[f64]| {
                let (t, xs) = split_s_point(v, s, n);
                let c: Vec<f64> = (0..s)
                    .map(|k| {
                        smooth_prob(&cg.0, &xs[k * n..(k + 1) * n], &cg.1, &cg.2)
                            .expect("dims checked")
                    })
                    .collect();
                let (_, dt) = stick_value_grad(t, &c);
                let w = stick_weights(t);
                let mut out: Vec<f64> = dt.iter().map(|g| -g).collect();
                for k in 0..s {
                    if w[k] == 0.0 {
                        out.extend(std::iter::repeat(0.0).take(n));
                    } else {
                        let g = smooth_prob_grad(&cg.0, &xs[k * n..(k + 1) * n], &cg.1, &cg.2)
                            .expect("dims checked");
                        out.extend(g.iter().map(|gi| -w[k] * gi));
                    }
                }
                out
            })
        },
    };

    let nlp = NlpProblem {
        lower,
        upper,
        objective,
        gradient,
        inequalities: vec![ineq],
        warm_starts: vec![warm_two, warm_det],
    };
    let sol = minimize(&nlp, cfg)?;

    let (t, xs) = split_s_point(&sol.point, s, n);
    let mut weights = stick_weights(t);
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let points: Vec<Vec<f64>> = (0..s).map(|k| xs[k * n..(k + 1) * n].to_vec()).collect();
    let policy = SPointPolicy { weights, points };
    policy.validate()?;

    let mut mixed = 0.0;
    for (w, x) in policy.weights.iter().zip(&policy.points) {
        if *w > 0.0 {
            mixed += w * smooth_prob(problem, x, d, sp)?;
        }
    }
    Ok(SPointSolve {
        policy,
        surrogate_objective: sol.objective_value,
        constraint_slack: mixed - need,
        converged: sol.converged,
        iterations: sol.iterations,
        starts_used: sol.starts_used,
        diagnostic: sol.diagnostic,
    })
}

fn split_s_point(v: &[f64], s: usize, n: usize) -> (&[f64], &[f64]) {
    (&v[..s - 1], &v[s - 1..s - 1 + s * n])
}

/// Log-spaced violation thresholds bracketing `alpha` from below: `count`
/// points on [max(1e-4, alpha/100), min(0.999, 3 alpha)].
pub fn default_alpha_grid(alpha: f64, count: usize) -> Vec<f64> {
    if alpha <= 0.0 {
        return vec![0.0];
    }
    let lo = (alpha / 100.0).max(1e-4);
    let hi = (3.0 * alpha).clamp(lo, 0.999);
    log_grid(lo, hi, count)
}

/// `count` log-spaced points from `lo` to `hi` inclusive, strictly increasing.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 || hi == lo {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> =
        (0..count).map(|k| (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp()).collect();
    out[0] = lo;
    *out.last_mut().unwrap() = hi;
    out.dedup();
    out
}

/// One deterministic solve per threshold in `alpha_grid` (in parallel);
/// non-converged entries are dropped and recorded. A monotone repair pass
/// then clamps each objective to the best seen at smaller thresholds, since
/// the exact map is non-increasing and bumps can only be solver noise.
pub fn build_frontier(
    problem: &ProblemInstance,
    alpha_grid: &[f64],
    d: &SampleSet,
    sp: &SmoothingParams,
    cfg: &SolverConfig,
) -> Result<Frontier> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidParameter("threshold grid is empty".into()));
    }
    for w in alpha_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "threshold grid must be strictly increasing".into(),
            ));
        }
    }
    if alpha_grid[0] < 0.0 || *alpha_grid.last().unwrap() > 1.0 {
        return Err(Error::InvalidParameter("threshold grid values must lie in [0, 1]".into()));
    }

    let results: Vec<(f64, Result<SolveResult>)> =
        alpha_grid.par_iter().map(|&a| (a, solve_deterministic(problem, a, d, sp, cfg))).collect();

    let mut entries = Vec::new();
    let mut dropped = Vec::new();
    for (a, res) in results {
        match res {
            Ok(r) if r.converged => {
                entries.push(FrontierEntry {
                    alpha_tilde: a,
                    jstar: r.objective_value,
                    xstar: r.point,
                });
            }
            Ok(r) => dropped.push((a, r.diagnostic.unwrap_or_else(|| "did not converge".into()))),
            Err(e) => dropped.push((a, e.to_string())),
        }
    }
    for i in 1..entries.len() {
        if entries[i].jstar > entries[i - 1].jstar {
            entries[i].jstar = entries[i - 1].jstar;
        }
    }
    Ok(Frontier { entries, dropped })
}

/// Read the best mixture off the frontier at level `alpha`: the minimum over
/// single entries with threshold <= alpha and over chords straddling alpha.
/// Chord weights are chosen so the mixed threshold equals alpha exactly.
pub fn mix_from_frontier(frontier: &Frontier, alpha: f64) -> Result<FrontierMix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let e = &frontier.entries;
    let mut best: Option<FrontierMix> = None;
    let mut consider = |cand: FrontierMix| {
        if best.as_ref().map_or(true, |b| cand.objective < b.objective) {
            best = Some(cand);
        }
    };
    for i in 0..e.len() {
        if e[i].alpha_tilde <= alpha {
            consider(FrontierMix {
                policy: TwoPointPolicy { mu1: 1.0, x1: e[i].xstar.clone(), x2: e[i].xstar.clone() },
                objective: e[i].jstar,
                mean_threshold: e[i].alpha_tilde,
            });
        }
    }
    for i in 0..e.len() {
        if e[i].alpha_tilde > alpha {
            continue;
        }
        for j in i + 1..e.len() {
            if e[j].alpha_tilde < alpha {
                continue;
            }
            let nu = (alpha - e[i].alpha_tilde) / (e[j].alpha_tilde - e[i].alpha_tilde);
            let mut policy =
                TwoPointPolicy { mu1: 1.0 - nu, x1: e[i].xstar.clone(), x2: e[j].xstar.clone() };
            policy.canonicalize();
            consider(FrontierMix {
                policy,
                objective: (1.0 - nu) * e[i].jstar + nu * e[j].jstar,
                mean_threshold: (1.0 - nu) * e[i].alpha_tilde + nu * e[j].alpha_tilde,
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no frontier entry with threshold <= {alpha}")))
}

/// Draw `count` decisions from the policy, seeded.
pub fn sample_policy(policy: &Policy, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| policy.draw(&mut rng).to_vec()).collect())
}
