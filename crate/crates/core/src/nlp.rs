//! Box-constrained nonlinear programming with inequality constraints:
//! multistart augmented Lagrangian outer loop, projected-gradient inner loop
//! with Barzilai-Borwein steps and Armijo backtracking.
//!
//! Start points are warm starts supplied by the caller followed by seeded
//! low-discrepancy points, runs execute in parallel, and the reduction over
//! runs is a fixed-order scan, so results are deterministic for a given
//! configuration regardless of thread count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::special::{mix_seed, u64_to_open01};
use crate::{Error, Result};

/// One inequality constraint `g(v) <= 0` with gradient.
#[derive(Clone)]
pub struct Inequality {
    pub eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

/// Smooth objective and constraints over a box.
#[derive(Clone)]
pub struct NlpProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub gradient: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub inequalities: Vec<Inequality>,
    /// Extra start points tried before the generated low-discrepancy starts.
    pub warm_starts: Vec<Vec<f64>>,
}

impl NlpProblem {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Tuning for the multistart augmented-Lagrangian solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Number of generated start points (warm starts come on top).
    pub multistarts: usize,
    /// Inner-iteration budget per start, across all outer rounds.
    pub max_iterations: usize,
    /// Stationarity tolerance: norm of the unit-step projected gradient.
    pub kkt_tolerance: f64,
    /// Max allowed inequality violation for a run to count as feasible.
    pub feasibility_tolerance: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Seed for the low-discrepancy start generator.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            multistarts: 16,
            max_iterations: 500,
            kkt_tolerance: 1e-6,
            feasibility_tolerance: 1e-8,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multistarts == 0 {
            return Err(Error::InvalidParameter("multistarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.kkt_tolerance > 0.0 && self.feasibility_tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if !(self.penalty_init > 0.0 && self.penalty_growth > 1.0) {
            return Err(Error::InvalidParameter(
                "penalty_init must be > 0 and penalty_growth > 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of `minimize`: best run under the feasibility-then-objective
/// order, ties broken by start index.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveResult {
    pub point: Vec<f64>,
    pub objective_value: f64,
    pub max_constraint_violation: f64,
    pub converged: bool,
    /// Inner iterations used by the winning start.
    pub iterations: usize,
    pub starts_used: usize,
    pub diagnostic: Option<String>,
}

/// Clamp `v` into the box, coordinate-wise.
pub fn project(v: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..v.len() {
        v[i] = v[i].clamp(lower[i], upper[i]);
    }
}

/// Deterministic space-filling start points: the additive low-discrepancy
/// sequence driven by the generalized golden ratio, with a seeded random
/// shift. Extending `count` keeps earlier points as a prefix.
pub fn seeded_box_starts(lower: &[f64], upper: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = lower.len();
    // phi_d: unique positive root of x^(d+1) = x + 1.
    let mut phi = 1.5_f64;
    for _ in 0..64 {
        let p = phi.powi(dim as i32 + 1) - phi - 1.0;
        let dp = (dim as f64 + 1.0) * phi.powi(dim as i32) - 1.0;
        phi -= p / dp;
    }
    let alphas: Vec<f64> = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
    let shift: Vec<f64> = (0..dim).map(|i| u64_to_open01(mix_seed(seed, i as u64))).collect();
    (0..count)
        .map(|k| {
            (0..dim)
                .map(|i| {
                    let t = (shift[i] + (k as f64 + 1.0) * alphas[i]).fract();
                    lower[i] + t * (upper[i] - lower[i])
                })
                .collect()
        })
        .collect()
}

struct StartOutcome {
    point: Vec<f64>,
    objective: f64,
    violation: f64,
    converged: bool,
    iterations: usize,
}

/// Minimize over the box subject to all inequalities, trying every warm
/// start plus `cfg.multistarts` generated starts.
pub fn minimize(p: &NlpProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let dim = p.dim();
    if dim == 0 || p.upper.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "nlp bounds",
            expected: dim.max(1),
            got: p.upper.len(),
        });
    }
    for w in &p.warm_starts {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "warm start",
                expected: dim,
                got: w.len(),
            });
        }
    }

    let mut starts = p.warm_starts.clone();
    starts.extend(seeded_box_starts(&p.lower, &p.upper, cfg.multistarts, cfg.seed));
    for s in &mut starts {
        project(s, &p.lower, &p.upper);
    }

    let outcomes: Vec<StartOutcome> = starts.par_iter().map(|s| solve_from(p, cfg, s)).collect();

    let feas_tol = cfg.feasibility_tolerance;
    let mut best: Option<(usize, &StartOutcome)> = None;
    for (idx, out) in outcomes.iter().enumerate() {
        let better = match best {
            None => true,
            Some((_, b)) => {
                let bf = b.violation <= feas_tol;
                let of = out.violation <= feas_tol;
                if of != bf {
                    of
                } else if of {
                    score(out.objective) < score(b.objective)
                } else {
                    out.violation < b.violation
                        || (out.violation == b.violation
                            && score(out.objective) < score(b.objective))
                }
            }
        };
        if better {
            best = Some((idx, out));
        }
    }
    let (_, win) = best.expect("at least one start");
    let feasible = win.violation <= feas_tol;
    Ok(SolveResult {
        point: win.point.clone(),
        objective_value: win.objective,
        max_constraint_violation: win.violation,
        converged: feasible && win.converged,
        iterations: win.iterations,
        starts_used: starts.len(),
        diagnostic: if feasible {
            None
        } else {
            Some(format!("no start reached feasibility; best violation {:.3e}", win.violation))
        },
    })
}

/// NaN-safe ordering key: NaN sorts worst.
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Augmented-Lagrangian value at `v`, plus the raw objective and max
/// inequality violation from the same evaluations.
fn al_value(p: &NlpProblem, v: &[f64], lambda: &[f64], rho: f64) -> (f64, f64, f64) {
    let raw = (p.objective)(v);
    let mut acc = raw;
    let mut viol = 0.0_f64;
    for (i, ineq) in p.inequalities.iter().enumerate() {
        let g = (ineq.eval)(v);
        viol = viol.max(g.max(0.0));
        let t = (lambda[i] + rho * g).max(0.0);
        acc += (t * t - lambda[i] * lambda[i]) / (2.0 * rho);
    }
    (acc, raw, viol)
}

fn al_grad(p: &NlpProblem, v: &[f64], lambda: &[f64], rho: f64) -> Vec<f64> {
    let mut grad = (p.gradient)(v);
    for (i, ineq) in p.inequalities.iter().enumerate() {
        let g = (ineq.eval)(v);
        let t = (lambda[i] + rho * g).max(0.0);
        if t > 0.0 {
            let gg = (ineq.grad)(v);
            for k in 0..grad.len() {
                grad[k] += t * gg[k];
            }
        }
    }
    grad
}

fn pg_norm(v: &[f64], grad: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        let moved = (v[i] - grad[i]).clamp(lower[i], upper[i]);
        let d = v[i] - moved;
        acc += d * d;
    }
    acc.sqrt()
}

fn max_violation(p: &NlpProblem, v: &[f64]) -> f64 {
    p.inequalities.iter().map(|ineq| (ineq.eval)(v).max(0.0)).fold(0.0, f64::max)
}

fn solve_from(p: &NlpProblem, cfg: &SolverConfig, start: &[f64]) -> StartOutcome {
    const MAX_OUTER: usize = 25;
    const ARMIJO: f64 = 1e-4;
    const RHO_CAP: f64 = 1e14;

    let m = p.inequalities.len();
    let mut v = start.to_vec();
    let mut lambda = vec![0.0; m];
    let mut rho = cfg.penalty_init;
    let mut iters = 0usize;
    let mut converged = false;
    let mut prev_viol = f64::INFINITY;

    // Best feasible iterate seen so far: (point, objective, violation). With a
    // narrow constraint band the inner descent can leave the feasible set and
    // land where the constraint gradient vanishes; the incumbent lets us pull
    // back instead of losing feasibility for good.
    let mut incumbent: Option<(Vec<f64>, f64, f64)> = None;
    let snapshot =
        |incumbent: &mut Option<(Vec<f64>, f64, f64)>, pt: &[f64], obj: f64, viol: f64| {
            if m > 0
                && viol <= cfg.feasibility_tolerance
                && incumbent.as_ref().is_none_or(|(_, b, _)| score(obj) < score(*b))
            {
                *incumbent = Some((pt.to_vec(), obj, viol));
            }
        };

    for outer in 0..MAX_OUTER {
        let inner_tol = (1e-2 * 0.1_f64.powi(outer as i32)).max(cfg.kkt_tolerance);

        // Projected-gradient descent on the augmented Lagrangian.
        let (mut fv, raw0, viol0) = al_value(p, &v, &lambda, rho);
        snapshot(&mut incumbent, &v, raw0, viol0);
        let mut g = al_grad(p, &v, &lambda, rho);
        let mut step = 1.0 / (1.0 + dot(&g, &g).sqrt());
        let mut viol = viol0;
        while iters < cfg.max_iterations {
            if pg_norm(&v, &g, &p.lower, &p.upper) <= inner_tol {
                break;
            }
            let mut t = step.clamp(1e-12, 1e8);
            let mut cand;
            let mut fcand;
            let mut rawcand;
            let mut violcand;
            loop {
                cand = v.clone();
                for i in 0..cand.len() {
                    cand[i] = (v[i] - t * g[i]).clamp(p.lower[i], p.upper[i]);
                }
                (fcand, rawcand, violcand) = al_value(p, &cand, &lambda, rho);
                let pred: f64 = (0..v.len()).map(|i| g[i] * (v[i] - cand[i])).sum();
                if (fcand.is_finite() && fcand <= fv - ARMIJO * pred) || t <= 1e-16 {
                    break;
                }
                t *= 0.5;
            }
            iters += 1;
            if !fcand.is_finite() || fcand >= fv {
                break; // line search stalled
            }
            snapshot(&mut incumbent, &cand, rawcand, violcand);
            let gnew = al_grad(p, &cand, &lambda, rho);
            let mut sy = 0.0;
            let mut ss = 0.0;
            for i in 0..v.len() {
                let s = cand[i] - v[i];
                sy += s * (gnew[i] - g[i]);
                ss += s * s;
            }
            step = if sy > 1e-18 { (ss / sy).clamp(1e-12, 1e8) } else { t * 2.0 };
            v = cand;
            fv = fcand;
            viol = violcand;
            g = gnew;
        }

        let kkt = pg_norm(&v, &al_grad(p, &v, &lambda, rho), &p.lower, &p.upper);
        if viol <= cfg.feasibility_tolerance && kkt <= cfg.kkt_tolerance {
            converged = true;
            break;
        }
        if iters >= cfg.max_iterations {
            break;
        }
        for (i, ineq) in p.inequalities.iter().enumerate() {
            lambda[i] = (lambda[i] + rho * (ineq.eval)(&v)).max(0.0);
        }
        if viol > 0.25 * prev_viol && viol > cfg.feasibility_tolerance {
            rho = (rho * cfg.penalty_growth).min(RHO_CAP);
        }
        prev_viol = viol;
        if viol > cfg.feasibility_tolerance {
            if let Some((pt, _, _)) = &incumbent {
                // Re-enter from the best feasible point: the multiplier
                // estimate just raised above keeps the constraint active
                // there, so the next round polishes near the boundary
                // instead of drifting off again.
                v = pt.clone();
            }
        }
    }

    let final_viol = max_violation(p, &v);
    if final_viol > cfg.feasibility_tolerance {
        if let Some((pt, obj, viol)) = incumbent {
            return StartOutcome {
                objective: obj,
                violation: viol,
                point: pt,
                converged: false,
                iterations: iters,
            };
        }
    }
    StartOutcome {
        objective: (p.objective)(&v),
        violation: final_viol,
        point: v,
        converged,
        iterations: iters,
    }
}
