//! Smoothed indicator and sample-average probability estimates.
//!
//! The exact constraint probability `P(x) = Pr{hbar(x, xi) <= 0}` is
//! approximated on a sample set by replacing the indicator `1{y <= 0}` with
//! the C^1 ramp `step(y)`: 1 below `-epsilon`, 0 above `epsilon`, and the
//! cubic `1/2 - (3/4)u + (1/4)u^3` (u = y/epsilon) in between. A margin
//! `gamma >= 0` shifts the argument to make the estimate conservative.

use crate::problem::ProblemInstance;
use crate::sampling::SampleSet;
use crate::special::pairwise_sum;
use crate::{Error, Result};

/// Smoothing width `epsilon > 0` and conservativeness margin `gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothingParams {
    pub epsilon: f64,
    pub gamma: f64,
}

impl SmoothingParams {
    pub fn new(epsilon: f64, gamma: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing epsilon must be > 0, got {epsilon}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(Self { epsilon, gamma })
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { epsilon: 0.01, gamma: 0.01 }
    }
}

/// Smoothed step: monotone non-increasing, 1 for `y <= -epsilon`, 0 for
/// `y >= epsilon`, value 1/2 at 0.
pub fn smooth_step(y: f64, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    if y <= -epsilon {
        1.0
    } else if y >= epsilon {
        0.0
    } else {
        let u = y / epsilon;
        0.5 - 0.75 * u + 0.25 * u * u * u
    }
}

/// Derivative of `smooth_step` in `y`: `-(3/(4 epsilon)) (1 - u^2)` inside
/// the band, 0 outside; continuous at the band edges.
pub fn smooth_step_deriv(y: f64, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    if y <= -epsilon || y >= epsilon {
        0.0
    } else {
        let u = y / epsilon;
        -0.75 / epsilon * (1.0 - u * u)
    }
}

/// Empirical probability: fraction of samples with `hbar(x, xi) <= 0`.
pub fn empirical_prob(problem: &ProblemInstance, x: &[f64], samples: &SampleSet) -> Result<f64> {
    check_dims(problem, x, samples)?;
    let mut scratch = Vec::new();
    let mut count = 0usize;
    for xi in samples.iter() {
        let (hbar, _) = problem.constraints.eval_max(x, xi, &mut scratch);
        if hbar <= 0.0 {
            count += 1;
        }
    }
    Ok(count as f64 / samples.len() as f64)
}

/// Smoothed sample probability `(1/N) sum_j step(hbar(x, xi_j) + gamma)`.
///
/// The per-sample terms are reduced by fixed-order pairwise summation, so the
/// value is reproducible regardless of thread count.
pub fn smooth_prob(
    problem: &ProblemInstance,
    x: &[f64],
    samples: &SampleSet,
    sp: &SmoothingParams,
) -> Result<f64> {
    check_dims(problem, x, samples)?;
    let mut scratch = Vec::new();
    let mut terms = Vec::with_capacity(samples.len());
    for xi in samples.iter() {
        let (hbar, _) = problem.constraints.eval_max(x, xi, &mut scratch);
        terms.push(smooth_step(hbar + sp.gamma, sp.epsilon));
    }
    Ok(pairwise_sum(&terms) / samples.len() as f64)
}

/// Gradient of `smooth_prob` in `x`.
///
/// Only samples inside the smoothing band contribute; each contributes the
/// step derivative times the gradient of its active (max, lowest index on
/// ties) constraint component.
pub fn smooth_prob_grad(
    problem: &ProblemInstance,
    x: &[f64],
    samples: &SampleSet,
    sp: &SmoothingParams,
) -> Result<Vec<f64>> {
    check_dims(problem, x, samples)?;
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut scratch = Vec::new();
    for xi in samples.iter() {
        let (hbar, active) = problem.constraints.eval_max(x, xi, &mut scratch);
        let w = smooth_step_deriv(hbar + sp.gamma, sp.epsilon);
        if w == 0.0 {
            continue;
        }
        let row = problem.constraints.jacobian_row(x, xi, active);
        for k in 0..n {
            grad[k] += w * row[k];
        }
    }
    let inv = 1.0 / samples.len() as f64;
    for g in &mut grad {
        *g *= inv;
    }
    Ok(grad)
}

fn check_dims(problem: &ProblemInstance, x: &[f64], samples: &SampleSet) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            what: "decision vector",
            expected: problem.dim(),
            got: x.len(),
        });
    }
    if samples.dim() != problem.uncertainty.dim() {
        return Err(Error::DimensionMismatch {
            what: "sample dimension",
            expected: problem.uncertainty.dim(),
            got: samples.dim(),
        });
    }
    Ok(())
}
