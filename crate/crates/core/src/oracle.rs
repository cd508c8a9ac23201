//! Brute-force grid reference solvers for one-dimensional instances with a
//! closed-form constraint probability. These are deliberately independent of
//! the iterative solver: exhaustive enumeration over uniform grids, used as
//! ground truth in studies and tests.

use rayon::prelude::*;

use crate::problem::{true_probability, ProblemInstance};
use crate::{Error, Result};

/// Best mixture of two grid points found by exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointGridSolution {
    pub mu1: f64,
    pub x1: f64,
    pub x2: f64,
    /// Expected objective of the mixture.
    pub value: f64,
}

fn grid_tables(problem: &ProblemInstance, step: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if problem.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs a 1-d decision, got dim {}",
            problem.dim()
        )));
    }
    if !problem.has_oracle() {
        return Err(Error::Unsupported(
            "grid oracle needs a closed-form constraint probability".into(),
        ));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("grid step must be > 0".into()));
    }
    let lo = problem.domain.lower()[0];
    let hi = problem.domain.upper()[0];
    let n = ((hi - lo) / step).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let js: Vec<f64> = xs.iter().map(|&x| problem.objective(&[x])).collect();
    let ps: Vec<f64> = xs
        .iter()
        .map(|&x| true_probability(problem, &[x]).expect("oracle checked above"))
        .collect();
    Ok((xs, js, ps))
}

/// Minimize `J(x)` over the grid subject to `P(x) >= 1 - alpha`, using the
/// closed-form probability. Ties go to the smallest x. Returns `(x, J(x))`.
pub fn deterministic_grid_1d(
    problem: &ProblemInstance,
    alpha: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let (xs, js, ps) = grid_tables(problem, step)?;
    let need = 1.0 - alpha;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..xs.len() {
        if ps[i] >= need && best.map_or(true, |(_, bj)| js[i] < bj) {
            best = Some((xs[i], js[i]));
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no grid point satisfies P(x) >= {need}")))
}

/// Exhaustive search over `(x1, x2, mu1)` for the best two-point mixture:
/// minimize `mu1 J(x1) + (1-mu1) J(x2)` subject to
/// `mu1 P(x1) + (1-mu1) P(x2) >= 1 - alpha`. The x grid uses `step_x`, the
/// weight grid `step_mu`. Rows of the x1 loop run in parallel; the reduction
/// over rows is ordered, so the result is deterministic.
pub fn two_point_grid_1d(
    problem: &ProblemInstance,
    alpha: f64,
    step_x: f64,
    step_mu: f64,
) -> Result<TwoPointGridSolution> {
    let (xs, js, ps) = grid_tables(problem, step_x)?;
    if !(step_mu > 0.0 && step_mu <= 1.0) {
        return Err(Error::InvalidParameter("mu step must be in (0, 1]".into()));
    }
    let n_mu = (1.0 / step_mu).round() as usize;
    let mus: Vec<f64> = (0..=n_mu).map(|k| (k as f64 * step_mu).min(1.0)).collect();
    let need = 1.0 - alpha;

    let per_row: Vec<Option<TwoPointGridSolution>> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut best: Option<TwoPointGridSolution> = None;
            for j in 0..xs.len() {
                for &mu in &mus {
                    let pv = mu * ps[i] + (1.0 - mu) * ps[j];
                    if pv < need {
                        continue;
                    }
                    let value = mu * js[i] + (1.0 - mu) * js[j];
                    if best.as_ref().map_or(true, |b| value < b.value) {
                        best = Some(TwoPointGridSolution { mu1: mu, x1: xs[i], x2: xs[j], value });
                    }
                }
            }
            best
        })
        .collect();

    let mut best: Option<TwoPointGridSolution> = None;
    for cand in per_row.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no mixture satisfies P >= {need}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{example1, linear1d};
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_oracle_matches_closed_forms() {
        // Concave cost: the feasible box corner x=-2 wins with J=0.04.
        let (x, j) = deterministic_grid_1d(&example1(), 0.25, 1e-3).unwrap();
        assert_abs_diff_eq!(x, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(j, 0.04, epsilon = 1e-9);

        // Linear cost: active quantile x* = 1.4 - Phi^{-1}(0.75).
        let (x, j) = deterministic_grid_1d(&linear1d(), 0.25, 1e-3).unwrap();
        assert_abs_diff_eq!(x, 0.7255102498039183, epsilon = 6e-4);
        assert_abs_diff_eq!(j, -x, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_threshold_is_reported() {
        // alpha = 0 demands P(x) = 1 exactly, unattainable under Gaussian noise.
        let err = deterministic_grid_1d(&example1(), 0.0, 1e-2).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn two_point_oracle_beats_deterministic_on_concave_cost() {
        let sol = two_point_grid_1d(&example1(), 0.25, 0.01, 0.001).unwrap();
        // Mixes the safe corner -2 with the aggressive corner +2.
        assert_abs_diff_eq!(sol.value, -1.6120075780525869, epsilon = 5e-3);
        let (lo, hi) = (sol.x1.min(sol.x2), sol.x1.max(sol.x2));
        assert_abs_diff_eq!(lo, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-9);
        let mu2 = if sol.x1 > sol.x2 { sol.mu1 } else { 1.0 - sol.mu1 };
        assert_abs_diff_eq!(mu2, 0.34416824542762226, epsilon = 2e-3);
    }

    #[test]
    fn two_point_oracle_cannot_beat_deterministic_on_linear_cost() {
        // J*(alpha_tilde) is convex here, so chords never undercut the point.
        let det = deterministic_grid_1d(&linear1d(), 0.25, 0.01).unwrap().1;
        let sol = two_point_grid_1d(&linear1d(), 0.25, 0.01, 0.01).unwrap();
        assert!(sol.value <= det + 1e-12);
        assert!(sol.value >= det - 0.02);
    }

    #[test]
    fn rejects_multidimensional_problems() {
        let q = crate::problem::example1();
        let mut bad = q.clone();
        bad.name = "ok".into();
        assert!(deterministic_grid_1d(&bad, 0.25, 0.1).is_ok());
        // No oracle: strip by rebuilding without one.
        let stripped = ProblemInstance::new(
            "no-oracle",
            bad.domain.clone(),
            std::sync::Arc::new(|x: &[f64]| x[0]),
            bad.constraints.clone(),
            bad.uncertainty.clone(),
        );
        assert!(matches!(deterministic_grid_1d(&stripped, 0.25, 0.1), Err(Error::Unsupported(_))));
    }
}
