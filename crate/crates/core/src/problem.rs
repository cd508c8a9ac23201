//! Problem data model: box decision domains, product uncertainty models,
//! constraint families with max-aggregation, and built-in instances.

use std::sync::Arc;

use crate::special::normal_cdf;
use crate::{Error, Result};

/// Box of admissible decisions: `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone)]
pub struct DecisionDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DecisionDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidParameter("domain must have dimension >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "domain bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite { what: "domain bounds" });
            }
            if l > u {
                return Err(Error::InvalidParameter(format!(
                    "domain lower bound {l} exceeds upper bound {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

/// One scalar component of the uncertainty vector.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarDistribution {
    Normal {
        mean: f64,
        variance: f64,
    },
    /// `offset + scale * B` with `B ~ Beta(alpha, beta)` on [0, 1].
    ScaledBeta {
        alpha: f64,
        beta: f64,
        offset: f64,
        scale: f64,
    },
    PointMass {
        value: f64,
    },
}

impl ScalarDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarDistribution::Normal { mean, variance } => {
                if !mean.is_finite() || !variance.is_finite() {
                    return Err(Error::NonFinite { what: "normal parameters" });
                }
                if variance <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "normal variance must be > 0, got {variance}"
                    )));
                }
            }
            ScalarDistribution::ScaledBeta { alpha, beta, offset, scale } => {
                if ![alpha, beta, offset, scale].iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite { what: "beta parameters" });
                }
                if alpha <= 0.0 || beta <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "beta shape parameters must be > 0, got ({alpha}, {beta})"
                    )));
                }
                if scale == 0.0 {
                    return Err(Error::InvalidParameter("beta scale must be nonzero".into()));
                }
            }
            ScalarDistribution::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::NonFinite { what: "point mass value" });
                }
            }
        }
        Ok(())
    }
}

/// Product distribution of independent scalar components.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    components: Vec<ScalarDistribution>,
}

impl UncertaintyModel {
    pub fn new(components: Vec<ScalarDistribution>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "uncertainty model must have dimension >= 1".into(),
            ));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    pub fn standard_normal(dim: usize) -> Self {
        Self { components: vec![ScalarDistribution::Normal { mean: 0.0, variance: 1.0 }; dim] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarDistribution] {
        &self.components
    }
}

type ConstraintEvalFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type JacobianFn = dyn Fn(&[f64], &[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// Family `h_1..h_m` of constraint functions of decision `x` and uncertainty
/// `xi`; the scalar constraint used everywhere is `hbar = max_i h_i`.
#[derive(Clone)]
pub struct ConstraintFamily {
    m: usize,
    eval: Arc<ConstraintEvalFn>,
    jacobian: Option<Arc<JacobianFn>>,
    fd_step: f64,
}

impl ConstraintFamily {
    pub fn new(m: usize, eval: Arc<ConstraintEvalFn>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("constraint family must have m >= 1".into()));
        }
        Ok(Self { m, eval, jacobian: None, fd_step: 1e-6 })
    }

    /// Attach an analytic Jacobian (rows: constraints, columns: decision dims).
    pub fn with_jacobian(mut self, jacobian: Arc<JacobianFn>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    /// Relative step for the central-difference fallback Jacobian.
    pub fn with_fd_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        self.fd_step = step;
        self
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval_into(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        (self.eval)(x, xi, out);
    }

    /// Max over the family plus the smallest index attaining it.
    pub fn eval_max(&self, x: &[f64], xi: &[f64], scratch: &mut Vec<f64>) -> (f64, usize) {
        scratch.resize(self.m, 0.0);
        (self.eval)(x, xi, scratch);
        let mut best = scratch[0];
        let mut arg = 0;
        for (i, &v) in scratch.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                arg = i;
            }
        }
        (best, arg)
    }

    /// Row `row` of the Jacobian d h_row / d x, analytic when available and
    /// otherwise by central finite differences.
    pub fn jacobian_row(&self, x: &[f64], xi: &[f64], row: usize) -> Vec<f64> {
        assert!(row < self.m, "jacobian row {row} out of range (m = {})", self.m);
        if let Some(jac) = &self.jacobian {
            let full = jac(x, xi);
            return full[row].clone();
        }
        let n = x.len();
        let mut grad = vec![0.0; n];
        let mut xp = x.to_vec();
        let mut hi = vec![0.0; self.m];
        let mut lo = vec![0.0; self.m];
        for k in 0..n {
            let step = self.fd_step * (1.0 + x[k].abs());
            xp[k] = x[k] + step;
            (self.eval)(&xp, xi, &mut hi);
            xp[k] = x[k] - step;
            (self.eval)(&xp, xi, &mut lo);
            xp[k] = x[k];
            grad[k] = (hi[row] - lo[row]) / (2.0 * step);
        }
        grad
    }
}

impl std::fmt::Debug for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintFamily")
            .field("m", &self.m)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

type ObjectiveFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type OracleFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type ScenarioCostFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A chance-constrained instance: cost, constraint family, uncertainty, and
/// optionally a closed-form constraint probability and a per-scenario cost.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub domain: DecisionDomain,
    pub constraints: ConstraintFamily,
    pub uncertainty: UncertaintyModel,
    objective: Arc<ObjectiveFn>,
    objective_grad: Option<Arc<GradientFn>>,
    oracle_probability: Option<Arc<OracleFn>>,
    scenario_cost: Option<Arc<ScenarioCostFn>>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        domain: DecisionDomain,
        objective: Arc<ObjectiveFn>,
        constraints: ConstraintFamily,
        uncertainty: UncertaintyModel,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            constraints,
            uncertainty,
            objective,
            objective_grad: None,
            oracle_probability: None,
            scenario_cost: None,
        }
    }

    pub fn with_objective_grad(mut self, grad: Arc<GradientFn>) -> Self {
        self.objective_grad = Some(grad);
        self
    }

    pub fn with_oracle_probability(mut self, oracle: Arc<OracleFn>) -> Self {
        self.oracle_probability = Some(oracle);
        self
    }

    /// Realized cost of playing `x` against one scenario `xi`; the objective
    /// is (an approximation of) its expectation.
    pub fn with_scenario_cost(mut self, cost: Arc<ScenarioCostFn>) -> Self {
        self.scenario_cost = Some(cost);
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        (self.objective)(x)
    }

    /// Objective gradient: analytic when provided, otherwise central finite
    /// differences with a relative step of 1e-6.
    pub fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.objective_grad {
            return g(x);
        }
        let mut grad = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            let step = 1e-6 * (1.0 + x[k].abs());
            xp[k] = x[k] + step;
            let hi = (self.objective)(&xp);
            xp[k] = x[k] - step;
            let lo = (self.objective)(&xp);
            xp[k] = x[k];
            grad[k] = (hi - lo) / (2.0 * step);
        }
        grad
    }

    pub fn has_scenario_cost(&self) -> bool {
        self.scenario_cost.is_some()
    }

    /// Cost of one realized scenario; falls back to the deterministic
    /// objective when the instance has no scenario-dependent cost.
    pub fn scenario_cost(&self, x: &[f64], xi: &[f64]) -> f64 {
        match &self.scenario_cost {
            Some(c) => c(x, xi),
            None => (self.objective)(x),
        }
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle_probability.is_some()
    }

    pub(crate) fn oracle_probability_fn(&self) -> Option<&Arc<OracleFn>> {
        self.oracle_probability.as_ref()
    }
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("m", &self.constraints.len())
            .field("uncertainty_dim", &self.uncertainty.dim())
            .field("has_oracle", &self.has_oracle())
            .finish()
    }
}

/// `hbar(x, xi) = max_i h_i(x, xi)` with dimension and finiteness checks.
pub fn eval_hbar(problem: &ProblemInstance, x: &[f64], xi: &[f64]) -> Result<f64> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            what: "decision vector",
            expected: problem.dim(),
            got: x.len(),
        });
    }
    if xi.len() != problem.uncertainty.dim() {
        return Err(Error::DimensionMismatch {
            what: "uncertainty vector",
            expected: problem.uncertainty.dim(),
            got: xi.len(),
        });
    }
    let mut scratch = Vec::with_capacity(problem.constraints.len());
    let (hbar, _) = problem.constraints.eval_max(x, xi, &mut scratch);
    if !hbar.is_finite() {
        return Err(Error::NonFinite { what: "constraint evaluation" });
    }
    Ok(hbar)
}

/// Closed-form `P(x) = Pr{hbar(x, xi) <= 0}` when the instance provides one.
pub fn true_probability(problem: &ProblemInstance, x: &[f64]) -> Option<f64> {
    problem.oracle_probability_fn().map(|f| f(x))
}

/// Concave-cost scalar instance: `J(x) = -(x + 0.6)^2 + 2` on [-2, 2] with
/// `h(x, xi) = x - 1.4 + xi`, `xi ~ N(0, 1)`, so `P(x) = Phi(1.4 - x)`.
///
/// The objective is evaluated in the factored form `(0.8 - x)(x + 2) + 0.04`
/// (identical in exact arithmetic), under which the reference values
/// `J(-1) = 1.84` and `J(2) = -4.76` come out exact in double precision.
pub fn example1() -> ProblemInstance {
    scalar_instance(
        "example1",
        Arc::new(|x: &[f64]| (0.8 - x[0]) * (x[0] + 2.0) + 0.04),
        Arc::new(|x: &[f64]| vec![-2.0 * (x[0] + 0.6)]),
    )
}

/// Linear-cost scalar instance: `J(x) = -x`, same constraint as `example1`.
/// Its risk-cost frontier is convex, so mixing cannot improve on a single
/// point.
pub fn linear1d() -> ProblemInstance {
    scalar_instance("linear1d", Arc::new(|x: &[f64]| -x[0]), Arc::new(|_: &[f64]| vec![-1.0]))
}

/// `linear1d` with the noise collapsed to a point mass at `value`; the
/// constraint becomes the deterministic cut `x <= 1.4 - value`.
pub fn linear1d_pointmass(value: f64) -> ProblemInstance {
    let mut p = scalar_instance(
        "linear1d_pointmass",
        Arc::new(|x: &[f64]| -x[0]),
        Arc::new(|_: &[f64]| vec![-1.0]),
    );
    p.uncertainty =
        UncertaintyModel::new(vec![ScalarDistribution::PointMass { value }]).expect("valid");
    p.oracle_probability =
        Some(Arc::new(move |x: &[f64]| if x[0] - 1.4 + value <= 0.0 { 1.0 } else { 0.0 }));
    p
}

fn scalar_instance(
    name: &str,
    objective: Arc<ObjectiveFn>,
    grad: Arc<GradientFn>,
) -> ProblemInstance {
    let domain = DecisionDomain::cube(1, -2.0, 2.0).expect("valid domain");
    let constraints = ConstraintFamily::new(
        1,
        Arc::new(|x: &[f64], xi: &[f64], out: &mut [f64]| {
            out[0] = x[0] - 1.4 + xi[0];
        }),
    )
    .expect("valid family")
    .with_jacobian(Arc::new(|_x: &[f64], _xi: &[f64]| vec![vec![1.0]]));
    ProblemInstance::new(name, domain, objective, constraints, UncertaintyModel::standard_normal(1))
        .with_objective_grad(grad)
        .with_oracle_probability(Arc::new(|x: &[f64]| normal_cdf(1.4 - x[0])))
}

/// Look up a built-in instance by name. The quadrotor instance is excluded
/// because its objective averages over a caller-supplied sample set; build it
/// with `quadrotor::make_problem`.
pub fn builtin(name: &str) -> Result<ProblemInstance> {
    match name {
        "example1" => Ok(example1()),
        "linear1d" => Ok(linear1d()),
        "quadrotor" => Err(Error::InvalidParameter(
            "quadrotor requires a sample set; use quadrotor::make_problem".into(),
        )),
        other => Err(Error::InvalidParameter(format!("unknown builtin problem '{other}'"))),
    }
}

/// Names accepted by the command-line `--builtin` flag.
pub const BUILTIN_NAMES: [&str; 3] = ["example1", "linear1d", "quadrotor"];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn domain_validates_bounds() {
        assert!(DecisionDomain::new(vec![0.0], vec![1.0]).is_ok());
        assert!(DecisionDomain::new(vec![2.0], vec![1.0]).is_err());
        assert!(DecisionDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(DecisionDomain::new(vec![], vec![]).is_err());
        assert!(DecisionDomain::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn domain_clamp_projects_into_box() {
        let d = DecisionDomain::cube(3, -1.0, 2.0).unwrap();
        let mut x = vec![-5.0, 0.5, 7.0];
        d.clamp(&mut x);
        assert_eq!(x, vec![-1.0, 0.5, 2.0]);
        assert!(d.contains(&x));
    }

    #[test]
    fn uncertainty_model_rejects_bad_parameters() {
        assert!(UncertaintyModel::new(vec![ScalarDistribution::Normal {
            mean: 0.0,
            variance: 0.0
        }])
        .is_err());
        assert!(UncertaintyModel::new(vec![ScalarDistribution::ScaledBeta {
            alpha: -1.0,
            beta: 2.0,
            offset: 0.0,
            scale: 1.0
        }])
        .is_err());
        assert!(UncertaintyModel::new(vec![]).is_err());
    }

    #[test]
    fn example1_closed_form_values() {
        let p = example1();
        // The factored evaluation order makes these equalities exact.
        assert_eq!(p.objective(&[-1.0]), 1.84);
        assert_eq!(p.objective(&[2.0]), -4.76);
        assert_abs_diff_eq!(p.objective(&[-2.0]), 0.04, epsilon = 1e-12);
        let prob = true_probability(&p, &[-1.0]).unwrap();
        assert_abs_diff_eq!(prob, 0.9918024640754039, epsilon = 1e-10);
        assert_abs_diff_eq!(true_probability(&p, &[1.4]).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            true_probability(&p, &[2.0]).unwrap(),
            0.2742531177500736,
            epsilon = 1e-10
        );
    }

    #[test]
    fn eval_hbar_checks_dimensions_and_finiteness() {
        let p = example1();
        assert_abs_diff_eq!(eval_hbar(&p, &[0.0], &[0.1]).unwrap(), -1.3, epsilon = 1e-12);
        assert!(matches!(eval_hbar(&p, &[0.0, 1.0], &[0.1]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(eval_hbar(&p, &[0.0], &[0.1, 0.2]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(eval_hbar(&p, &[0.0], &[f64::INFINITY]), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn constraint_family_argmax_breaks_ties_low() {
        let fam = ConstraintFamily::new(
            3,
            Arc::new(|_x: &[f64], _xi: &[f64], out: &mut [f64]| {
                out[0] = 1.0;
                out[1] = 1.0;
                out[2] = 0.5;
            }),
        )
        .unwrap();
        let mut scratch = Vec::new();
        let (v, i) = fam.eval_max(&[0.0], &[0.0], &mut scratch);
        assert_eq!(v, 1.0);
        assert_eq!(i, 0);
    }

    #[test]
    fn fd_jacobian_matches_analytic_on_smooth_family() {
        let smooth = ConstraintFamily::new(
            2,
            Arc::new(|x: &[f64], xi: &[f64], out: &mut [f64]| {
                out[0] = x[0] * x[0] + xi[0];
                out[1] = x[0] * x[1];
            }),
        )
        .unwrap();
        let x = [1.3, -0.7];
        let xi = [0.4];
        let r0 = smooth.jacobian_row(&x, &xi, 0);
        let r1 = smooth.jacobian_row(&x, &xi, 1);
        assert_abs_diff_eq!(r0[0], 2.6, epsilon = 1e-6);
        assert_abs_diff_eq!(r0[1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r1[0], -0.7, epsilon = 1e-6);
        assert_abs_diff_eq!(r1[1], 1.3, epsilon = 1e-6);
    }

    #[test]
    fn objective_grad_falls_back_to_finite_differences() {
        let p = ProblemInstance::new(
            "quad",
            DecisionDomain::cube(2, -5.0, 5.0).unwrap(),
            Arc::new(|x: &[f64]| x[0] * x[0] + 3.0 * x[1]),
            ConstraintFamily::new(
                1,
                Arc::new(|_x: &[f64], _xi: &[f64], out: &mut [f64]| out[0] = -1.0),
            )
            .unwrap(),
            UncertaintyModel::standard_normal(1),
        );
        let g = p.objective_grad(&[2.0, 0.0]);
        assert_abs_diff_eq!(g[0], 4.0, epsilon = 1e-5);
        assert_abs_diff_eq!(g[1], 3.0, epsilon = 1e-5);
    }

    #[test]
    fn pointmass_variant_has_indicator_oracle() {
        let p = linear1d_pointmass(0.0);
        assert_eq!(true_probability(&p, &[1.39]).unwrap(), 1.0);
        assert_eq!(true_probability(&p, &[1.41]).unwrap(), 0.0);
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin("example1").is_ok());
        assert!(builtin("linear1d").is_ok());
        assert!(builtin("quadrotor").is_err());
        assert!(builtin("nope").is_err());
    }
}
