//! Planar quadrotor trajectory planning under uncertainty: double-integrator
//! dynamics with mass and quadratic-drag coefficients drawn from scaled Beta
//! distributions plus per-step Gaussian disturbances. The decision is the
//! open-loop input sequence; the chance constraint asks the trajectory to
//! avoid all obstacles and end inside the goal set.

use std::sync::Arc;

use crate::problem::{
    ConstraintFamily, DecisionDomain, ProblemInstance, ScalarDistribution, UncertaintyModel,
};
use crate::sampling::SampleSet;
use crate::{Error, Result};

/// States are clamped here during rollout: the explicit-Euler drag term is
/// unstable for speeds beyond ~1/(phi dt) and can oscillate toward overflow;
/// clamping keeps intermediate solver iterates finite so descent can retreat.
const STATE_CLAMP: f64 = 1e6;

/// Geometry, dynamics, and uncertainty of the planning instance. The state
/// is (px, vx, py, vy); inputs are per-axis accelerations.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadrotorParams {
    pub dt: f64,
    pub horizon: usize,
    pub mass_dist: ScalarDistribution,
    pub drag_dist: ScalarDistribution,
    /// Disturbance variances per state component, applied every step.
    pub noise_cov_diag: [f64; 4],
    pub start: [f64; 4],
    pub goal_center: [f64; 2],
    pub goal_radius: f64,
    /// Convex polygons, vertices counterclockwise.
    pub obstacles: Vec<Vec<[f64; 2]>>,
    /// Lower and upper bound applied to every input coordinate.
    pub input_box: [f64; 2],
    /// Terminal speed allowance per axis; the exact zero-velocity goal has
    /// probability zero under continuous disturbances.
    pub velocity_tolerance: f64,
}

/// Axis-aligned rectangle as a counterclockwise vertex list.
pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            horizon: 10,
            mass_dist: ScalarDistribution::ScaledBeta {
                alpha: 2.0,
                beta: 2.0,
                offset: 0.75,
                scale: 0.5,
            },
            drag_dist: ScalarDistribution::ScaledBeta {
                alpha: 2.0,
                beta: 5.0,
                offset: 0.4,
                scale: 0.2,
            },
            noise_cov_diag: [0.01, 0.75, 0.01, 0.75],
            start: [-0.5, 0.0, -0.5, 0.0],
            goal_center: [10.0, 10.0],
            goal_radius: 2.0,
            obstacles: vec![rect(3.0, 2.0, 5.0, 6.0), rect(6.0, 6.5, 8.5, 10.0)],
            input_box: [-20.0, 20.0],
            velocity_tolerance: 1.0,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if self.horizon < 2 {
            return Err(Error::InvalidParameter("horizon must be >= 2".into()));
        }
        if !(self.goal_radius > 0.0) {
            return Err(Error::InvalidParameter("goal radius must be positive".into()));
        }
        if !(self.velocity_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("velocity tolerance must be >= 0".into()));
        }
        if !(self.input_box[0] < self.input_box[1]) {
            return Err(Error::InvalidParameter("input box must have positive width".into()));
        }
        self.mass_dist.validate()?;
        self.drag_dist.validate()?;
        if let ScalarDistribution::ScaledBeta { offset, scale, .. } = self.mass_dist {
            if offset <= 0.0 || offset + scale <= 0.0 {
                return Err(Error::InvalidParameter("mass support must be positive".into()));
            }
        }
        for (i, poly) in self.obstacles.iter().enumerate() {
            validate_polygon(poly)
                .map_err(|e| Error::InvalidParameter(format!("obstacle {i}: {e}")))?;
        }
        Ok(())
    }

    /// Scenario vector layout: (m, phi, w_1 .. w_horizon) with each w_t a
    /// 4-vector of state disturbances.
    pub fn uncertainty_model(&self) -> Result<UncertaintyModel> {
        let mut comps = vec![self.mass_dist.clone(), self.drag_dist.clone()];
        for _ in 0..self.horizon {
            for &var in &self.noise_cov_diag {
                comps.push(ScalarDistribution::Normal { mean: 0.0, variance: var });
            }
        }
        UncertaintyModel::new(comps)
    }

    pub fn input_dim(&self) -> usize {
        2 * self.horizon
    }

    pub fn scenario_dim(&self) -> usize {
        2 + 4 * self.horizon
    }
}

fn validate_polygon(poly: &[[f64; 2]]) -> std::result::Result<(), String> {
    if poly.len() < 3 {
        return Err("needs at least 3 vertices".into());
    }
    let n = poly.len();
    let mut area2 = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross <= 1e-12 {
            return Err("vertices must be counterclockwise and strictly convex".into());
        }
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    if area2 <= 1e-12 {
        return Err("degenerate polygon".into());
    }
    Ok(())
}

/// Simulate the open-loop plan `u` (interleaved per-step x/y inputs) against
/// one scenario; returns states s_1 .. s_horizon.
pub fn rollout(params: &QuadrotorParams, u: &[f64], xi: &[f64]) -> Result<Vec<[f64; 4]>> {
    if u.len() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input sequence",
            expected: params.input_dim(),
            got: u.len(),
        });
    }
    if xi.len() != params.scenario_dim() {
        return Err(Error::DimensionMismatch {
            what: "scenario vector",
            expected: params.scenario_dim(),
            got: xi.len(),
        });
    }
    let m = xi[0];
    let phi = xi[1];
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let dt = params.dt;
    let half = 0.5 * dt * dt;
    let mut s = params.start;
    let mut out = Vec::with_capacity(params.horizon);
    for t in 0..params.horizon {
        let (ux, uy) = (u[2 * t], u[2 * t + 1]);
        if !(ux.is_finite() && uy.is_finite()) {
            return Err(Error::NonFinite { what: "control input" });
        }
        let w = &xi[2 + 4 * t..2 + 4 * t + 4];
        let dragx = phi * s[1].abs() * s[1];
        let dragy = phi * s[3].abs() * s[3];
        let next = [
            s[0] + dt * s[1] + half * ux / m - half * dragx + w[0],
            s[1] + dt * ux / m - dt * dragx + w[1],
            s[2] + dt * s[3] + half * uy / m - half * dragy + w[2],
            s[3] + dt * uy / m - dt * dragy + w[3],
        ];
        for (k, v) in next.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::NonFinite { what: "rollout state" });
            }
            s[k] = v.clamp(-STATE_CLAMP, STATE_CLAMP);
        }
        out.push(s);
    }
    Ok(out)
}

/// Signed margin of a point against one convex polygon: penetration depth
/// (positive) inside, minus the boundary distance outside, zero on the edge.
pub fn polygon_margin(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut max_edge = f64::NEG_INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = (ex * ex + ey * ey).sqrt();
        // Outward normal of a counterclockwise edge points right of it.
        let (nx, ny) = (ey / len, -ex / len);
        max_edge = max_edge.max((p[0] - a[0]) * nx + (p[1] - a[1]) * ny);
    }
    if max_edge <= 0.0 {
        return -max_edge; // inside: depth to the nearest edge line
    }
    let mut dist = f64::INFINITY;
    for i in 0..n {
        dist = dist.min(segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    -dist
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
    let (apx, apy) = (p[0] - a[0], p[1] - a[1]);
    let t = ((apx * abx + apy * aby) / (abx * abx + aby * aby)).clamp(0.0, 1.0);
    let (dx, dy) = (apx - t * abx, apy - t * aby);
    (dx * dx + dy * dy).sqrt()
}

/// Constraint margin of a rolled-out trajectory: positive when any interior
/// state sits inside an obstacle or the terminal state misses the goal ball
/// or exceeds the per-axis velocity allowance; at most zero exactly when the
/// joint success event holds.
pub fn margin(params: &QuadrotorParams, traj: &[[f64; 4]]) -> f64 {
    assert_eq!(traj.len(), params.horizon, "trajectory length must match the horizon");
    let mut worst = f64::NEG_INFINITY;
    for s in traj.iter().take(params.horizon - 1) {
        let p = [s[0], s[2]];
        for poly in &params.obstacles {
            worst = worst.max(polygon_margin(p, poly));
        }
    }
    let last = traj[params.horizon - 1];
    let (gx, gy) = (last[0] - params.goal_center[0], last[2] - params.goal_center[1]);
    let goal = (gx * gx + gy * gy).sqrt() - params.goal_radius;
    let vel = last[1].abs().max(last[3].abs()) - params.velocity_tolerance;
    worst.max(goal.max(vel))
}

/// Which term of `margin` is active, with its gradient in that state.
struct ActiveTerm {
    /// Index into the trajectory (0-based, so state s_{index+1}).
    state: usize,
    /// d(term)/d(state), all four components.
    dstate: [f64; 4],
}

/// Gradient of `polygon_margin` in the point, matching its tie-breaking:
/// inside uses the first deepest edge normal, outside the first closest
/// segment. Zero on the boundary, where the margin is not differentiable.
fn polygon_margin_grad(p: [f64; 2], poly: &[[f64; 2]]) -> [f64; 2] {
    let n = poly.len();
    let mut max_edge = f64::NEG_INFINITY;
    let mut normal = [0.0, 0.0];
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = (ex * ex + ey * ey).sqrt();
        let (nx, ny) = (ey / len, -ex / len);
        let off = (p[0] - a[0]) * nx + (p[1] - a[1]) * ny;
        if off > max_edge {
            max_edge = off;
            normal = [nx, ny];
        }
    }
    if max_edge <= 0.0 {
        // margin = -max_edge, falling one-sided toward deeper interior.
        return [-normal[0], -normal[1]];
    }
    let mut dist = f64::INFINITY;
    let mut diff = [0.0, 0.0];
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
        let (apx, apy) = (p[0] - a[0], p[1] - a[1]);
        let t = ((apx * abx + apy * aby) / (abx * abx + aby * aby)).clamp(0.0, 1.0);
        let (dx, dy) = (apx - t * abx, apy - t * aby);
        let d = (dx * dx + dy * dy).sqrt();
        if d < dist {
            dist = d;
            diff = [dx, dy];
        }
    }
    if dist == 0.0 {
        return [0.0, 0.0];
    }
    // margin = -dist; the distance gradient is the unit offset from the
    // closest boundary point, for both edge and vertex projections.
    [-diff[0] / dist, -diff[1] / dist]
}

/// Locate the active term of `margin` and its state gradient, mirroring the
/// max chain in `margin` (earliest term wins ties).
fn active_margin_term(params: &QuadrotorParams, traj: &[[f64; 4]]) -> ActiveTerm {
    let mut best = f64::NEG_INFINITY;
    let mut active = ActiveTerm { state: 0, dstate: [0.0; 4] };
    for (t, s) in traj.iter().take(params.horizon - 1).enumerate() {
        let p = [s[0], s[2]];
        for poly in &params.obstacles {
            let v = polygon_margin(p, poly);
            if v > best {
                best = v;
                let g = polygon_margin_grad(p, poly);
                active = ActiveTerm { state: t, dstate: [g[0], 0.0, g[1], 0.0] };
            }
        }
    }
    let t_last = params.horizon - 1;
    let last = traj[t_last];
    let (gx, gy) = (last[0] - params.goal_center[0], last[2] - params.goal_center[1]);
    let dist = (gx * gx + gy * gy).sqrt();
    let goal = dist - params.goal_radius;
    if goal > best {
        best = goal;
        let d = if dist > 0.0 { [gx / dist, 0.0, gy / dist, 0.0] } else { [0.0; 4] };
        active = ActiveTerm { state: t_last, dstate: d };
    }
    let vel = last[1].abs().max(last[3].abs()) - params.velocity_tolerance;
    if vel > best {
        let d = if last[1].abs() >= last[3].abs() {
            [0.0, last[1].signum(), 0.0, 0.0]
        } else {
            [0.0, 0.0, 0.0, last[3].signum()]
        };
        active = ActiveTerm { state: t_last, dstate: d };
    }
    active
}

/// One reverse step of the explicit-Euler dynamics: turns d(out)/d(s_{t+1})
/// into the input-gradient contribution at step `t` and d(out)/d(s_t).
/// `s_prev` is the pre-step state (where the drag derivative is evaluated)
/// and `clamped` marks post-step components pinned at the state clamp, whose
/// derivatives vanish.
fn adjoint_step(
    params: &QuadrotorParams,
    s_prev: &[f64; 4],
    m: f64,
    phi: f64,
    clamped: [bool; 4],
    lambda: &mut [f64; 4],
    grad_u: &mut [f64],
) {
    for (l, &c) in lambda.iter_mut().zip(&clamped) {
        if c {
            *l = 0.0;
        }
    }
    let dt = params.dt;
    let half = 0.5 * dt * dt;
    grad_u[0] += lambda[0] * half / m + lambda[1] * dt / m;
    grad_u[1] += lambda[2] * half / m + lambda[3] * dt / m;
    let dragx = 2.0 * phi * s_prev[1].abs();
    let dragy = 2.0 * phi * s_prev[3].abs();
    *lambda = [
        lambda[0],
        (dt - half * dragx) * lambda[0] + (1.0 - dt * dragx) * lambda[1],
        lambda[2],
        (dt - half * dragy) * lambda[2] + (1.0 - dt * dragy) * lambda[3],
    ];
}

fn clamp_flags(s: &[f64; 4]) -> [bool; 4] {
    [
        s[0].abs() >= STATE_CLAMP,
        s[1].abs() >= STATE_CLAMP,
        s[2].abs() >= STATE_CLAMP,
        s[3].abs() >= STATE_CLAMP,
    ]
}

/// Gradient of `margin(rollout(u, xi))` in `u`: a reverse sweep through the
/// Euler steps from the active margin term. Matches central differences away
/// from term ties and the smoothing-band kinks.
pub fn margin_grad(params: &QuadrotorParams, u: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let traj = rollout(params, u, xi)?;
    let active = active_margin_term(params, &traj);
    let (m, phi) = (xi[0], xi[1]);
    let mut grad = vec![0.0; params.input_dim()];
    let mut lambda = active.dstate;
    for t in (0..=active.state).rev() {
        let s_prev = if t == 0 { &params.start } else { &traj[t - 1] };
        adjoint_step(
            params,
            s_prev,
            m,
            phi,
            clamp_flags(&traj[t]),
            &mut lambda,
            &mut grad[2 * t..2 * t + 2],
        );
    }
    Ok(grad)
}

/// Accumulate `scale` times the gradient of `smoothness_cost(rollout(u, xi))`
/// into `out` by a full adjoint sweep (every state carries a local term).
fn smoothness_grad_accumulate(
    params: &QuadrotorParams,
    u: &[f64],
    xi: &[f64],
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    let traj = rollout(params, u, xi)?;
    let h = params.horizon;
    let (m, phi) = (xi[0], xi[1]);
    let w = 2.0 * scale / h as f64;
    let mut lambda = [0.0; 4];
    for t in (0..h).rev() {
        let prev = if t == 0 { &params.start } else { &traj[t - 1] };
        // d/dp_t of w/2 (|p_t - p_{t-1}|^2 + |p_{t+1} - p_t|^2).
        lambda[0] += w * (traj[t][0] - prev[0]);
        lambda[2] += w * (traj[t][2] - prev[2]);
        if t + 1 < h {
            lambda[0] -= w * (traj[t + 1][0] - traj[t][0]);
            lambda[2] -= w * (traj[t + 1][2] - traj[t][2]);
        }
        adjoint_step(
            params,
            prev,
            m,
            phi,
            clamp_flags(&traj[t]),
            &mut lambda,
            &mut out[2 * t..2 * t + 2],
        );
    }
    Ok(())
}

/// Mean squared per-step displacement of the position trace, from the start
/// state through s_horizon.
pub fn smoothness_cost(params: &QuadrotorParams, traj: &[[f64; 4]]) -> f64 {
    let mut acc = 0.0;
    let mut prev = [params.start[0], params.start[2]];
    for s in traj {
        let (dx, dy) = (s[0] - prev[0], s[2] - prev[1]);
        acc += dx * dx + dy * dy;
        prev = [s[0], s[2]];
    }
    acc / params.horizon as f64
}

/// Quadratic input penalty `0.1/horizon * sum of squared inputs`.
pub fn control_cost(params: &QuadrotorParams, u: &[f64]) -> f64 {
    0.1 / params.horizon as f64 * u.iter().map(|v| v * v).sum::<f64>()
}

/// Bundle the instance: decision = input sequence over the box, expected
/// cost = smoothness averaged over `objective_samples` (the same scenarios
/// the solver's constraint sees, so objective and constraint share random
/// numbers) plus the exact input penalty.
pub fn make_problem(
    params: &QuadrotorParams,
    objective_samples: &SampleSet,
) -> Result<ProblemInstance> {
    params.validate()?;
    if objective_samples.dim() != params.scenario_dim() {
        return Err(Error::DimensionMismatch {
            what: "objective sample set",
            expected: params.scenario_dim(),
            got: objective_samples.dim(),
        });
    }
    let domain = DecisionDomain::new(
        vec![params.input_box[0]; params.input_dim()],
        vec![params.input_box[1]; params.input_dim()],
    )?;

    let pc = params.clone();
    let pj = params.clone();
    let constraints = ConstraintFamily::new(
        1,
        Arc::new(move |u: &[f64], xi: &[f64], out: &mut [f64]| {
            out[0] = match rollout(&pc, u, xi) {
                Ok(traj) => margin(&pc, &traj),
                Err(_) => f64::INFINITY,
            };
        }),
    )?
    .with_jacobian(Arc::new(move |u: &[f64], xi: &[f64]| {
        vec![margin_grad(&pj, u, xi).unwrap_or_else(|_| vec![0.0; pj.input_dim()])]
    }));

    let po = params.clone();
    let samples: Vec<Vec<f64>> = objective_samples.iter().map(|s| s.to_vec()).collect();
    let sg = samples.clone();
    let pg = params.clone();
    let objective = Arc::new(move |u: &[f64]| {
        let mut acc = 0.0;
        for xi in &samples {
            match rollout(&po, u, xi) {
                Ok(traj) => acc += smoothness_cost(&po, &traj),
                Err(_) => return f64::INFINITY,
            }
        }
        acc / samples.len() as f64 + control_cost(&po, u)
    });
    let objective_grad = Arc::new(move |u: &[f64]| {
        let mut grad = vec![0.0; pg.input_dim()];
        let scale = 1.0 / sg.len() as f64;
        for xi in &sg {
            if smoothness_grad_accumulate(&pg, u, xi, scale, &mut grad).is_err() {
                return vec![0.0; pg.input_dim()];
            }
        }
        let cw = 0.2 / pg.horizon as f64;
        for (g, ui) in grad.iter_mut().zip(u) {
            *g += cw * ui;
        }
        grad
    });

    let ps = params.clone();
    let scenario_cost = Arc::new(move |u: &[f64], xi: &[f64]| match rollout(&ps, u, xi) {
        Ok(traj) => smoothness_cost(&ps, &traj) + control_cost(&ps, u),
        Err(_) => f64::INFINITY,
    });

    Ok(ProblemInstance::new(
        "quadrotor",
        domain,
        objective,
        constraints,
        params.uncertainty_model()?,
    )
    .with_objective_grad(objective_grad)
    .with_scenario_cost(scenario_cost))
}
