//! Two-point minimization of the value functional: the fundamental solution
//!
//! `h(t1, t2, x, y, u0) = inf { u_xi(t2) - u0 : xi(t1) = x, xi(t2) = y }`
//!
//! over curves joining `x` to `y`, where `u_xi` solves the value dynamics of
//! [`crate::caratheodory`] with `u_xi(t1) = u0`. Curves are piecewise linear
//! with pinned endpoints; the interior nodes are optimized in lifted
//! coordinates with BFGS, the gradient coming from the exact discrete adjoint
//! of the Runge-Kutta integration, so the optimizer sees the same function it
//! minimizes down to round-off.
//!
//! Multi-start covers homotopy classes: one straight start per winding within
//! the configured range plus seeded random perturbations. Ties are broken by
//! curve geometry so results are reproducible run to run.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::caratheodory::{linearized_model, solve_value_ode, Curve, OdeOptions, ValueTrajectory};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::lagrangian::{Coord, LagrangianModel};
use crate::optimize::{minimize, BfgsOptions, Objective};

/// How a start candidate for the multi-start sweep was generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartKind {
    /// Straight segment lifted into the given winding class.
    Straight([i32; 2]),
    /// Seeded random perturbation of the minimal straight start (0-based index).
    Random(usize),
    /// Minimizer carried over from a previous related solve.
    Warm,
}

impl std::fmt::Display for StartKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            StartKind::Straight(w) => write!(f, "straight[{},{}]", w[0], w[1]),
            StartKind::Random(i) => write!(f, "random{i}"),
            StartKind::Warm => write!(f, "warm"),
        }
    }
}

/// Outcome of one optimizer start. `value` is NaN when the start failed before
/// producing a candidate.
#[derive(Clone, Copy, Debug)]
pub struct StartOutcome {
    pub kind: StartKind,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// True for the start whose curve the result reports.
    pub selected: bool,
}

/// Outcome of one two-point solve.
#[derive(Clone, Debug)]
pub struct HerglotzResult {
    /// `u(t2) - u0` along the best curve found.
    pub value: f64,
    pub minimizer: Curve,
    pub trajectory: ValueTrajectory,
    /// Sup-norm defect of the discrete Euler-Lagrange equations
    /// `d/ds L_v = L_x + L_u L_v` at interior nodes; a consistency diagnostic,
    /// O(dt^2) even at an exact discrete minimizer.
    pub stationarity_residual: f64,
    /// `d u(t2) / d u0` along the minimizer (the discrete `e^(int L_u)`).
    pub end_value_sensitivity: f64,
    pub starts_tried: usize,
    /// Whether the reported start reached the gradient tolerance.
    pub converged: bool,
    pub grad_norm: f64,
    /// Per-start diagnostics in the order the starts were tried.
    pub starts: Vec<StartOutcome>,
}

/// Deterministically combine a base seed with float stamps; used to give every
/// solve its own reproducible random stream independent of call order.
pub(crate) fn mix_seed(base: u64, stamps: &[f64]) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &v in stamps {
        let mut z = h ^ v.to_bits();
        z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z ^= z >> 27;
        z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        h = h.rotate_left(17) ^ z;
    }
    h
}

struct CurveObjective<'a> {
    model: &'a LagrangianModel,
    t1: f64,
    t2: f64,
    /// Fixed lifted endpoints.
    z0: Coord,
    zn: Coord,
    segments: usize,
    dim: usize,
    opts: OdeOptions,
    u0: f64,
}

impl CurveObjective<'_> {
    fn assemble(&self, z: &[f64]) -> Result<Curve> {
        let mut lifted = Vec::with_capacity(self.segments + 1);
        lifted.push(self.z0);
        for i in 0..self.segments - 1 {
            let mut node = [0.0; 2];
            for a in 0..self.dim {
                node[a] = z[i * self.dim + a];
            }
            lifted.push(node);
        }
        lifted.push(self.zn);
        Curve::from_lifted(*self.model.domain(), self.t1, self.t2, &lifted)
    }

    fn pack(&self, lifted: &[Coord]) -> Vec<f64> {
        let mut z = Vec::with_capacity((self.segments - 1) * self.dim);
        for node in &lifted[1..self.segments] {
            for a in 0..self.dim {
                z.push(node[a]);
            }
        }
        z
    }
}

impl Objective for CurveObjective<'_> {
    fn dim(&self) -> usize {
        (self.segments - 1) * self.dim
    }

    fn value(&mut self, z: &[f64]) -> Result<f64> {
        let curve = self.assemble(z)?;
        let u0 = self.u0;
        Ok(solve_value_ode(self.model, &curve, u0, &self.opts)?.end_value())
    }

    fn value_grad(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let curve = self.assemble(z)?;
        let traj = solve_value_ode(self.model, &curve, self.u0, &self.opts)?;
        let mut node_grads = vec![[0.0f64; 2]; self.segments + 1];
        adjoint_sweep(self.model, &traj, &mut node_grads);
        for i in 0..self.segments - 1 {
            for a in 0..self.dim {
                grad[i * self.dim + a] = node_grads[i + 1][a];
            }
        }
        Ok(traj.end_value())
    }
}

/// Gradient of a trajectory's end value with respect to the curve geometry:
/// one entry per lifted node (endpoints included), plus the sensitivity to the
/// initial value.
#[derive(Clone, Debug)]
pub struct EndValueGradient {
    pub value: f64,
    /// `d u(t2) / d node_i` in lifted coordinates.
    pub nodes: Vec<Coord>,
    /// `d u(t2) / d u0`, the discrete `e^(int L_u ds)` along the trajectory.
    pub initial_sensitivity: f64,
}

/// Differentiate the end value of a solved trajectory through the integrator.
/// Exact for the discrete problem: matches finite differences of
/// [`solve_value_ode`]'s end value down to round-off, not just to O(h^4).
pub fn end_value_gradient(model: &LagrangianModel, traj: &ValueTrajectory) -> EndValueGradient {
    let mut nodes = vec![[0.0f64; 2]; traj.curve().n_segments() + 1];
    let initial_sensitivity = adjoint_sweep(model, traj, &mut nodes);
    EndValueGradient { value: traj.end_value(), nodes, initial_sensitivity }
}

/// Reverse sweep of the classical Runge-Kutta step: accumulates
/// `d u(t2) / d node` into `node_grads` (lifted coordinates) and returns
/// `d u(t2) / d u0`.
fn adjoint_sweep(model: &LagrangianModel, traj: &ValueTrajectory, node_grads: &mut [[f64; 2]]) -> f64 {
    let curve = traj.curve();
    let dim = curve.domain().dim();
    let n = curve.n_segments();
    let m = traj.substeps();
    let dt = curve.dt();
    let h = dt / m as f64;
    let lifted = curve.lifted_nodes();
    let mut lambda = 1.0;
    for i in (0..n).rev() {
        let v = curve.segment_velocity(i);
        let x0 = lifted[i];
        let t_node = curve.node_time(i);
        for j in (0..m).rev() {
            let u = traj.values()[i * m + j];
            let tau0 = j as f64 * h;
            let s0 = t_node + tau0;
            let pos = |tau: f64| [x0[0] + tau * v[0], x0[1] + tau * v[1]];
            let xa = pos(tau0);
            let xm = pos(tau0 + 0.5 * h);
            let xb = pos(tau0 + h);
            // Forward stage recomputation.
            let p1 = model.full(s0, xa, v, u);
            let p2 = model.full(s0 + 0.5 * h, xm, v, u + 0.5 * h * p1.l);
            let p3 = model.full(s0 + 0.5 * h, xm, v, u + 0.5 * h * p2.l);
            let p4 = model.full(s0 + h, xb, v, u + h * p3.l);
            // Reverse accumulation through the stage couplings.
            let w4 = lambda * h / 6.0;
            let w3 = lambda * h / 3.0 + w4 * p4.l_u * h;
            let w2 = lambda * h / 3.0 + w3 * p3.l_u * 0.5 * h;
            let w1 = lambda * h / 6.0 + w2 * p2.l_u * 0.5 * h;
            let a1 = tau0 / dt;
            let am = (tau0 + 0.5 * h) / dt;
            let ab = (tau0 + h) / dt;
            for (w, p, alpha) in [(w1, &p1, a1), (w2, &p2, am), (w3, &p3, am), (w4, &p4, ab)] {
                for a in 0..dim {
                    node_grads[i][a] += w * (p.l_x[a] * (1.0 - alpha) - p.l_v[a] / dt);
                    node_grads[i + 1][a] += w * (p.l_x[a] * alpha + p.l_v[a] / dt);
                }
            }
            lambda += w1 * p1.l_u + w2 * p2.l_u + w3 * p3.l_u + w4 * p4.l_u;
        }
    }
    lambda
}

/// Midpoint-rule defect of `d/ds L_v = L_x + L_u L_v` at interior nodes.
/// Small values certify interior stationarity of a candidate minimizer; the
/// defect is O(dt^2) at a true discrete minimum and jumps by orders of
/// magnitude under node perturbations.
pub fn stationarity_residual(model: &LagrangianModel, traj: &ValueTrajectory) -> f64 {
    let curve = traj.curve();
    let n = curve.n_segments();
    if n < 2 {
        return 0.0;
    }
    let dim = curve.domain().dim();
    let dt = curve.dt();
    let lifted = curve.lifted_nodes();
    let momenta: Vec<Coord> = (0..n)
        .map(|i| {
            let v = curve.segment_velocity(i);
            let s = curve.node_time(i) + 0.5 * dt;
            let x = [
                0.5 * (lifted[i][0] + lifted[i + 1][0]),
                0.5 * (lifted[i][1] + lifted[i + 1][1]),
            ];
            model.full(s, x, v, traj.u_at(s)).l_v
        })
        .collect();
    let mut worst = 0.0f64;
    for i in 1..n {
        let s = curve.node_time(i);
        let va = curve.segment_velocity(i - 1);
        let vb = curve.segment_velocity(i);
        let v = [0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])];
        let p = model.full(s, lifted[i], v, traj.u_at(s));
        for a in 0..dim {
            let lhs = (momenta[i][a] - momenta[i - 1][a]) / dt;
            worst = worst.max((lhs - (p.l_x[a] + p.l_u * p.l_v[a])).abs());
        }
    }
    worst
}

/// Minimize the end value over curves from `x` at `t1` to `y` at `t2` with
/// `u(t1) = u0`. See the module docs for the search strategy.
pub fn fundamental_solution(
    model: &LagrangianModel,
    t1: f64,
    t2: f64,
    x: Coord,
    y: Coord,
    u0: f64,
    cfg: &SolverConfig,
) -> Result<HerglotzResult> {
    fundamental_solution_warm(model, t1, t2, x, y, u0, cfg, None)
}

/// As [`fundamental_solution`], with an optional previous minimizer to seed an
/// extra start. The multi-start sweep still runs, so a stale warm start cannot
/// make the result worse.
#[allow(clippy::too_many_arguments)]
pub fn fundamental_solution_warm(
    model: &LagrangianModel,
    t1: f64,
    t2: f64,
    x: Coord,
    y: Coord,
    u0: f64,
    cfg: &SolverConfig,
    warm: Option<&Curve>,
) -> Result<HerglotzResult> {
    let horizon = t2 - t1;
    if !(horizon.is_finite() && horizon >= cfg.min_horizon) {
        return Err(Error::ShortHorizon { horizon, min: cfg.min_horizon });
    }
    let domain = *model.domain();
    let dim = domain.dim();
    for a in 0..dim {
        if !x[a].is_finite() || !y[a].is_finite() {
            return Err(Error::invalid("endpoint", "coordinates must be finite".to_string()));
        }
    }
    if !u0.is_finite() {
        return Err(Error::invalid("initial value", format!("{u0} is not finite")));
    }

    let n = cfg.curve_segments;
    let mut objective = CurveObjective {
        model,
        t1,
        t2,
        z0: domain.wrap(x),
        zn: [0.0; 2],
        segments: n,
        dim,
        opts: OdeOptions { substeps: cfg.ode_substeps },
        u0,
    };

    // Straight starts, one per winding class in range.
    let base = domain.wrap_signed([y[0] - x[0], y[1] - x[1]]);
    let k_range = -cfg.max_winding..=cfg.max_winding;
    let mut starts: Vec<(StartKind, Coord, Vec<f64>)> = Vec::new();
    let windings: Vec<[i32; 2]> = if dim == 1 {
        k_range.clone().map(|k| [k, 0]).collect()
    } else {
        k_range
            .clone()
            .flat_map(|k1| k_range.clone().map(move |k2| [k1, k2]))
            .collect()
    };
    for w in &windings {
        let mut zn = objective.z0;
        for a in 0..dim {
            zn[a] += base[a] + w[a] as f64 * domain.period(a);
        }
        let lifted: Vec<Coord> = (0..=n)
            .map(|i| {
                let f = i as f64 / n as f64;
                [
                    objective.z0[0] + f * (zn[0] - objective.z0[0]),
                    objective.z0[1] + f * (zn[1] - objective.z0[1]),
                ]
            })
            .collect();
        starts.push((StartKind::Straight(*w), zn, objective.pack(&lifted)));
    }

    // Random perturbations of the minimal straight start.
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
        cfg.seed,
        &[t1, t2, x[0], x[1], y[0], y[1], u0],
    ));
    let minimal = windings.iter().position(|w| *w == [0, 0]).unwrap_or(0);
    let straight_minimal = (starts[minimal].1, starts[minimal].2.clone());
    for j in 0..cfg.random_starts {
        let mut z = straight_minimal.1.clone();
        for (idx, v) in z.iter_mut().enumerate() {
            let a = idx % dim;
            *v += cfg.start_amplitude * domain.period(a) * rng.gen_range(-1.0..1.0);
        }
        starts.push((StartKind::Random(j), straight_minimal.0, z));
    }

    // Warm start from a previous minimizer with matching discretization.
    if let Some(prev) = warm {
        if prev.n_segments() == n && prev.domain() == &domain {
            let prev_lifted = prev.lifted_nodes();
            let shift = [
                objective.z0[0] - prev_lifted[0][0],
                objective.z0[1] - prev_lifted[0][1],
            ];
            let shifted: Vec<Coord> =
                prev_lifted.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
            let zn = *shifted.last().unwrap();
            // Only usable when the shifted end lands on a lift of y.
            if domain.distance(zn, y) < 1e-9 {
                starts.push((StartKind::Warm, zn, objective.pack(&shifted)));
            }
        }
    }

    let bfgs = BfgsOptions { grad_tol: cfg.grad_tol, max_iters: cfg.max_opt_iters };
    let mut best: Option<(f64, bool, f64, usize, Curve, usize)> = None;
    let mut last_err: Option<Error> = None;
    let mut outcomes: Vec<StartOutcome> = Vec::with_capacity(starts.len());
    let starts_tried = starts.len();
    for (idx, (kind, zn, z_init)) in starts.into_iter().enumerate() {
        let mut record = StartOutcome {
            kind,
            value: f64::NAN,
            grad_norm: f64::NAN,
            iterations: 0,
            converged: false,
            selected: false,
        };
        objective.zn = zn;
        let outcome = match minimize(&mut objective, &z_init, &bfgs) {
            Ok(o) => o,
            Err(e) => {
                last_err = Some(e);
                outcomes.push(record);
                continue;
            }
        };
        record.value = outcome.value;
        record.grad_norm = outcome.grad_norm;
        record.iterations = outcome.iterations;
        record.converged = outcome.converged;
        outcomes.push(record);
        if !outcome.value.is_finite() {
            continue;
        }
        let candidate_curve = match objective.assemble(&outcome.z) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let replace = match &best {
            None => true,
            Some((bv, bc, ..)) => {
                match (outcome.value - bv).abs() <= 1e-9 * (1.0 + bv.abs()) {
                    true => {
                        // Tie: prefer converged, then lexicographically smaller geometry.
                        match (outcome.converged, *bc) {
                            (true, false) => true,
                            (false, true) => false,
                            _ => {
                                let bcurve = &best.as_ref().unwrap().4;
                                candidate_curve.compare_geometry(bcurve) == Ordering::Less
                            }
                        }
                    }
                    false => outcome.value < *bv,
                }
            }
        };
        if replace {
            best = Some((
                outcome.value,
                outcome.converged,
                outcome.grad_norm,
                outcome.iterations,
                candidate_curve,
                idx,
            ));
        }
    }

    let Some((end_value, converged, grad_norm, _iters, curve, best_idx)) = best else {
        return Err(last_err.unwrap_or_else(|| Error::invalid("two-point solve", "no start produced a value".to_string())));
    };
    outcomes[best_idx].selected = true;

    let traj = solve_value_ode(model, &curve, u0, &objective.opts)?;
    let mut node_grads = vec![[0.0f64; 2]; n + 1];
    let sensitivity = adjoint_sweep(model, &traj, &mut node_grads);
    let result = HerglotzResult {
        value: end_value - u0,
        stationarity_residual: stationarity_residual(model, &traj),
        end_value_sensitivity: sensitivity,
        minimizer: curve,
        trajectory: traj,
        starts_tried,
        converged,
        grad_norm,
        starts: outcomes,
    };
    if !converged {
        return Err(Error::NoStartConverged {
            starts: starts_tried,
            value: result.value,
            grad_norm,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Freeze the value argument along a reference minimizer, re-minimize the
/// derived affine-in-`u` model over the same endpoints and horizon, and report
/// that solve. When the parent model is concave in `u`, the derived action
/// dominates the original one while agreeing on the reference curve, so the
/// returned value can only improve on the reference value from above.
pub fn linearized_fundamental_solution(
    parent: &LagrangianModel,
    reference: &ValueTrajectory,
    cfg: &SolverConfig,
) -> Result<HerglotzResult> {
    let lin = linearized_model(parent, reference);
    let curve = reference.curve();
    let x = curve.nodes()[0];
    let y = *curve.nodes().last().unwrap();
    fundamental_solution_warm(
        &lin,
        curve.t_start(),
        curve.t_end(),
        x,
        y,
        reference.initial_value(),
        cfg,
        Some(curve),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{
        make_discounted, make_nonlinear_concave, Conditions, DomainDescriptor, ModelConstants,
        ModelFlags, TonelliSpec, TrigPoly,
    };
    use approx::assert_relative_eq;

    fn unit_line() -> DomainDescriptor {
        DomainDescriptor::line(1.0).unwrap()
    }

    fn quick_cfg() -> SolverConfig {
        SolverConfig { seed: 1234, curve_segments: 16, random_starts: 2, ..SolverConfig::default() }
    }

    #[test]
    fn free_particle_matches_closed_form() {
        // L = v^2/2 - u. Minimizing curves satisfy v' = -v; for displacement d
        // over unit time the optimal value is d^2 / (2 (e - 1)).
        let m = make_discounted(&TonelliSpec::free(unit_line()), 1.0).unwrap();
        let cfg = SolverConfig { seed: 7, curve_segments: 32, ..SolverConfig::default() };
        let d = 0.25;
        let r = fundamental_solution(&m, 0.0, 1.0, [0.0, 0.0], [d, 0.0], 0.0, &cfg).unwrap();
        let exact = d * d / (2.0 * (std::f64::consts::E - 1.0));
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-5, "value {} vs exact {exact}", r.value);
        // Strictly better than the constant-speed curve.
        let const_speed = 0.5 * d * d * (1.0 - (-1.0f64).exp());
        assert!(r.value < const_speed - 1e-4);
        // The optimal velocity profile decays; check the endpoints' velocities.
        let v_first = r.minimizer.segment_velocity(0)[0];
        let v_last = r.minimizer.segment_velocity(r.minimizer.n_segments() - 1)[0];
        assert!(v_first > v_last + 0.05, "velocities {v_first} .. {v_last}");
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let l0 = TonelliSpec::mechanical(unit_line(), TrigPoly::from_rows(1, &[vec![0.8, 1.0, 0.3]]).unwrap());
        let m = make_nonlinear_concave(&l0, 1.1, 0.4).unwrap();
        let mut obj = CurveObjective {
            model: &m,
            t1: 0.0,
            t2: 1.0,
            z0: [0.1, 0.0],
            zn: [0.7, 0.0],
            segments: 6,
            dim: 1,
            opts: OdeOptions { substeps: 6 },
            u0: 0.3,
        };
        let z: Vec<f64> = vec![0.22, 0.31, 0.45, 0.58, 0.66];
        let mut grad = vec![0.0; 5];
        obj.value_grad(&z, &mut grad).unwrap();
        let h = 1e-6;
        for i in 0..z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fd = (obj.value(&zp).unwrap() - obj.value(&zm).unwrap()) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                "component {i}: adjoint {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn sensitivity_equals_discounted_decay() {
        let m = make_discounted(&TonelliSpec::free(unit_line()), 1.0).unwrap();
        let cfg = quick_cfg();
        let r = fundamental_solution(&m, 0.0, 1.0, [0.0, 0.0], [0.3, 0.0], 0.2, &cfg).unwrap();
        // d u(t2)/d u0 = e^(-lambda T) for constant L_u = -lambda.
        assert_relative_eq!(r.end_value_sensitivity, (-1.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn drift_model_prefers_winding_one() {
        // L = (v - 0.8)^2 / 2 - u on the unit circle, x = y: going once around
        // forward costs less than standing still.
        let dom = unit_line();
        let drift = 0.8;
        let model = LagrangianModel::from_parts(
            dom,
            move |_s, _x, v: Coord, u: f64| 0.5 * (v[0] - drift) * (v[0] - drift) - u,
            |_s, _x, _v, _u| -1.0,
            |_s, _x, _v, _u| [0.0; 2],
            move |_s, _x, v: Coord, _u| [v[0] - drift, 0.0],
            |_s, _x, _v, _u| 0.0,
            Conditions::basic().with(crate::lagrangian::Condition::L6),
            ModelConstants { k_bound: 1.0, c0: drift * drift, theta0_coeff: 0.25, theta0_power: 2.0, c1: 1.0, c2: 0.0 },
            ModelFlags { time_dependent: false, lu_depends_on_xv: false },
        );
        let cfg = SolverConfig { seed: 5, curve_segments: 16, max_winding: 1, ..SolverConfig::default() };
        let r = fundamental_solution(&model, 0.0, 1.0, [0.2, 0.0], [0.2, 0.0], 0.0, &cfg).unwrap();
        let total_winding: i32 = r.minimizer.winding().iter().map(|w| w[0]).sum();
        assert_eq!(total_winding, 1, "value {}", r.value);
        // Standing still would cost (discounting aside) 0.32; winding once is cheaper.
        assert!(r.value < 0.1, "value {}", r.value);
    }

    #[test]
    fn short_horizon_is_rejected() {
        let m = make_discounted(&TonelliSpec::free(unit_line()), 1.0).unwrap();
        let cfg = quick_cfg();
        match fundamental_solution(&m, 0.0, 1e-5, [0.0, 0.0], [0.1, 0.0], 0.0, &cfg) {
            Err(Error::ShortHorizon { .. }) => {}
            other => panic!("expected short-horizon error, got {other:?}"),
        }
    }

    #[test]
    fn iteration_starved_solves_surface_best_effort() {
        let l0 = TonelliSpec::mechanical(unit_line(), TrigPoly::from_rows(1, &[vec![1.0, 1.0, 0.0]]).unwrap());
        let m = make_discounted(&l0, 1.0).unwrap();
        let cfg = SolverConfig {
            seed: 3,
            curve_segments: 16,
            max_opt_iters: 1,
            grad_tol: 1e-14,
            ..SolverConfig::default()
        };
        match fundamental_solution(&m, 0.0, 1.0, [0.1, 0.0], [0.6, 0.0], 0.0, &cfg) {
            Err(Error::NoStartConverged { best, starts, .. }) => {
                assert!(best.value.is_finite());
                assert!(!best.converged);
                assert!(starts > 0);
            }
            other => panic!("expected no-convergence error, got {other:?}"),
        }
    }

    #[test]
    fn repeat_calls_are_bitwise_identical() {
        let l0 = TonelliSpec::mechanical(unit_line(), TrigPoly::from_rows(1, &[vec![0.6, 1.0, 0.2]]).unwrap());
        let m = make_nonlinear_concave(&l0, 1.0, 0.3).unwrap();
        let cfg = quick_cfg();
        let a = fundamental_solution(&m, 0.0, 1.0, [0.15, 0.0], [0.8, 0.0], 0.1, &cfg).unwrap();
        let b = fundamental_solution(&m, 0.0, 1.0, [0.15, 0.0], [0.8, 0.0], 0.1, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        for (na, nb) in a.minimizer.nodes().iter().zip(b.minimizer.nodes()) {
            assert_eq!(na[0].to_bits(), nb[0].to_bits());
        }
    }

    #[test]
    fn warm_start_reproduces_the_cold_minimum() {
        let l0 = TonelliSpec::mechanical(unit_line(), TrigPoly::from_rows(1, &[vec![0.6, 1.0, 0.2]]).unwrap());
        let m = make_nonlinear_concave(&l0, 1.0, 0.3).unwrap();
        let cfg = quick_cfg();
        let cold = fundamental_solution(&m, 0.0, 1.0, [0.15, 0.0], [0.8, 0.0], 0.1, &cfg).unwrap();
        let warm_cfg = SolverConfig { random_starts: 0, max_winding: 0, ..cfg.clone() };
        let warm = fundamental_solution_warm(
            &m, 0.0, 1.0, [0.15, 0.0], [0.8, 0.0], 0.1, &warm_cfg, Some(&cold.minimizer),
        )
        .unwrap();
        assert!((warm.value - cold.value).abs() < 1e-8);
    }

    #[test]
    fn linearized_solve_cannot_beat_the_reference_from_below() {
        // For a u-concave model, the frozen-argument affine model dominates the
        // original, and its minimum over the same endpoints stays at or below
        // the reference value (the reference curve itself is feasible).
        let l0 = TonelliSpec::mechanical(unit_line(), TrigPoly::from_rows(1, &[vec![0.7, 1.0, 0.0]]).unwrap());
        let m = make_nonlinear_concave(&l0, 1.0, 0.4).unwrap();
        let cfg = SolverConfig { seed: 11, curve_segments: 16, ..SolverConfig::default() };
        let reference = fundamental_solution(&m, 0.0, 1.0, [0.1, 0.0], [0.55, 0.0], 0.2, &cfg).unwrap();
        let lin = linearized_fundamental_solution(&m, &reference.trajectory, &cfg).unwrap();
        // Reference curve is feasible for the derived problem, so the derived
        // minimum cannot exceed the reference value by more than round-off.
        assert!(lin.value <= reference.value + 1e-7, "lin {} vs ref {}", lin.value, reference.value);
        // At a genuine minimizer of a concave-in-u problem the two agree closely.
        assert!((lin.value - reference.value).abs() < 1e-5, "gap {}", lin.value - reference.value);
    }
}
