//! Piecewise-linear curves on the torus and the value dynamics along them.
//!
//! A [`Curve`] stores wrapped node positions plus an integer winding per
//! segment, so curve geometry is exact on the periodic domain while the
//! optimizer can work in lifted (unwrapped) coordinates. [`solve_value_ode`]
//! integrates the scalar dynamics `u'(s) = L(s, xi(s), xi'(s), u(s))` along a
//! curve with classical fourth-order Runge-Kutta and records the value at every
//! substep.
//!
//! The same trajectory can then be re-evaluated through several algebraically
//! equivalent splittings (`u' = a(s) u + g(s)` integrated by variation of
//! constants); these share the quadrature engine in
//! [`weighted_exponential_value`] and agree with the direct integration up to
//! discretization error, which makes them useful consistency oracles.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lagrangian::{Coord, DomainDescriptor, LPoint, LagrangianModel, DIVERGENCE_GUARD};

/// Piecewise-linear path `xi: [t_start, t_end] -> torus` with uniformly spaced
/// node times. Nodes are stored wrapped; `winding[i]` counts the extra period
/// multiples segment `i` traverses per axis, so segment displacements are
/// unambiguous.
#[derive(Clone, Debug)]
pub struct Curve {
    domain: DomainDescriptor,
    t_start: f64,
    t_end: f64,
    nodes: Vec<Coord>,
    winding: Vec<[i32; 2]>,
}

impl Curve {
    pub fn new(
        domain: DomainDescriptor,
        t_start: f64,
        t_end: f64,
        nodes: Vec<Coord>,
        winding: Vec<[i32; 2]>,
    ) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::invalid("curve times", format!("[{t_start}, {t_end}] is not an interval")));
        }
        if nodes.len() < 2 {
            return Err(Error::invalid("curve nodes", format!("{} nodes, need at least 2", nodes.len())));
        }
        if winding.len() + 1 != nodes.len() {
            return Err(Error::invalid(
                "curve winding",
                format!("{} winding entries for {} nodes", winding.len(), nodes.len()),
            ));
        }
        for (i, n) in nodes.iter().enumerate() {
            for a in 0..domain.dim() {
                if !n[a].is_finite() {
                    return Err(Error::invalid("curve nodes", format!("node {i} is not finite")));
                }
            }
        }
        let nodes = nodes.iter().map(|&n| domain.wrap(n)).collect();
        Ok(Self { domain, t_start, t_end, nodes, winding })
    }

    /// Straight segmentized path from `x` to `y` in the homotopy class given by
    /// `winding`: the lifted endpoint displacement is the minimal representative
    /// of `y - x` plus `winding` periods per axis.
    pub fn straight(
        domain: DomainDescriptor,
        t_start: f64,
        t_end: f64,
        x: Coord,
        y: Coord,
        winding: [i32; 2],
        segments: usize,
    ) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("curve segments", "need at least one".to_string()));
        }
        let base = domain.wrap_signed([y[0] - x[0], y[1] - x[1]]);
        let mut disp = [0.0; 2];
        for a in 0..domain.dim() {
            disp[a] = base[a] + winding[a] as f64 * domain.period(a);
        }
        let x0 = domain.wrap(x);
        let lifted: Vec<Coord> = (0..=segments)
            .map(|i| {
                let f = i as f64 / segments as f64;
                [x0[0] + f * disp[0], x0[1] + f * disp[1]]
            })
            .collect();
        Self::from_lifted(domain, t_start, t_end, &lifted)
    }

    /// Build from lifted (unwrapped) nodes, recovering the per-segment winding.
    pub fn from_lifted(
        domain: DomainDescriptor,
        t_start: f64,
        t_end: f64,
        lifted: &[Coord],
    ) -> Result<Self> {
        if lifted.len() < 2 {
            return Err(Error::invalid("curve nodes", format!("{} nodes, need at least 2", lifted.len())));
        }
        let nodes: Vec<Coord> = lifted.iter().map(|&z| domain.wrap(z)).collect();
        let mut winding = Vec::with_capacity(lifted.len() - 1);
        for i in 0..lifted.len() - 1 {
            let mut w = [0i32; 2];
            for a in 0..domain.dim() {
                let turns =
                    ((lifted[i + 1][a] - lifted[i][a]) - (nodes[i + 1][a] - nodes[i][a])) / domain.period(a);
                let rounded = turns.round();
                if !turns.is_finite() || (turns - rounded).abs() > 1e-3 {
                    return Err(Error::invalid(
                        "curve lift",
                        format!("segment {i} displacement is not consistent with the period lattice"),
                    ));
                }
                w[a] = rounded as i32;
            }
            winding.push(w);
        }
        Self::new(domain, t_start, t_end, nodes, winding)
    }

    pub fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_segments(&self) -> usize {
        self.winding.len()
    }

    pub fn nodes(&self) -> &[Coord] {
        &self.nodes
    }

    pub fn winding(&self) -> &[[i32; 2]] {
        &self.winding
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_segments() as f64
    }

    pub fn node_time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt()
    }

    /// Lifted displacement of segment `i`, winding included.
    pub fn segment_displacement(&self, i: usize) -> Coord {
        let mut d = [0.0; 2];
        for a in 0..self.domain.dim() {
            d[a] = self.nodes[i + 1][a] - self.nodes[i][a] + self.winding[i][a] as f64 * self.domain.period(a);
        }
        d
    }

    pub fn segment_velocity(&self, i: usize) -> Coord {
        let d = self.segment_displacement(i);
        let dt = self.dt();
        [d[0] / dt, d[1] / dt]
    }

    /// Lifted nodes with the first node as base point.
    pub fn lifted_nodes(&self) -> Vec<Coord> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut z = self.nodes[0];
        out.push(z);
        for i in 0..self.n_segments() {
            let d = self.segment_displacement(i);
            z = [z[0] + d[0], z[1] + d[1]];
            out.push(z);
        }
        out
    }

    /// Segment index and fractional offset for time `s`, clamped to the span.
    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.n_segments();
        let f = ((s - self.t_start) / (self.t_end - self.t_start)).clamp(0.0, 1.0) * n as f64;
        let i = (f.floor() as usize).min(n - 1);
        (i, f - i as f64)
    }

    /// Wrapped position at time `s` (clamped to the time span).
    pub fn position_at(&self, s: f64) -> Coord {
        let (i, alpha) = self.locate(s);
        let d = self.segment_displacement(i);
        let p = [self.nodes[i][0] + alpha * d[0], self.nodes[i][1] + alpha * d[1]];
        self.domain.wrap(p)
    }

    pub fn velocity_at(&self, s: f64) -> Coord {
        let (i, _) = self.locate(s);
        self.segment_velocity(i)
    }

    /// Same geometry split into `factor` times as many segments.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("refinement factor", "must be positive".to_string()));
        }
        let lifted = self.lifted_nodes();
        let mut out = Vec::with_capacity(self.n_segments() * factor + 1);
        for i in 0..self.n_segments() {
            for j in 0..factor {
                let f = j as f64 / factor as f64;
                out.push([
                    lifted[i][0] + f * (lifted[i + 1][0] - lifted[i][0]),
                    lifted[i][1] + f * (lifted[i + 1][1] - lifted[i][1]),
                ]);
            }
        }
        out.push(*lifted.last().unwrap());
        Self::from_lifted(self.domain, self.t_start, self.t_end, &out)
    }

    /// Same nodes on a different time interval.
    pub fn with_time_interval(&self, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(self.domain, t_start, t_end, self.nodes.clone(), self.winding.clone())
    }

    /// Join two curves meeting at a common time and node.
    pub fn concat(&self, other: &Curve) -> Result<Self> {
        if (self.t_end - other.t_start).abs() > 1e-12 * (1.0 + self.t_end.abs()) {
            return Err(Error::invalid(
                "curve concatenation",
                format!("time gap between {} and {}", self.t_end, other.t_start),
            ));
        }
        let join = self.domain.distance(*self.nodes.last().unwrap(), other.nodes[0]);
        if join > 1e-9 {
            return Err(Error::invalid("curve concatenation", format!("endpoint gap {join:.3e}")));
        }
        // Node times stay uniform only if both pieces share the segment duration.
        if (self.dt() - other.dt()).abs() > 1e-12 * (1.0 + self.dt()) {
            return Err(Error::invalid(
                "curve concatenation",
                format!("segment durations differ: {} vs {}", self.dt(), other.dt()),
            ));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes[1..]);
        let mut winding = self.winding.clone();
        winding.extend_from_slice(&other.winding);
        Self::new(self.domain, self.t_start, other.t_end, nodes, winding)
    }

    /// Total lifted path length.
    pub fn length(&self) -> f64 {
        (0..self.n_segments())
            .map(|i| {
                let d = self.segment_displacement(i);
                let mut s = 0.0;
                for a in 0..self.domain.dim() {
                    s += d[a] * d[a];
                }
                s.sqrt()
            })
            .sum()
    }

    /// Deterministic lexicographic order on (nodes, winding); used to break
    /// exact value ties reproducibly.
    pub fn compare_geometry(&self, other: &Curve) -> Ordering {
        let dim = self.domain.dim();
        match self.nodes.len().cmp(&other.nodes.len()) {
            Ordering::Equal => {}
            ne => return ne,
        }
        for (a_node, b_node) in self.nodes.iter().zip(&other.nodes) {
            for a in 0..dim {
                match a_node[a].total_cmp(&b_node[a]) {
                    Ordering::Equal => {}
                    ne => return ne,
                }
            }
        }
        for (wa, wb) in self.winding.iter().zip(&other.winding) {
            for a in 0..dim {
                match wa[a].cmp(&wb[a]) {
                    Ordering::Equal => {}
                    ne => return ne,
                }
            }
        }
        Ordering::Equal
    }
}

/// Options for the value integration.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Runge-Kutta substeps per curve segment. An odd count is rounded up so
    /// that downstream quadrature can pair substeps into panels.
    pub substeps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { substeps: 8 }
    }
}

impl OdeOptions {
    pub fn effective_substeps(&self) -> usize {
        let m = self.substeps.max(1);
        if m % 2 == 1 {
            m + 1
        } else {
            m
        }
    }
}

/// Solution of the value dynamics along one curve, recorded densely at every
/// Runge-Kutta substep.
#[derive(Clone, Debug)]
pub struct ValueTrajectory {
    curve: Curve,
    substeps: usize,
    times: Vec<f64>,
    u: Vec<f64>,
    u0: f64,
}

impl ValueTrajectory {
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Substeps per segment of the dense grid.
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn initial_value(&self) -> f64 {
        self.u0
    }

    pub fn end_value(&self) -> f64 {
        *self.u.last().unwrap()
    }

    /// Linear interpolation on the dense grid, clamped to the time span.
    pub fn u_at(&self, s: f64) -> f64 {
        let n = self.times.len() - 1;
        let t0 = self.times[0];
        let t1 = self.times[n];
        let f = ((s - t0) / (t1 - t0)).clamp(0.0, 1.0) * n as f64;
        let i = (f.floor() as usize).min(n - 1);
        let a = f - i as f64;
        (1.0 - a) * self.u[i] + a * self.u[i + 1]
    }

    /// Values at the curve's node times only.
    pub fn node_values(&self) -> Vec<f64> {
        (0..=self.curve.n_segments()).map(|i| self.u[i * self.substeps]).collect()
    }
}

/// Integrate `u' = L(s, xi(s), xi'(s), u)` along `curve` from `u(t_start) = u0`
/// with classical RK4. Fails with [`Error::Divergence`] once `|u|` exceeds the
/// guard threshold.
pub fn solve_value_ode(
    model: &LagrangianModel,
    curve: &Curve,
    u0: f64,
    opts: &OdeOptions,
) -> Result<ValueTrajectory> {
    if !u0.is_finite() {
        return Err(Error::invalid("initial value", format!("{u0} is not finite")));
    }
    let m = opts.effective_substeps();
    let n = curve.n_segments();
    let dt = curve.dt();
    let h = dt / m as f64;
    let lifted = curve.lifted_nodes();

    let mut times = Vec::with_capacity(n * m + 1);
    let mut us = Vec::with_capacity(n * m + 1);
    times.push(curve.t_start());
    us.push(u0);

    let mut u = u0;
    for i in 0..n {
        let v = curve.segment_velocity(i);
        let x0 = lifted[i];
        let t_node = curve.node_time(i);
        for j in 0..m {
            let s0 = t_node + j as f64 * h;
            let pos = |tau: f64| -> Coord { [x0[0] + tau * v[0], x0[1] + tau * v[1]] };
            let tau0 = j as f64 * h;
            let x_a = pos(tau0);
            let x_m = pos(tau0 + 0.5 * h);
            let x_b = pos(tau0 + h);
            let k1 = model.eval(s0, x_a, v, u);
            let k2 = model.eval(s0 + 0.5 * h, x_m, v, u + 0.5 * h * k1);
            let k3 = model.eval(s0 + 0.5 * h, x_m, v, u + 0.5 * h * k2);
            let k4 = model.eval(s0 + h, x_b, v, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let s1 = s0 + h;
            if !u.is_finite() || u.abs() > DIVERGENCE_GUARD {
                return Err(Error::Divergence { time: s1, guard: DIVERGENCE_GUARD });
            }
            times.push(s1);
            us.push(u);
        }
    }
    // Land the final time exactly.
    *times.last_mut().unwrap() = curve.t_end();
    Ok(ValueTrajectory { curve: curve.clone(), substeps: m, times, u: us, u0 })
}

/// One segment's uniform samples for the variation-of-constants quadrature:
/// `a` and `g` at `2 * panels + 1` equally spaced times.
#[derive(Clone, Debug)]
pub struct SegmentSamples {
    pub t_start: f64,
    pub width: f64,
    pub a: Vec<f64>,
    pub g: Vec<f64>,
}

/// Evaluate `e^(I(T)) u0 + int_0^T e^(I(T) - I(s)) g(s) ds` with
/// `I(s) = int a`, using composite Simpson panels per segment and a matching
/// half-panel rule for the interior cumulative values of `I`. Fourth order in
/// the sample spacing.
pub fn weighted_exponential_value(u0: f64, segments: &[SegmentSamples]) -> Result<f64> {
    // Cumulative integral of `a` at every sample of every segment.
    let mut cumulative: Vec<Vec<f64>> = Vec::with_capacity(segments.len());
    let mut total = 0.0;
    for seg in segments {
        debug_assert!(seg.a.len() == seg.g.len() && seg.a.len() % 2 == 1 && seg.a.len() >= 3);
        let panels = (seg.a.len() - 1) / 2;
        let ph = seg.width / panels as f64;
        let mut cum = Vec::with_capacity(seg.a.len());
        cum.push(total);
        for p in 0..panels {
            let i = 2 * p;
            let (f0, fm, f1) = (seg.a[i], seg.a[i + 1], seg.a[i + 2]);
            let base = cum[i];
            cum.push(base + ph / 24.0 * (5.0 * f0 + 8.0 * fm - f1));
            cum.push(base + ph / 6.0 * (f0 + 4.0 * fm + f1));
        }
        total = *cum.last().unwrap();
        cumulative.push(cum);
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteGauge { time: segments.last().map_or(0.0, |s| s.t_start) });
    }

    let mut value = total.exp() * u0;
    for (seg, cum) in segments.iter().zip(&cumulative) {
        let panels = (seg.a.len() - 1) / 2;
        let ph = seg.width / panels as f64;
        let w = |i: usize| (total - cum[i]).exp() * seg.g[i];
        for p in 0..panels {
            let i = 2 * p;
            value += ph / 6.0 * (w(i) + 4.0 * w(i + 1) + w(i + 2));
        }
        if !value.is_finite() {
            return Err(Error::NonFiniteGauge { time: seg.t_start });
        }
    }
    Ok(value)
}

/// Visit every dense sample of a trajectory in order:
/// `(dense_index, s, lifted_position, segment_velocity)`.
pub(crate) fn for_each_dense_sample(traj: &ValueTrajectory, mut f: impl FnMut(usize, f64, Coord, Coord)) {
    let curve = traj.curve();
    let m = traj.substeps();
    let lifted = curve.lifted_nodes();
    let dt = curve.dt();
    let h = dt / m as f64;
    for i in 0..curve.n_segments() {
        let v = curve.segment_velocity(i);
        let x0 = lifted[i];
        let t_node = curve.node_time(i);
        let lo = if i == 0 { 0 } else { 1 };
        for j in lo..=m {
            let tau = j as f64 * h;
            let idx = i * m + j;
            f(idx, t_node + tau, [x0[0] + tau * v[0], x0[1] + tau * v[1]], v);
        }
    }
}

fn splitting_segments(
    traj: &ValueTrajectory,
    mut split: impl FnMut(f64, Coord, Coord, f64) -> (f64, f64),
) -> Vec<SegmentSamples> {
    let curve = traj.curve();
    let m = traj.substeps();
    let n = curve.n_segments();
    let dt = curve.dt();
    let mut segs: Vec<SegmentSamples> = (0..n)
        .map(|i| SegmentSamples {
            t_start: curve.node_time(i),
            width: dt,
            a: Vec::with_capacity(m + 1),
            g: Vec::with_capacity(m + 1),
        })
        .collect();
    let lifted = curve.lifted_nodes();
    let h = dt / m as f64;
    for i in 0..n {
        let v = curve.segment_velocity(i);
        let x0 = lifted[i];
        let t_node = curve.node_time(i);
        for j in 0..=m {
            let tau = j as f64 * h;
            let idx = i * m + j;
            let (a, g) = split(t_node + tau, [x0[0] + tau * v[0], x0[1] + tau * v[1]], v, traj.values()[idx]);
            segs[i].a.push(a);
            segs[i].g.push(g);
        }
    }
    segs
}

/// Re-evaluate a trajectory's end value through the splitting
/// `a(s) = L_u(s, xi, xi', u)`, `g(s) = L - u L_u` (variation of constants with
/// the exact integrating factor).
pub fn integrating_factor_value(model: &LagrangianModel, traj: &ValueTrajectory) -> Result<f64> {
    integrating_factor_value_from(model, traj, traj.initial_value())
}

/// Same splitting as [`integrating_factor_value`], but with the initial-value
/// weight `e^(int L_u) * initial` taken at an arbitrary `initial`. Passing `0.0`
/// keeps only the forcing integral, which is how half-line values discard a
/// certified-small tail.
pub fn integrating_factor_value_from(
    model: &LagrangianModel,
    traj: &ValueTrajectory,
    initial: f64,
) -> Result<f64> {
    let segs = splitting_segments(traj, |s, x, v, u| {
        let p = model.full(s, x, v, u);
        (p.l_u, p.l - u * p.l_u)
    });
    weighted_exponential_value(initial, &segs)
}

/// Evaluate `e^(-rate (t2 - t1)) * initial + int e^(-rate (t2 - s)) L(s, xi, xi', 0) ds`
/// along a trajectory's curve. For models whose u-dependence is exactly
/// `-rate * u` this reproduces the end value; it is the closed form the
/// discounted family admits.
pub fn constant_rate_value(
    model: &LagrangianModel,
    traj: &ValueTrajectory,
    rate: f64,
    initial: f64,
) -> Result<f64> {
    let segs = splitting_segments(traj, |s, x, v, _u| (-rate, model.eval(s, x, v, 0.0)));
    weighted_exponential_value(initial, &segs)
}

/// Nodes and weights of 8-point Gauss-Legendre quadrature on [0, 1].
const GAUSS8: [(f64, f64); 8] = [
    (0.019855071751231856, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894363),
    (0.40828267875217511, 0.18134189168918099),
    (0.59171732124782489, 0.18134189168918099),
    (0.7627662049581645, 0.15685332293894363),
    (0.89833323870681336, 0.11119051722668724),
    (0.98014492824876820, 0.05061426814518813),
];

/// Re-evaluate a trajectory's end value through the secant-slope splitting
/// `a(s) = int_0^1 L_u(s, xi, xi', r u(s)) dr`, `g(s) = L(s, xi, xi', 0)`,
/// using that `L(u) = L(0) + u int_0^1 L_u(r u) dr`. The inner integral is done
/// with 8-point Gauss-Legendre.
pub fn secant_slope_value(model: &LagrangianModel, traj: &ValueTrajectory) -> Result<f64> {
    let segs = splitting_segments(traj, |s, x, v, u| {
        let mut a = 0.0;
        for (node, weight) in GAUSS8 {
            a += weight * model.l_u(s, x, v, node * u);
        }
        (a, model.eval(s, x, v, 0.0))
    });
    weighted_exponential_value(traj.initial_value(), &segs)
}

/// A priori bound `e^(K (t2 - t1)) (|u0| + int |L(s, xi, xi', 0)| ds)` on the
/// value along a curve, valid whenever `|L_u| <= K` holds. Uses the same
/// Simpson panels as the splitting evaluators.
pub fn apriori_value_bound(model: &LagrangianModel, traj: &ValueTrajectory) -> f64 {
    let curve = traj.curve();
    let m = traj.substeps();
    let dt = curve.dt();
    let ph = 2.0 * dt / m as f64;
    let mut samples = vec![0.0; curve.n_segments() * m + 1];
    for_each_dense_sample(traj, |idx, s, x, v| {
        samples[idx] = model.eval(s, x, v, 0.0).abs();
    });
    let mut integral = 0.0;
    for i in 0..curve.n_segments() {
        for p in 0..m / 2 {
            let k = i * m + 2 * p;
            integral += ph / 6.0 * (samples[k] + 4.0 * samples[k + 1] + samples[k + 2]);
        }
    }
    let k_bound = model.constants().k_bound;
    (k_bound * (curve.t_end() - curve.t_start())).exp() * (traj.initial_value().abs() + integral)
}

/// Time-dependent gauge for the generalized splitting
/// `a(s) = F(s)`, `g(s) = L - F(s) u`.
#[derive(Clone, Copy, Debug)]
pub enum Gauge {
    Constant(f64),
    /// `offset + amplitude * cos(frequency * s + phase)`
    Trig { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
    /// `F(s) = L_u` along the trajectory; reduces to the integrating factor.
    CanonicalLu,
}

impl Gauge {
    fn eval(&self, s: f64, canonical: f64) -> f64 {
        match *self {
            Gauge::Constant(c) => c,
            Gauge::Trig { amplitude, frequency, phase, offset } => {
                offset + amplitude * (frequency * s + phase).cos()
            }
            Gauge::CanonicalLu => canonical,
        }
    }
}

/// Re-evaluate a trajectory's end value with an arbitrary gauge `F`:
/// `e^(int F) u0 + int e^(int_s F) (L - F u) ds`. The result is independent of
/// the gauge up to discretization error.
pub fn gauge_split_value(model: &LagrangianModel, traj: &ValueTrajectory, gauge: Gauge) -> Result<f64> {
    let needs_lu = matches!(gauge, Gauge::CanonicalLu);
    let segs = splitting_segments(traj, |s, x, v, u| {
        let (l, lu) = if needs_lu {
            let p = model.full(s, x, v, u);
            (p.l, p.l_u)
        } else {
            (model.eval(s, x, v, u), 0.0)
        };
        let f = gauge.eval(s, lu);
        (f, l - f * u)
    });
    weighted_exponential_value(traj.initial_value(), &segs)
}

fn lerp_on_grid(times: &[f64], vals: &[f64], s: f64) -> f64 {
    let n = times.len() - 1;
    let t0 = times[0];
    let t1 = times[n];
    let f = ((s - t0) / (t1 - t0)).clamp(0.0, 1.0) * n as f64;
    let i = (f.floor() as usize).min(n - 1);
    let a = f - i as f64;
    (1.0 - a) * vals[i] + a * vals[i + 1]
}

/// Freeze the value argument along a reference trajectory and expand to first
/// order: the derived model
/// `L~(s, x, v, u) = L(s, x, v, U(s)) + L_u(s, x, v, U(s)) (u - U(s))`
/// with `U` the reference value curve. `L~` is affine in `u`, coincides with
/// `L` along the reference trajectory, and dominates `L` pointwise when the
/// parent is concave in `u`, so minimizing through it bounds the true value
/// from above while keeping the reference curve's value unchanged.
pub fn linearized_model(parent: &LagrangianModel, frozen: &ValueTrajectory) -> LagrangianModel {
    let parent = parent.clone();
    let times: Arc<[f64]> = frozen.times().to_vec().into();
    let values: Arc<[f64]> = frozen.values().to_vec().into();
    // U'(s) = L(s, xi, xi', U) along the reference; only needed for the time
    // partial of the derived model, not for its value.
    let mut uprime = vec![0.0; values.len()];
    for_each_dense_sample(frozen, |idx, s, x, v| {
        uprime[idx] = parent.eval(s, x, v, values[idx]);
    });
    let uprime: Arc<[f64]> = uprime.into();

    let domain = *parent.domain();
    let constants = *parent.constants();
    let fd_xv = parent.lu_depends_on_xv();
    let parent_time_dependent = parent.time_dependent();

    let value = {
        let parent = parent.clone();
        let times = Arc::clone(&times);
        let values = Arc::clone(&values);
        move |s: f64, x: Coord, v: Coord, u: f64| {
            let big_u = lerp_on_grid(&times, &values, s);
            let p = parent.full(s, x, v, big_u);
            p.l + p.l_u * (u - big_u)
        }
    };
    let full = {
        let parent = parent.clone();
        let times = Arc::clone(&times);
        let values = Arc::clone(&values);
        let uprime = Arc::clone(&uprime);
        move |s: f64, x: Coord, v: Coord, u: f64| {
            let big_u = lerp_on_grid(&times, &values, s);
            let du = u - big_u;
            let p = parent.full(s, x, v, big_u);
            let mut l_x = p.l_x;
            let mut l_v = p.l_v;
            if fd_xv {
                // Cross partials of L_u in (x, v) by central differences.
                for a in 0..domain.dim() {
                    let hx = 1e-6 * (1.0 + x[a].abs());
                    let (mut xp, mut xm) = (x, x);
                    xp[a] += hx;
                    xm[a] -= hx;
                    l_x[a] += du * (parent.l_u(s, xp, v, big_u) - parent.l_u(s, xm, v, big_u)) / (2.0 * hx);
                    let hv = 1e-6 * (1.0 + v[a].abs());
                    let (mut vp, mut vm) = (v, v);
                    vp[a] += hv;
                    vm[a] -= hv;
                    l_v[a] += du * (parent.l_u(s, x, vp, big_u) - parent.l_u(s, x, vm, big_u)) / (2.0 * hv);
                }
            }
            let hu = 1e-6 * (1.0 + big_u.abs());
            let l_uu = (parent.l_u(s, x, v, big_u + hu) - parent.l_u(s, x, v, big_u - hu)) / (2.0 * hu);
            let l_ut = if parent_time_dependent {
                let hs = 1e-6 * (1.0 + s.abs());
                (parent.l_u(s + hs, x, v, big_u) - parent.l_u(s - hs, x, v, big_u)) / (2.0 * hs)
            } else {
                0.0
            };
            let up = lerp_on_grid(&times, &uprime, s);
            LPoint {
                l: p.l + p.l_u * du,
                l_u: p.l_u,
                l_x,
                l_v,
                l_t: p.l_t + du * (l_ut + l_uu * up),
            }
        }
    };
    LagrangianModel::fused_parts(
        domain,
        value,
        full,
        // Affine in u: concavity holds (weakly); convexity/growth in v and the
        // L_u bound carry over from the parent at the frozen argument. The
        // derived model depends on time through U(s) even when the parent does
        // not.
        parent.declared().with(crate::lagrangian::Condition::L5),
        constants,
        crate::lagrangian::ModelFlags { time_dependent: true, lu_depends_on_xv: fd_xv },
    )
}
