//! Model bundles `L(s, x, v, u)` on flat periodic domains, their convex-dual
//! Hamiltonians, and a sampling-based checker for the structural conditions the
//! solvers rely on.
//!
//! A model is an immutable, thread-safe bundle of evaluation closures plus
//! declared structural properties:
//!
//! * (L1) strict convexity of `v -> L(s, x, v, u)`,
//! * (L2) superlinear growth `L(s, x, v, 0) >= theta0(|v|) - c0` with
//!   `theta0(r) = a r^q`, `a > 0`, `q > 1`,
//! * (L3) a uniform bound `|L_u| <= K`,
//! * (L4) `|L_t| <= C1 + C2 L`,
//! * (L5) concavity of `u -> L(s, x, v, u)`,
//! * (L6) strict monotonicity `L_u < 0`.
//!
//! Declarations are claims; [`check_conditions`] probes all six numerically and
//! reports them next to what the model declares.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Position, velocity, or covector on a domain of dimension <= 2.
/// Only the first [`DomainDescriptor::dim`] components are meaningful.
pub type Coord = [f64; 2];

pub const MAX_DIM: usize = 2;

/// Guard threshold for the value ODE; solutions beyond it are treated as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Flat torus `R^d / (P_1 Z x ... x P_d Z)`, `d` in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainDescriptor {
    dim: usize,
    period: [f64; 2],
}

impl DomainDescriptor {
    pub fn new(dim: usize, period: [f64; 2]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("domain dimension", format!("{dim} not in {{1, 2}}")));
        }
        for &p in &period[..dim] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid("domain period", format!("{p} must be finite and > 0")));
            }
        }
        let mut period = period;
        if dim == 1 {
            period[1] = 1.0; // unused axis, kept harmless
        }
        Ok(Self { dim, period })
    }

    pub fn line(period: f64) -> Result<Self> {
        Self::new(1, [period, 1.0])
    }

    pub fn square(p1: f64, p2: f64) -> Result<Self> {
        Self::new(2, [p1, p2])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.period[axis]
    }

    /// Wrap into the fundamental domain `[0, P_a)` per axis. Exact for inputs
    /// that are exact multiples away from their representative (fmod is exact).
    pub fn wrap(&self, x: Coord) -> Coord {
        let mut w = x;
        for a in 0..self.dim {
            w[a] = x[a].rem_euclid(self.period[a]);
            if w[a] == self.period[a] {
                w[a] = 0.0; // rem_euclid can round up to the period itself
            }
        }
        w
    }

    /// Minimal signed displacement representative, per axis in `(-P/2, P/2]`.
    pub fn wrap_signed(&self, d: Coord) -> Coord {
        let mut w = d;
        for a in 0..self.dim {
            let p = self.period[a];
            let m = d[a].rem_euclid(p);
            w[a] = if m > 0.5 * p { m - p } else { m };
        }
        w
    }

    /// Torus metric: Euclidean length of the componentwise-minimal displacement.
    pub fn distance(&self, x: Coord, y: Coord) -> f64 {
        let d = self.wrap_signed([y[0] - x[0], y[1] - x[1]]);
        let mut s = 0.0;
        for a in 0..self.dim {
            s += d[a] * d[a];
        }
        s.sqrt()
    }
}

/// Finite trigonometric polynomial `sum_j a_j cos(2 pi k_j . (x / P) + phi_j)`
/// with integer wave vectors; exactly periodic by construction. Doubles as the
/// potential term of built-in models and as closed-form grid data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    terms: Vec<TrigTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub wave: [i32; 2],
    pub phase: f64,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    /// Rows are `[amplitude, k, phase]` in 1D and `[amplitude, k1, k2, phase]` in 2D.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let want = dim + 2;
        let mut terms = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != want {
                return Err(Error::invalid(
                    "potential term",
                    format!("row {i} has {} entries, expected {want}", row.len()),
                ));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("potential term", format!("row {i} has a non-finite entry")));
            }
            let mut wave = [0i32; 2];
            for a in 0..dim {
                let k = row[1 + a];
                if k.fract() != 0.0 || k.abs() > i32::MAX as f64 {
                    return Err(Error::invalid(
                        "potential term",
                        format!("row {i} wave number {k} is not a small integer"),
                    ));
                }
                wave[a] = k as i32;
            }
            terms.push(TrigTerm { amplitude: row[0], wave, phase: row[want - 1] });
        }
        Ok(Self { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound for `sup |V|`.
    pub fn amplitude_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    pub fn eval(&self, domain: &DomainDescriptor, x: Coord) -> f64 {
        self.eval_with_grad(domain, x).0
    }

    pub fn eval_with_grad(&self, domain: &DomainDescriptor, x: Coord) -> (f64, Coord) {
        let xw = domain.wrap(x);
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for t in &self.terms {
            let mut theta = t.phase;
            for a in 0..domain.dim() {
                theta += TAU * t.wave[a] as f64 * (xw[a] / domain.period(a));
            }
            let (sin, cos) = theta.sin_cos();
            v += t.amplitude * cos;
            for a in 0..domain.dim() {
                g[a] -= t.amplitude * sin * TAU * t.wave[a] as f64 / domain.period(a);
            }
        }
        (v, g)
    }
}

/// Positive-definite quadratic kinetic form `v -> v^T A v / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinetic {
    a: [[f64; 2]; 2],
}

impl Kinetic {
    pub fn identity() -> Self {
        Self { a: [[1.0, 0.0], [0.0, 1.0]] }
    }

    /// Coefficients `[a]` in 1D, `[a11, a12, a22]` in 2D; must be positive definite.
    pub fn from_coeffs(dim: usize, coeffs: &[f64]) -> Result<Self> {
        let a = match (dim, coeffs) {
            (1, [a]) => [[*a, 0.0], [0.0, 1.0]],
            (2, [a11, a12, a22]) => [[*a11, *a12], [*a12, *a22]],
            _ => {
                return Err(Error::invalid(
                    "kinetic coefficients",
                    format!("expected {} entries for dimension {dim}, got {}", if dim == 1 { 1 } else { 3 }, coeffs.len()),
                ))
            }
        };
        let k = Self { a };
        if !(k.min_eigenvalue(dim) > 0.0) {
            return Err(Error::invalid("kinetic coefficients", "matrix is not positive definite".to_string()));
        }
        Ok(k)
    }

    pub fn eval(&self, v: Coord, dim: usize) -> f64 {
        let g = self.grad(v, dim);
        0.5 * (g[0] * v[0] + g[1] * v[1])
    }

    pub fn grad(&self, v: Coord, dim: usize) -> Coord {
        match dim {
            1 => [self.a[0][0] * v[0], 0.0],
            _ => [
                self.a[0][0] * v[0] + self.a[0][1] * v[1],
                self.a[1][0] * v[0] + self.a[1][1] * v[1],
            ],
        }
    }

    pub fn min_eigenvalue(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.a[0][0]
        } else {
            let (p, q, r) = (self.a[0][0], self.a[0][1], self.a[1][1]);
            0.5 * (p + r - ((p - r).powi(2) + 4.0 * q * q).sqrt())
        }
    }
}

/// Base Tonelli data `L0(x, v) = kinetic(v) - V(x)` for the built-in families.
#[derive(Clone, Debug)]
pub struct TonelliSpec {
    pub domain: DomainDescriptor,
    pub kinetic: Kinetic,
    pub potential: TrigPoly,
}

impl TonelliSpec {
    pub fn mechanical(domain: DomainDescriptor, potential: TrigPoly) -> Self {
        Self { domain, kinetic: Kinetic::identity(), potential }
    }

    pub fn free(domain: DomainDescriptor) -> Self {
        Self::mechanical(domain, TrigPoly::zero())
    }
}

/// The six structural conditions; see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
}

impl Condition {
    pub const ALL: [Condition; 6] =
        [Condition::L1, Condition::L2, Condition::L3, Condition::L4, Condition::L5, Condition::L6];

    fn bit(self) -> u8 {
        match self {
            Condition::L1 => 1,
            Condition::L2 => 2,
            Condition::L3 => 4,
            Condition::L4 => 8,
            Condition::L5 => 16,
            Condition::L6 => 32,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Set of declared conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Conditions {
    bits: u8,
}

impl Conditions {
    pub fn none() -> Self {
        Self { bits: 0 }
    }

    pub fn basic() -> Self {
        Self::none()
            .with(Condition::L1)
            .with(Condition::L2)
            .with(Condition::L3)
            .with(Condition::L4)
            .with(Condition::L5)
    }

    pub fn with(self, c: Condition) -> Self {
        Self { bits: self.bits | c.bit() }
    }

    pub fn declares(&self, c: Condition) -> bool {
        self.bits & c.bit() != 0
    }
}

/// Constants attached to a model: the `|L_u|` bound `K`, the superlinearity data
/// `theta0(r) = a r^q` and offset `c0`, and the (L4) constants.
#[derive(Clone, Copy, Debug)]
pub struct ModelConstants {
    pub k_bound: f64,
    pub c0: f64,
    pub theta0_coeff: f64,
    pub theta0_power: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ModelConstants {
    pub fn theta0(&self, r: f64) -> f64 {
        self.theta0_coeff * r.powf(self.theta0_power)
    }
}

/// Which built-in family a model came from, if any. Used by formula
/// specializations that need the discount rate in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `L0(x, v) - lambda u`
    Discounted { lambda: f64 },
    /// `L0(x, v) - lambda u - eps sqrt(1 + u^2)`, `lambda > eps >= 0`
    NonlinearConcave { lambda: f64, eps: f64 },
    /// `e^(lambda t) L0(x, v)`
    TimeScaled { lambda: f64 },
    Custom,
}

/// Extra structure flags a model asserts about itself.
#[derive(Clone, Copy, Debug)]
pub struct ModelFlags {
    /// False when `L` ignores `s`; stationary solvers require it.
    pub time_dependent: bool,
    /// True when `L_u` may depend on `(x, v)`; forces finite differencing of the
    /// cross partials in the frozen-value linearization.
    pub lu_depends_on_xv: bool,
}

/// Value and first partials of `L` at one point.
#[derive(Clone, Copy, Debug)]
pub struct LPoint {
    pub l: f64,
    pub l_u: f64,
    pub l_x: Coord,
    pub l_v: Coord,
    pub l_t: f64,
}

type ValueFn = dyn Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync;
type FullFn = dyn Fn(f64, Coord, Coord, f64) -> LPoint + Send + Sync;

/// Immutable evaluatable bundle for a Lagrangian `L(s, x, v, u)`.
#[derive(Clone)]
pub struct LagrangianModel {
    domain: DomainDescriptor,
    value: Arc<ValueFn>,
    full: Arc<FullFn>,
    declared: Conditions,
    constants: ModelConstants,
    family: Family,
    flags: ModelFlags,
}

impl fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianModel")
            .field("domain", &self.domain)
            .field("declared", &self.declared)
            .field("constants", &self.constants)
            .field("family", &self.family)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

impl LagrangianModel {
    /// Assemble a model from separate partial-derivative closures.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        domain: DomainDescriptor,
        value: impl Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync + 'static,
        l_u: impl Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync + 'static,
        l_x: impl Fn(f64, Coord, Coord, f64) -> Coord + Send + Sync + 'static,
        l_v: impl Fn(f64, Coord, Coord, f64) -> Coord + Send + Sync + 'static,
        l_t: impl Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync + 'static,
        declared: Conditions,
        constants: ModelConstants,
        flags: ModelFlags,
    ) -> Self {
        let value = Arc::new(value);
        let value_for_full = Arc::clone(&value);
        let full = move |s: f64, x: Coord, v: Coord, u: f64| LPoint {
            l: value_for_full(s, x, v, u),
            l_u: l_u(s, x, v, u),
            l_x: l_x(s, x, v, u),
            l_v: l_v(s, x, v, u),
            l_t: l_t(s, x, v, u),
        };
        Self {
            domain,
            value,
            full: Arc::new(full),
            declared,
            constants,
            family: Family::Custom,
            flags,
        }
    }

    fn fused(
        domain: DomainDescriptor,
        value: impl Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync + 'static,
        full: impl Fn(f64, Coord, Coord, f64) -> LPoint + Send + Sync + 'static,
        declared: Conditions,
        constants: ModelConstants,
        family: Family,
        flags: ModelFlags,
    ) -> Self {
        Self { domain, value: Arc::new(value), full: Arc::new(full), declared, constants, family, flags }
    }

    /// Derived-model constructor for in-crate transformations.
    pub(crate) fn fused_parts(
        domain: DomainDescriptor,
        value: impl Fn(f64, Coord, Coord, f64) -> f64 + Send + Sync + 'static,
        full: impl Fn(f64, Coord, Coord, f64) -> LPoint + Send + Sync + 'static,
        declared: Conditions,
        constants: ModelConstants,
        flags: ModelFlags,
    ) -> Self {
        Self::fused(domain, value, full, declared, constants, Family::Custom, flags)
    }

    pub fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }

    pub fn eval(&self, s: f64, x: Coord, v: Coord, u: f64) -> f64 {
        (self.value)(s, x, v, u)
    }

    /// Value and all first partials in one call; cheaper than separate queries.
    pub fn full(&self, s: f64, x: Coord, v: Coord, u: f64) -> LPoint {
        (self.full)(s, x, v, u)
    }

    pub fn l_u(&self, s: f64, x: Coord, v: Coord, u: f64) -> f64 {
        self.full(s, x, v, u).l_u
    }

    pub fn l_x(&self, s: f64, x: Coord, v: Coord, u: f64) -> Coord {
        self.full(s, x, v, u).l_x
    }

    pub fn l_v(&self, s: f64, x: Coord, v: Coord, u: f64) -> Coord {
        self.full(s, x, v, u).l_v
    }

    pub fn l_t(&self, s: f64, x: Coord, v: Coord, u: f64) -> f64 {
        self.full(s, x, v, u).l_t
    }

    pub fn declared(&self) -> Conditions {
        self.declared
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn time_dependent(&self) -> bool {
        self.flags.time_dependent
    }

    pub fn lu_depends_on_xv(&self) -> bool {
        self.flags.lu_depends_on_xv
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::invalid("discount rate", format!("lambda = {lambda} is not finite")));
    }
    Ok(())
}

/// `L(s, x, v, u) = L0(x, v) - lambda u`. Declares (L1)-(L5) always and (L6)
/// exactly when `lambda > 0`; `K = |lambda|`.
pub fn make_discounted(l0: &TonelliSpec, lambda: f64) -> Result<LagrangianModel> {
    check_lambda(lambda)?;
    let spec = l0.clone();
    let dom = spec.domain;
    let dim = dom.dim();
    let value = {
        let spec = spec.clone();
        move |_s: f64, x: Coord, v: Coord, u: f64| {
            spec.kinetic.eval(v, dim) - spec.potential.eval(&dom, x) - lambda * u
        }
    };
    let full = {
        let spec = spec.clone();
        move |_s: f64, x: Coord, v: Coord, u: f64| {
            let (pot, dpot) = spec.potential.eval_with_grad(&dom, x);
            LPoint {
                l: spec.kinetic.eval(v, dim) - pot - lambda * u,
                l_u: -lambda,
                l_x: [-dpot[0], -dpot[1]],
                l_v: spec.kinetic.grad(v, dim),
                l_t: 0.0,
            }
        }
    };
    let mut declared = Conditions::basic();
    if lambda > 0.0 {
        declared = declared.with(Condition::L6);
    }
    let constants = ModelConstants {
        k_bound: lambda.abs(),
        c0: spec.potential.amplitude_sum(),
        theta0_coeff: 0.5 * spec.kinetic.min_eigenvalue(dim),
        theta0_power: 2.0,
        c1: 1.0,
        c2: 0.0,
    };
    Ok(LagrangianModel::fused(
        dom,
        value,
        full,
        declared,
        constants,
        Family::Discounted { lambda },
        ModelFlags { time_dependent: false, lu_depends_on_xv: false },
    ))
}

/// `L(s, x, v, u) = L0(x, v) - lambda u - eps sqrt(1 + u^2)` with
/// `lambda > eps >= 0`, so `L_u` stays in `[-lambda - eps, -lambda + eps]` and
/// (L6) holds with margin `delta = lambda - eps`; `K = lambda + eps`.
pub fn make_nonlinear_concave(l0: &TonelliSpec, lambda: f64, eps: f64) -> Result<LagrangianModel> {
    check_lambda(lambda)?;
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::invalid("concave term weight", format!("eps = {eps} must be finite and >= 0")));
    }
    if lambda <= eps {
        return Err(Error::invalid(
            "discount rate",
            format!("require lambda > eps >= 0, got lambda = {lambda}, eps = {eps}"),
        ));
    }
    let spec = l0.clone();
    let dom = spec.domain;
    let dim = dom.dim();
    let value = {
        let spec = spec.clone();
        move |_s: f64, x: Coord, v: Coord, u: f64| {
            spec.kinetic.eval(v, dim)
                - spec.potential.eval(&dom, x)
                - lambda * u
                - eps * (1.0 + u * u).sqrt()
        }
    };
    let full = {
        let spec = spec.clone();
        move |_s: f64, x: Coord, v: Coord, u: f64| {
            let (pot, dpot) = spec.potential.eval_with_grad(&dom, x);
            let root = (1.0 + u * u).sqrt();
            LPoint {
                l: spec.kinetic.eval(v, dim) - pot - lambda * u - eps * root,
                l_u: -lambda - eps * u / root,
                l_x: [-dpot[0], -dpot[1]],
                l_v: spec.kinetic.grad(v, dim),
                l_t: 0.0,
            }
        }
    };
    let declared = Conditions::basic().with(Condition::L6);
    let constants = ModelConstants {
        k_bound: lambda + eps,
        c0: spec.potential.amplitude_sum() + eps,
        theta0_coeff: 0.5 * spec.kinetic.min_eigenvalue(dim),
        theta0_power: 2.0,
        c1: 1.0,
        c2: 0.0,
    };
    Ok(LagrangianModel::fused(
        dom,
        value,
        full,
        declared,
        constants,
        Family::NonlinearConcave { lambda, eps },
        ModelFlags { time_dependent: false, lu_depends_on_xv: false },
    ))
}

/// `L(s, x, v) = e^(lambda s) L0(x, v)`: the time-dependent model equivalent to
/// the discounted one under the value rescaling `v = e^(lambda t) u`. Declares
/// only (L1), (L3) with `K = 0`, and (L5); (L2)/(L4) fail on unbounded time
/// ranges, so they are not claimed.
pub fn make_time_scaled(l0: &TonelliSpec, lambda: f64) -> Result<LagrangianModel> {
    check_lambda(lambda)?;
    let spec = l0.clone();
    let dom = spec.domain;
    let dim = dom.dim();
    let value = {
        let spec = spec.clone();
        move |s: f64, x: Coord, v: Coord, _u: f64| {
            (lambda * s).exp() * (spec.kinetic.eval(v, dim) - spec.potential.eval(&dom, x))
        }
    };
    let full = {
        let spec = spec.clone();
        move |s: f64, x: Coord, v: Coord, _u: f64| {
            let weight = (lambda * s).exp();
            let (pot, dpot) = spec.potential.eval_with_grad(&dom, x);
            let l0v = spec.kinetic.eval(v, dim) - pot;
            let grad = spec.kinetic.grad(v, dim);
            LPoint {
                l: weight * l0v,
                l_u: 0.0,
                l_x: [-weight * dpot[0], -weight * dpot[1]],
                l_v: [weight * grad[0], weight * grad[1]],
                l_t: lambda * weight * l0v,
            }
        }
    };
    let declared = Conditions::none().with(Condition::L1).with(Condition::L3).with(Condition::L5);
    let constants = ModelConstants {
        k_bound: 0.0,
        c0: spec.potential.amplitude_sum(),
        theta0_coeff: 0.5 * spec.kinetic.min_eigenvalue(dim),
        theta0_power: 2.0,
        c1: 1.0,
        c2: lambda.abs().max(1.0),
    };
    Ok(LagrangianModel::fused(
        dom,
        value,
        full,
        declared,
        constants,
        Family::TimeScaled { lambda },
        ModelFlags { time_dependent: true, lu_depends_on_xv: false },
    ))
}

/// Value and first partials of `H` at one point.
#[derive(Clone, Copy, Debug)]
pub struct HPoint {
    pub h: f64,
    pub h_p: Coord,
    pub h_x: Coord,
    pub h_u: f64,
    pub h_t: f64,
}

type HFullFn = dyn Fn(f64, Coord, Coord, f64) -> HPoint + Send + Sync;

/// Convex-dual bundle `H(s, x, p, u) = sup_v (p.v - L(s, x, v, u))`.
#[derive(Clone)]
pub struct HamiltonianModel {
    domain: DomainDescriptor,
    full: Arc<HFullFn>,
    constants: ModelConstants,
    time_dependent: bool,
}

impl fmt::Debug for HamiltonianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianModel")
            .field("domain", &self.domain)
            .field("constants", &self.constants)
            .field("time_dependent", &self.time_dependent)
            .finish_non_exhaustive()
    }
}

impl HamiltonianModel {
    pub fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn eval(&self, s: f64, x: Coord, p: Coord, u: f64) -> f64 {
        (self.full)(s, x, p, u).h
    }

    pub fn full(&self, s: f64, x: Coord, p: Coord, u: f64) -> HPoint {
        (self.full)(s, x, p, u)
    }

    pub fn h_p(&self, s: f64, x: Coord, p: Coord, u: f64) -> Coord {
        (self.full)(s, x, p, u).h_p
    }
}

/// Damped Newton for `grad(z) = target` with a finite-difference Jacobian;
/// the workhorse behind both Legendre directions. Returns the solution and the
/// final residual sup-norm.
fn solve_gradient_equation(
    grad: &dyn Fn(Coord) -> Coord,
    target: Coord,
    dim: usize,
    start: Coord,
) -> (Coord, f64) {
    let residual = |z: Coord| -> Coord {
        let g = grad(z);
        [target[0] - g[0], target[1] - g[1]]
    };
    let norm = |r: Coord| -> f64 {
        let mut n: f64 = 0.0;
        for a in 0..dim {
            n = n.max(r[a].abs());
        }
        n
    };
    let mut z = start;
    let mut r = residual(z);
    let mut rn = norm(r);
    let tol = 1e-11 * (1.0 + norm(target));
    for _ in 0..60 {
        if rn < tol {
            break;
        }
        // Finite-difference Jacobian of `grad`, column per axis.
        let mut jac = [[0.0f64; 2]; 2];
        for a in 0..dim {
            let h = 1e-6 * (1.0 + z[a].abs());
            let mut zp = z;
            let mut zm = z;
            zp[a] += h;
            zm[a] -= h;
            let gp = grad(zp);
            let gm = grad(zm);
            for b in 0..dim {
                jac[b][a] = (gp[b] - gm[b]) / (2.0 * h);
            }
        }
        let step = match dim {
            1 => {
                if jac[0][0].abs() < 1e-300 {
                    break;
                }
                [r[0] / jac[0][0], 0.0]
            }
            _ => {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-300 {
                    break;
                }
                [
                    (r[0] * jac[1][1] - r[1] * jac[0][1]) / det,
                    (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
                ]
            }
        };
        // Backtrack until the residual decreases.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let zt = [z[0] + t * step[0], z[1] + t * step[1]];
            let rt = residual(zt);
            let rtn = norm(rt);
            if rtn < rn {
                z = zt;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (z, rn)
}

/// Legendre transform of a strictly convex model: builds the Hamiltonian bundle
/// with `H_p` the maximizing velocity and the remaining partials via the
/// envelope identities. The inner problem is solved by damped Newton; a sampled
/// verification pass rejects models the Newton solver cannot handle.
pub fn legendre_to_hamiltonian(model: &LagrangianModel) -> Result<HamiltonianModel> {
    if !model.declared().declares(Condition::L1) || !model.declared().declares(Condition::L2) {
        return Err(Error::invalid(
            "Legendre transform input",
            "model must declare strict convexity (L1) and superlinearity (L2)".to_string(),
        ));
    }
    let inner = Arc::new(model.clone());
    let dom = *model.domain();
    let dim = dom.dim();
    let solve = move |model: &LagrangianModel, s: f64, x: Coord, p: Coord, u: f64| -> (Coord, f64) {
        let grad = |v: Coord| model.l_v(s, x, v, u);
        solve_gradient_equation(&grad, p, dim, [0.0; 2])
    };

    // Verification pass over a coarse sample box; rejects silently-failing bundles.
    let mut worst = 0.0f64;
    let mut xs = vec![[0.0; 2]];
    for i in 0..4 {
        let mut x = [0.0; 2];
        for a in 0..dim {
            x[a] = dom.period(a) * (i as f64 + 0.37) / 4.0;
        }
        xs.push(x);
    }
    for s in [0.0, 0.7] {
        for x in &xs {
            for pi in -3..=3 {
                for u in [-2.0, 0.0, 2.0] {
                    let p = [pi as f64, if dim == 2 { 0.5 * pi as f64 } else { 0.0 }];
                    let (_, res) = solve(model, s, *x, p, u);
                    worst = worst.max(res);
                }
            }
        }
    }
    if worst > 1e-8 {
        return Err(Error::LegendreNoConvergence { residual: worst });
    }

    let constants = *model.constants();
    let time_dependent = model.time_dependent();
    let full = move |s: f64, x: Coord, p: Coord, u: f64| -> HPoint {
        let (v, _res) = solve(&inner, s, x, p, u);
        let lp = inner.full(s, x, v, u);
        HPoint {
            h: p[0] * v[0] + p[1] * v[1] - lp.l,
            h_p: v,
            h_x: [-lp.l_x[0], -lp.l_x[1]],
            h_u: -lp.l_u,
            h_t: -lp.l_t,
        }
    };
    Ok(HamiltonianModel { domain: dom, full: Arc::new(full), constants, time_dependent })
}

/// Inverse direction: `L(s, x, v, u) = sup_p (p.v - H(s, x, p, u))`. Used to
/// verify that the transform is an involution; the returned bundle reports no
/// declared conditions of its own.
pub fn legendre_to_lagrangian(h: &HamiltonianModel) -> Result<LagrangianModel> {
    let inner = Arc::new(h.clone());
    let dom = *h.domain();
    let dim = dom.dim();
    let constants = *h.constants();
    let time_dependent = h.time_dependent();
    let solve = move |h: &HamiltonianModel, s: f64, x: Coord, v: Coord, u: f64| -> (Coord, f64) {
        let grad = |p: Coord| h.h_p(s, x, p, u);
        solve_gradient_equation(&grad, v, dim, [0.0; 2])
    };
    let value = {
        let inner = Arc::clone(&inner);
        move |s: f64, x: Coord, v: Coord, u: f64| {
            let (p, _) = solve(&inner, s, x, v, u);
            p[0] * v[0] + p[1] * v[1] - inner.eval(s, x, p, u)
        }
    };
    let full = {
        let inner = Arc::clone(&inner);
        move |s: f64, x: Coord, v: Coord, u: f64| {
            let (p, _) = solve(&inner, s, x, v, u);
            let hp = inner.full(s, x, p, u);
            LPoint {
                l: p[0] * v[0] + p[1] * v[1] - hp.h,
                l_u: -hp.h_u,
                l_x: [-hp.h_x[0], -hp.h_x[1]],
                l_v: p,
                l_t: -hp.h_t,
            }
        }
    };
    Ok(LagrangianModel::fused(
        dom,
        value,
        full,
        Conditions::none(),
        constants,
        Family::Custom,
        ModelFlags { time_dependent, lu_depends_on_xv: true },
    ))
}

/// Closed-form Hamiltonian bundle `H = p^T A^{-1} p / 2 + V(x) + lambda u` for
/// the discounted family over a mechanical base. Agrees with
/// [`legendre_to_hamiltonian`] of [`make_discounted`] but needs no inner Newton
/// solve, which matters when a grid scheme evaluates `H` millions of times.
pub fn make_discounted_hamiltonian(l0: &TonelliSpec, lambda: f64) -> Result<HamiltonianModel> {
    let constants = *make_discounted(l0, lambda)?.constants();
    let dom = l0.domain;
    let dim = dom.dim();
    let inv = match dim {
        1 => [[1.0 / l0.kinetic.a[0][0], 0.0], [0.0, 1.0]],
        _ => {
            let [[a11, a12], [_, a22]] = l0.kinetic.a;
            let det = a11 * a22 - a12 * a12;
            [[a22 / det, -a12 / det], [-a12 / det, a11 / det]]
        }
    };
    let potential = l0.potential.clone();
    let full = move |_s: f64, x: Coord, p: Coord, u: f64| -> HPoint {
        let (v_pot, grad_pot) = potential.eval_with_grad(&dom, x);
        let ip = [inv[0][0] * p[0] + inv[0][1] * p[1], inv[1][0] * p[0] + inv[1][1] * p[1]];
        HPoint {
            h: 0.5 * (p[0] * ip[0] + p[1] * ip[1]) + v_pot + lambda * u,
            h_p: ip,
            h_x: grad_pot,
            h_u: lambda,
            h_t: 0.0,
        }
    };
    Ok(HamiltonianModel { domain: dom, full: Arc::new(full), constants, time_dependent: false })
}

/// Sampling box for the condition checker.
#[derive(Clone, Copy, Debug)]
pub struct SampleBox {
    pub s_range: (f64, f64),
    /// Componentwise velocity bound `|v_a| <= v_bound`.
    pub v_bound: f64,
    pub u_range: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { s_range: (0.0, 1.0), v_bound: 10.0, u_range: (-5.0, 5.0) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SamplePoint {
    pub s: f64,
    pub x: Coord,
    pub v: Coord,
    pub u: f64,
}

/// One row of a condition report. `margin >= 0` means the sampled inequality
/// held (with strict positivity required for L6); `worst_sample` locates the
/// minimizing draw.
#[derive(Clone, Copy, Debug)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub declared: bool,
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_sample: Option<SamplePoint>,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn entry(&self, c: Condition) -> &ConditionEntry {
        self.entries.iter().find(|e| e.condition == c).expect("all conditions reported")
    }

    /// True when every declared condition passed its sampling test.
    pub fn declared_ok(&self) -> bool {
        self.entries.iter().all(|e| !e.declared || e.passed)
    }
}

/// Numerically probe all six conditions on random samples from `sample_box`.
/// Convexity and concavity are tested through midpoint inequalities; bounds use
/// the model's declared constants. All six are always probed so that a model
/// that wrongly omits or claims a condition is visible either way.
pub fn check_conditions(
    model: &LagrangianModel,
    samples: usize,
    sample_box: &SampleBox,
    seed: u64,
) -> ConditionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = model.domain();
    let dim = dom.dim();
    let consts = model.constants();
    let slack = 1e-9;

    let mut worst: Vec<(f64, Option<SamplePoint>)> = vec![(f64::INFINITY, None); 6];
    let record = |idx: usize, margin: f64, at: SamplePoint, worst: &mut Vec<(f64, Option<SamplePoint>)>| {
        if margin < worst[idx].0 {
            worst[idx] = (margin, Some(at));
        }
    };

    for _ in 0..samples {
        let s = rng.gen_range(sample_box.s_range.0..=sample_box.s_range.1);
        let mut x = [0.0; 2];
        let mut v = [0.0; 2];
        let mut v2 = [0.0; 2];
        for a in 0..dim {
            x[a] = rng.gen_range(0.0..dom.period(a));
            v[a] = rng.gen_range(-sample_box.v_bound..=sample_box.v_bound);
            v2[a] = rng.gen_range(-sample_box.v_bound..=sample_box.v_bound);
        }
        let u = rng.gen_range(sample_box.u_range.0..=sample_box.u_range.1);
        let u2 = rng.gen_range(sample_box.u_range.0..=sample_box.u_range.1);
        let at = SamplePoint { s, x, v, u };

        // (L1) midpoint convexity in v.
        let vm = [0.5 * (v[0] + v2[0]), 0.5 * (v[1] + v2[1])];
        let m1 = 0.5 * (model.eval(s, x, v, u) + model.eval(s, x, v2, u)) - model.eval(s, x, vm, u);
        record(0, m1, at, &mut worst);

        // (L2) superlinearity at u = 0 against the declared theta0 and c0.
        let speed = {
            let mut n = 0.0;
            for a in 0..dim {
                n += v[a] * v[a];
            }
            f64::sqrt(n)
        };
        let m2 = model.eval(s, x, v, 0.0) - (consts.theta0(speed) - consts.c0);
        record(1, m2, at, &mut worst);

        let point = model.full(s, x, v, u);

        // (L3) |L_u| <= K.
        record(2, consts.k_bound - point.l_u.abs(), at, &mut worst);

        // (L4) |L_t| <= C1 + C2 L.
        record(3, consts.c1 + consts.c2 * point.l - point.l_t.abs(), at, &mut worst);

        // (L5) midpoint concavity in u.
        let um = 0.5 * (u + u2);
        let m5 = model.eval(s, x, v, um) - 0.5 * (model.eval(s, x, v, u) + model.eval(s, x, v, u2));
        record(4, m5, at, &mut worst);

        // (L6) L_u < 0.
        record(5, -point.l_u, at, &mut worst);
    }

    let entries = Condition::ALL
        .iter()
        .enumerate()
        .map(|(i, &condition)| {
            let (margin, sample) = worst[i];
            let passed = if condition == Condition::L6 { margin > 0.0 } else { margin >= -slack };
            ConditionEntry {
                condition,
                declared: model.declared().declares(condition),
                passed,
                worst_margin: margin,
                worst_sample: sample,
            }
        })
        .collect();
    ConditionReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_line() -> DomainDescriptor {
        DomainDescriptor::line(1.0).unwrap()
    }

    fn cos_potential() -> TrigPoly {
        TrigPoly::from_rows(1, &[vec![1.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn discounted_eval_matches_hand_computation() {
        let l0 = TonelliSpec::free(unit_line());
        let m = make_discounted(&l0, 1.0).unwrap();
        // v^2/2 - lambda u at v = 2, u = 5.
        assert_relative_eq!(m.eval(0.0, [0.3, 0.0], [2.0, 0.0], 5.0), -3.0, epsilon = 1e-12);
        assert_eq!(m.l_u(0.0, [0.3, 0.0], [2.0, 0.0], 5.0), -1.0);
    }

    #[test]
    fn discounted_zero_rate_has_constant_zero_lu() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_discounted(&l0, 0.0).unwrap();
        for i in 0..20 {
            let x = [i as f64 * 0.05, 0.0];
            assert_eq!(m.l_u(0.3, x, [1.0, 0.0], i as f64 - 10.0), 0.0);
        }
        assert!(!m.declared().declares(Condition::L6));
        let mh = make_discounted(&l0, 0.5).unwrap();
        assert_eq!(mh.l_u(0.0, [0.1, 0.0], [0.0, 0.0], 3.0), -0.5);
        assert!(mh.declared().declares(Condition::L6));
    }

    #[test]
    fn nonlinear_concave_lu_range_and_validation() {
        let l0 = TonelliSpec::free(unit_line());
        let m = make_nonlinear_concave(&l0, 1.0, 0.5).unwrap();
        assert_relative_eq!(m.l_u(0.0, [0.0; 2], [0.0; 2], 0.0), -1.0, epsilon = 1e-12);
        // u -> +inf pushes L_u to -(lambda + eps).
        assert_relative_eq!(m.l_u(0.0, [0.0; 2], [0.0; 2], 1e8), -1.5, epsilon = 1e-8);
        assert_relative_eq!(m.l_u(0.0, [0.0; 2], [0.0; 2], -1e8), -0.5, epsilon = 1e-8);
        assert_eq!(m.constants().k_bound, 1.5);
        assert!(make_nonlinear_concave(&l0, 0.5, 0.5).is_err());
        assert!(make_nonlinear_concave(&l0, 1.0, -0.1).is_err());
    }

    #[test]
    fn nonlinear_concavity_sampled() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_nonlinear_concave(&l0, 1.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u1 = rng.gen_range(-20.0..20.0);
            let u2 = rng.gen_range(-20.0..20.0);
            let x = [rng.gen_range(0.0..1.0), 0.0];
            let v = [rng.gen_range(-5.0..5.0), 0.0];
            let mid = m.eval(0.0, x, v, 0.5 * (u1 + u2));
            let avg = 0.5 * (m.eval(0.0, x, v, u1) + m.eval(0.0, x, v, u2));
            assert!(mid >= avg - 1e-10, "concavity violated: mid {mid} avg {avg}");
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let models = [
            make_discounted(&l0, 1.0).unwrap(),
            make_nonlinear_concave(&l0, 1.2, 0.4).unwrap(),
            make_time_scaled(&l0, 0.7).unwrap(),
        ];
        let h = 1e-5;
        let rel = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in &models {
            for _ in 0..1000 {
                let s = rng.gen_range(0.0..1.0);
                let x = [rng.gen_range(0.0..1.0), 0.0];
                let v = [rng.gen_range(-3.0..3.0), 0.0];
                let u = rng.gen_range(-2.0..2.0);
                let p = m.full(s, x, v, u);
                let du = (m.eval(s, x, v, u + h) - m.eval(s, x, v, u - h)) / (2.0 * h);
                let dx = (m.eval(s, [x[0] + h, 0.0], v, u) - m.eval(s, [x[0] - h, 0.0], v, u)) / (2.0 * h);
                let dv = (m.eval(s, x, [v[0] + h, 0.0], u) - m.eval(s, x, [v[0] - h, 0.0], u)) / (2.0 * h);
                let dt = (m.eval(s + h, x, v, u) - m.eval(s - h, x, v, u)) / (2.0 * h);
                let scale = 1.0 + p.l.abs();
                assert!((p.l_u - du).abs() <= rel * (1.0 + du.abs()).max(scale), "L_u fd mismatch");
                assert!((p.l_x[0] - dx).abs() <= rel * (1.0 + dx.abs()).max(scale), "L_x fd mismatch");
                assert!((p.l_v[0] - dv).abs() <= rel * (1.0 + dv.abs()).max(scale), "L_v fd mismatch");
                assert!((p.l_t - dt).abs() <= rel * (1.0 + dt.abs()).max(scale), "L_t fd mismatch");
            }
        }
    }

    #[test]
    fn periodicity_is_exact_on_representable_points() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_discounted(&l0, 1.0).unwrap();
        for j in 0..64u32 {
            let x = j as f64 / 64.0;
            for k in [-3.0, -1.0, 1.0, 2.0] {
                let a = m.eval(0.2, [x, 0.0], [1.3, 0.0], 0.7);
                let b = m.eval(0.2, [x + k, 0.0], [1.3, 0.0], 0.7);
                assert_eq!(a, b, "x = {x}, k = {k}");
            }
        }
    }

    #[test]
    fn torus_metric_axioms() {
        let dom = DomainDescriptor::square(1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let q = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let r = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let dpq = dom.distance(p, q);
            assert!(dpq >= 0.0);
            assert_relative_eq!(dpq, dom.distance(q, p), epsilon = 1e-12);
            assert!(dom.distance(p, r) <= dpq + dom.distance(q, r) + 1e-12);
        }
        // Winding image beats the naive difference.
        assert_relative_eq!(dom.distance([0.05, 0.0], [0.95, 0.0]), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn legendre_mechanical_closed_form() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_discounted(&l0, 1.0).unwrap();
        let h = legendre_to_hamiltonian(&m).unwrap();
        // H(x, p, u) = p^2/2 + V(x) + lambda u; V(0.25) = cos(pi/2) = 0.
        let got = h.eval(0.0, [0.25, 0.0], [1.5, 0.0], 2.0);
        assert_relative_eq!(got, 3.125, epsilon = 1e-8);
        let hp = h.h_p(0.0, [0.25, 0.0], [1.5, 0.0], 2.0);
        assert_relative_eq!(hp[0], 1.5, epsilon = 1e-8);
    }

    #[test]
    fn legendre_is_an_involution() {
        let dom = unit_line();
        let l0 = TonelliSpec {
            domain: dom,
            kinetic: Kinetic::from_coeffs(1, &[1.7]).unwrap(),
            potential: cos_potential(),
        };
        let m = make_nonlinear_concave(&l0, 1.0, 0.3).unwrap();
        let h = legendre_to_hamiltonian(&m).unwrap();
        let back = legendre_to_lagrangian(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s = rng.gen_range(0.0..1.0);
            let x = [rng.gen_range(0.0..1.0), 0.0];
            let v = [rng.gen_range(-3.0..3.0), 0.0];
            let u = rng.gen_range(-2.0..2.0);
            let a = m.eval(s, x, v, u);
            let b = back.eval(s, x, v, u);
            assert!((a - b).abs() < 1e-8, "involution broke: {a} vs {b}");
        }
    }

    #[test]
    fn fenchel_young_inequality_sampled() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_discounted(&l0, 1.0).unwrap();
        let h = legendre_to_hamiltonian(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x = [rng.gen_range(0.0..1.0), 0.0];
            let v = [rng.gen_range(-4.0..4.0), 0.0];
            let p = [rng.gen_range(-4.0..4.0), 0.0];
            let u = rng.gen_range(-2.0..2.0);
            let gap = m.eval(0.0, x, v, u) + h.eval(0.0, x, p, u) - p[0] * v[0];
            assert!(gap >= -1e-7, "Fenchel-Young violated by {gap}");
        }
        // Equality at the dual pair v = H_p(p).
        let p = [1.1, 0.0];
        let x = [0.3, 0.0];
        let v = h.h_p(0.0, x, p, 0.5);
        let gap = m.eval(0.0, x, v, 0.5) + h.eval(0.0, x, p, 0.5) - p[0] * v[0];
        assert!(gap.abs() < 1e-7);
    }

    #[test]
    fn condition_checker_flags_zero_rate_monotonicity() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let sample_box = SampleBox::default();

        let good = make_discounted(&l0, 1.0).unwrap();
        let report = check_conditions(&good, 1000, &sample_box, 42);
        assert!(report.declared_ok());
        assert!(report.entry(Condition::L6).passed);

        let degenerate = make_discounted(&l0, 0.0).unwrap();
        let report = check_conditions(&degenerate, 1000, &sample_box, 42);
        assert!(report.declared_ok(), "L6 is not declared at lambda = 0");
        let l6 = report.entry(Condition::L6);
        assert!(!l6.declared);
        assert!(!l6.passed, "L_u = 0 must fail the strict test");
        for c in [Condition::L1, Condition::L2, Condition::L3, Condition::L4, Condition::L5] {
            assert!(report.entry(c).passed, "{c} should pass");
        }
    }

    #[test]
    fn nonlinear_all_six_pass() {
        let l0 = TonelliSpec::mechanical(unit_line(), cos_potential());
        let m = make_nonlinear_concave(&l0, 1.0, 0.25).unwrap();
        let report = check_conditions(&m, 1000, &SampleBox::default(), 9);
        for e in &report.entries {
            assert!(e.passed, "{} failed with margin {}", e.condition, e.worst_margin);
        }
    }

    #[test]
    fn quadratic_kinetic_form_validation() {
        assert!(Kinetic::from_coeffs(1, &[0.0]).is_err());
        assert!(Kinetic::from_coeffs(2, &[1.0, 2.0, 1.0]).is_err()); // indefinite
        let k = Kinetic::from_coeffs(2, &[2.0, 0.5, 1.0]).unwrap();
        assert_relative_eq!(k.eval([1.0, 2.0], 2), 0.5 * (2.0 + 2.0 * 0.5 * 2.0 + 4.0), epsilon = 1e-12);
        assert!(k.min_eigenvalue(2) > 0.0);
    }

    #[test]
    fn domain_validation() {
        assert!(DomainDescriptor::new(0, [1.0, 1.0]).is_err());
        assert!(DomainDescriptor::new(3, [1.0, 1.0]).is_err());
        assert!(DomainDescriptor::line(-1.0).is_err());
        assert!(DomainDescriptor::line(f64::NAN).is_err());
    }
}
