//! Monotone finite-difference cross-check for the variational solvers.
//!
//! Explicit first-order scheme on the periodic grid: central-difference
//! gradient plus per-axis artificial viscosity,
//!
//! `u <- u - dt * [H(t, x, u, Dc u) - sum_a nu_a (u_+ - 2u + u_-)_a / (2 dx_a)]`.
//!
//! The update is monotone in the neighbor values when `nu_a >= |H_{p_a}|`
//! along the run and in the center value when
//! `dt (K + sum_a nu_a / dx_a) <= 1`; [`FdConfig::cfl`] scales the step
//! against that bound. Everything here is deliberately independent of the
//! curve machinery: no optimizer, no value ODE. Agreement with the
//! variational results is evidence for both sides.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lagrangian::{Coord, HamiltonianModel};
use crate::lax_oleinik::GridFunction;

/// Scheme parameters. `viscosity` must dominate `|H_p|` axis by axis over the
/// run for the scheme to be monotone; [`suggest_viscosity`] estimates it.
#[derive(Clone, Copy, Debug)]
pub struct FdConfig {
    /// Fraction of the monotone step bound actually taken. Values above 1
    /// violate the bound; the instability guard is the only protection then.
    pub cfl: f64,
    pub viscosity: [f64; 2],
    /// Stationary marches stop once `sup |u^{n+1} - u^n| / dt` falls below.
    pub settle_tol: f64,
    /// Stationary marches give up beyond this time horizon.
    pub max_settle_time: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { cfl: 0.4, viscosity: [1.0, 1.0], settle_tol: 1e-6, max_settle_time: 50.0 }
    }
}

impl FdConfig {
    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.cfl.is_finite() && self.cfl > 0.0) {
            return Err(Error::invalid("scheme step fraction", format!("cfl = {}", self.cfl)));
        }
        for a in 0..dim {
            if !(self.viscosity[a].is_finite() && self.viscosity[a] > 0.0) {
                return Err(Error::invalid(
                    "scheme viscosity",
                    format!("axis {a}: {}", self.viscosity[a]),
                ));
            }
        }
        if !(self.settle_tol.is_finite() && self.settle_tol > 0.0) {
            return Err(Error::invalid("settle tolerance", format!("{}", self.settle_tol)));
        }
        if !(self.max_settle_time.is_finite() && self.max_settle_time > 0.0) {
            return Err(Error::invalid("settle horizon", format!("{}", self.max_settle_time)));
        }
        Ok(())
    }
}

/// Outcome of a finite-difference run.
#[derive(Clone, Debug)]
pub struct FdResult {
    pub u: GridFunction,
    pub steps: usize,
    pub dt: f64,
    /// Stationary runs only: final `sup |u^{n+1} - u^n| / dt`.
    pub settle_rate: Option<f64>,
}

/// One explicit update at a single node; the whole scheme is sweeps of this.
/// Public so the monotonicity of the building block can be probed directly.
pub fn lf_node_update(
    model: &HamiltonianModel,
    t: f64,
    x: Coord,
    u: f64,
    u_plus: [f64; 2],
    u_minus: [f64; 2],
    dx: [f64; 2],
    nu: [f64; 2],
    dt: f64,
) -> f64 {
    let dim = model.domain().dim();
    let mut p = [0.0; 2];
    let mut visc = 0.0;
    for a in 0..dim {
        p[a] = (u_plus[a] - u_minus[a]) / (2.0 * dx[a]);
        visc += nu[a] * (u_plus[a] - 2.0 * u + u_minus[a]) / (2.0 * dx[a]);
    }
    u - dt * (model.eval(t, x, p, u) - visc)
}

/// Estimate per-axis viscosity: `1.1 * max |H_{p_a}|` over grid positions and
/// a box of gradients with `|p_a| <= gradient_bound`, at value 0 and time `t`.
pub fn suggest_viscosity(model: &HamiltonianModel, t: f64, gradient_bound: f64) -> [f64; 2] {
    let dom = model.domain();
    let dim = dom.dim();
    let mut nu = [0.0f64; 2];
    let positions = 17;
    let slopes = 9;
    let mut xs = Vec::new();
    for i in 0..positions {
        let mut x = [0.0; 2];
        for a in 0..dim {
            x[a] = dom.period(a) * i as f64 / positions as f64;
        }
        xs.push(x);
        if dim == 2 {
            // Off-diagonal sweep so the two axes are not sampled in lockstep.
            let mut y = x;
            y[1] = dom.period(1) * ((i * 7) % positions) as f64 / positions as f64;
            xs.push(y);
        }
    }
    let grid = |j: usize| -> f64 { gradient_bound * (2.0 * j as f64 / (slopes - 1) as f64 - 1.0) };
    for x in &xs {
        for j1 in 0..slopes {
            let p1 = grid(j1);
            let j2_range = if dim == 2 { 0..slopes } else { 0..1 };
            for j2 in j2_range {
                let p = [p1, if dim == 2 { grid(j2) } else { 0.0 }];
                let hp = model.h_p(t, *x, p, 0.0);
                for a in 0..dim {
                    nu[a] = nu[a].max(hp[a].abs());
                }
            }
        }
    }
    for a in 0..dim {
        nu[a] *= 1.1;
    }
    nu
}

struct SchemeGeometry {
    res: [usize; 2],
    dx: [f64; 2],
    period: [f64; 2],
    dim: usize,
}

fn geometry(model: &HamiltonianModel, res: [usize; 2]) -> SchemeGeometry {
    let dom = model.domain();
    let dim = dom.dim();
    let mut dx = [1.0; 2];
    let mut period = [0.0; 2];
    for a in 0..dim {
        period[a] = dom.period(a);
        dx[a] = period[a] / res[a] as f64;
    }
    SchemeGeometry { res, dx, period, dim }
}

/// Largest monotone step times `cfl`.
fn step_size(model: &HamiltonianModel, geo: &SchemeGeometry, fd: &FdConfig) -> f64 {
    let mut rate = model.constants().k_bound;
    for a in 0..geo.dim {
        rate += fd.viscosity[a] / geo.dx[a];
    }
    fd.cfl / rate
}

fn node_position(geo: &SchemeGeometry, i1: usize, i2: usize) -> Coord {
    let mut x = [0.0; 2];
    x[0] = i1 as f64 * geo.period[0] / geo.res[0] as f64;
    if geo.dim == 2 {
        x[1] = i2 as f64 * geo.period[1] / geo.res[1] as f64;
    }
    x
}

fn sweep(
    model: &HamiltonianModel,
    geo: &SchemeGeometry,
    nu: [f64; 2],
    t: f64,
    dt: f64,
    u: &[f64],
    out: &mut [f64],
) {
    let [n1, n2] = geo.res;
    out.par_chunks_mut(1024).enumerate().for_each(|(ci, chunk)| {
        let base = ci * 1024;
        for (k, slot) in chunk.iter_mut().enumerate() {
            let idx = base + k;
            let i1 = idx / n2;
            let i2 = idx % n2;
            let mut up = [0.0; 2];
            let mut um = [0.0; 2];
            up[0] = u[((i1 + 1) % n1) * n2 + i2];
            um[0] = u[((i1 + n1 - 1) % n1) * n2 + i2];
            if geo.dim == 2 {
                up[1] = u[i1 * n2 + (i2 + 1) % n2];
                um[1] = u[i1 * n2 + (i2 + n2 - 1) % n2];
            }
            *slot = lf_node_update(
                model,
                t,
                node_position(geo, i1, i2),
                u[idx],
                up,
                um,
                geo.dx,
                nu,
                dt,
            );
        }
    });
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `max_x |H(t, x, 0, 0)|`, the forcing constant of the growth envelope.
fn forcing_bound(model: &HamiltonianModel, geo: &SchemeGeometry, t: f64) -> f64 {
    let mut c = 0.0f64;
    for i1 in 0..geo.res[0] {
        for i2 in 0..geo.res[1] {
            c = c.max(model.eval(t, node_position(geo, i1, i2), [0.0; 2], 0.0).abs());
        }
    }
    c
}

enum MarchGoal {
    /// Fixed number of steps of the given size.
    Horizon { steps: usize, dt: f64 },
    /// March until the update rate falls below the tolerance.
    Settle { tol: f64, max_steps: usize, dt: f64 },
}

fn march(
    model: &HamiltonianModel,
    phi: &GridFunction,
    t0: f64,
    fd: &FdConfig,
    goal: MarchGoal,
) -> Result<FdResult> {
    let geo = geometry(model, phi.resolution());
    let nu = fd.viscosity;
    let (max_steps, dt, settle_tol) = match goal {
        MarchGoal::Horizon { steps, dt } => (steps, dt, None),
        MarchGoal::Settle { tol, max_steps, dt } => (max_steps, dt, Some(tol)),
    };
    let k_bound = model.constants().k_bound;
    let autonomous_forcing =
        if model.time_dependent() { None } else { Some(forcing_bound(model, &geo, t0)) };

    let mut u = phi.values().to_vec();
    let mut next = vec![0.0; u.len()];
    // Growth envelope of the exact solution; the monotone scheme obeys the
    // same comparison argument, so a clear breach means instability.
    let mut envelope = sup_norm(&u);
    let mut rate = f64::INFINITY;
    let mut steps_taken = 0;
    for step in 0..max_steps {
        let t = t0 + step as f64 * dt;
        sweep(model, &geo, nu, t, dt, &u, &mut next);
        steps_taken = step + 1;

        let c = autonomous_forcing.unwrap_or_else(|| forcing_bound(model, &geo, t));
        envelope = (k_bound * dt).exp() * (envelope + dt * c);
        let norm = sup_norm(&next);
        let allowed = 2.0 * envelope + 1.0;
        if !norm.is_finite() || norm > allowed {
            return Err(Error::FdInstability { time: t + dt, norm, envelope: allowed });
        }

        rate = next
            .iter()
            .zip(&u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / dt;
        std::mem::swap(&mut u, &mut next);
        if settle_tol.is_some_and(|tol| rate <= tol) {
            let grid = GridFunction::from_values(*phi.domain(), geo.res, u)?;
            return Ok(FdResult { u: grid, steps: steps_taken, dt, settle_rate: Some(rate) });
        }
    }
    if settle_tol.is_some() {
        return Err(Error::FdNoSettle { rate, steps: steps_taken });
    }
    let grid = GridFunction::from_values(*phi.domain(), geo.res, u)?;
    Ok(FdResult { u: grid, steps: steps_taken, dt, settle_rate: None })
}

/// Evolve `phi` from `t0` to `t_end`. The step count is chosen so the march
/// lands on `t_end` exactly while staying within the monotone bound.
pub fn fd_evolve(
    model: &HamiltonianModel,
    phi: &GridFunction,
    t0: f64,
    t_end: f64,
    fd: &FdConfig,
) -> Result<FdResult> {
    if model.domain() != phi.domain() {
        return Err(Error::invalid(
            "scheme input",
            "grid domain differs from model domain".to_string(),
        ));
    }
    fd.validate(model.domain().dim())?;
    if !(t_end.is_finite() && t_end > t0) {
        return Err(Error::invalid("scheme times", format!("[{t0}, {t_end}] is not an interval")));
    }
    let geo = geometry(model, phi.resolution());
    let bound = step_size(model, &geo, fd);
    let steps = ((t_end - t0) / bound).ceil().max(1.0) as usize;
    let dt = (t_end - t0) / steps as f64;
    march(model, phi, t0, fd, MarchGoal::Horizon { steps, dt })
}

/// March from `u = 0` until the update rate settles below `settle_tol`,
/// approximating the stationary solution. Fails with [`Error::FdNoSettle`]
/// if the rate has not settled within `max_settle_time`.
pub fn fd_stationary(
    model: &HamiltonianModel,
    resolution: [usize; 2],
    fd: &FdConfig,
) -> Result<FdResult> {
    if model.time_dependent() {
        return Err(Error::invalid(
            "scheme input",
            "model depends on time; only autonomous models have stationary solutions".to_string(),
        ));
    }
    fd.validate(model.domain().dim())?;
    let zero = GridFunction::constant(*model.domain(), resolution, 0.0)?;
    let geo = geometry(model, resolution);
    let dt = step_size(model, &geo, fd);
    let max_steps = (fd.max_settle_time / dt).ceil().max(1.0) as usize;
    march(model, &zero, 0.0, fd, MarchGoal::Settle { tol: fd.settle_tol, max_steps, dt })
}
