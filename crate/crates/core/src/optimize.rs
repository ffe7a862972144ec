//! Dense BFGS with Armijo backtracking, the inner engine of the variational
//! solvers. Objective failures (diverged value dynamics, invalid geometry) are
//! treated as rejected points rather than fatal errors so the line search can
//! back away from them.

use crate::error::Result;

pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&mut self, z: &[f64]) -> Result<f64>;
    /// Value plus gradient; `grad` has length `dim()`.
    fn value_grad(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub z: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct InverseHessian {
    d: usize,
    h: Vec<f64>,
}

impl InverseHessian {
    fn identity(d: usize) -> Self {
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
        Self { d, h }
    }

    fn reset(&mut self) {
        self.h.fill(0.0);
        for i in 0..self.d {
            self.h[i * self.d + i] = 1.0;
        }
    }

    fn scale(&mut self, c: f64) {
        for v in &mut self.h {
            *v *= c;
        }
    }

    fn mul(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.d {
            out[i] = dot(&self.h[i * self.d..(i + 1) * self.d], v);
        }
    }

    /// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T.
    fn bfgs_update(&mut self, s: &[f64], y: &[f64], rho: f64, hy: &[f64]) {
        let yhy = dot(y, hy);
        let c = rho * rho * yhy + rho;
        for i in 0..self.d {
            for j in 0..self.d {
                self.h[i * self.d + j] +=
                    -rho * (s[i] * hy[j] + hy[i] * s[j]) + c * s[i] * s[j];
            }
        }
        if self.h.iter().any(|v| !v.is_finite()) {
            self.reset();
        }
    }
}

/// Minimize `obj` from `z0`. Returns an error only if the very first
/// evaluation fails; afterwards failing evaluations are treated as +infinity.
pub fn minimize(obj: &mut dyn Objective, z0: &[f64], opts: &BfgsOptions) -> Result<BfgsOutcome> {
    let d = obj.dim();
    debug_assert_eq!(z0.len(), d);
    if d == 0 {
        let value = obj.value(z0)?;
        return Ok(BfgsOutcome { z: Vec::new(), value, grad_norm: 0.0, iterations: 0, converged: true });
    }

    let mut z = z0.to_vec();
    let mut g = vec![0.0; d];
    let mut fz = obj.value_grad(&z, &mut g)?;
    let mut hmat = InverseHessian::identity(d);
    let mut first_update = true;
    let mut iterations = 0;
    let mut converged = sup_norm(&g) < opts.grad_tol;

    let mut p = vec![0.0; d];
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        hmat.mul(&g, &mut p);
        for v in &mut p {
            *v = -*v;
        }
        let mut gp = dot(&g, &p);
        let mut steepest = false;
        if !(gp < 0.0) {
            // Curvature information went bad; restart from steepest descent.
            hmat.reset();
            first_update = true;
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi = -gi;
            }
            gp = -dot(&g, &g);
            steepest = true;
            if gp == 0.0 {
                converged = true;
                break;
            }
        }

        let mut t = 1.0;
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        for _ in 0..40 {
            let zt: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            if let Ok(ft) = obj.value(&zt) {
                if ft.is_finite() && ft <= fz + 1e-4 * t * gp {
                    accepted = Some((zt, ft));
                    break;
                }
            }
            t *= 0.5;
            if t * sup_norm(&p) < 1e-14 * (1.0 + sup_norm(&z)) {
                break;
            }
        }
        let Some((zt, _)) = accepted else {
            if steepest {
                break; // even steepest descent cannot make progress
            }
            hmat.reset();
            first_update = true;
            continue;
        };

        let mut gt = vec![0.0; d];
        let Ok(ft) = obj.value_grad(&zt, &mut gt) else {
            break;
        };
        let s: Vec<f64> = zt.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let syy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * syy.sqrt() {
            if first_update && syy > 0.0 {
                hmat.reset();
                hmat.scale(sy / syy);
                first_update = false;
            }
            let mut hy = vec![0.0; d];
            hmat.mul(&y, &mut hy);
            hmat.bfgs_update(&s, &y, 1.0 / sy, &hy);
        }
        z = zt;
        fz = ft;
        g = gt;
        converged = sup_norm(&g) < opts.grad_tol;
    }

    Ok(BfgsOutcome { z, value: fz, grad_norm: sup_norm(&g), iterations, converged })
}
