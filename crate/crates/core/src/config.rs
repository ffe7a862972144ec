//! Runtime configuration shared by the solvers and the serializable model
//! description used by config files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{
    legendre_to_hamiltonian, make_discounted, make_discounted_hamiltonian, make_nonlinear_concave,
    make_time_scaled, DomainDescriptor, HamiltonianModel, Kinetic, LagrangianModel, TonelliSpec,
    TrigPoly,
};

/// Knobs for the variational solvers. Every field has a working default except
/// that callers are expected to pick `seed` deliberately: all randomized pieces
/// (multi-start perturbations, samplers) derive from it, so runs with equal
/// inputs and equal seeds produce identical output.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Master seed for every randomized component.
    pub seed: u64,
    /// Grid nodes per axis for grid-based evolution.
    pub grid_resolution: usize,
    /// Piecewise-linear segments per candidate curve.
    pub curve_segments: usize,
    /// Runge-Kutta substeps per curve segment in the value integration.
    pub ode_substeps: usize,
    /// Optimizer stops when the gradient sup-norm drops below this.
    pub grad_tol: f64,
    /// Iteration cap per optimizer start.
    pub max_opt_iters: usize,
    /// Shortest admissible horizon `t2 - t1`.
    pub min_horizon: f64,
    /// Straight-line starts are seeded for every winding with `|k| <= max_winding`
    /// per axis.
    pub max_winding: i32,
    /// Extra randomly perturbed starts per call.
    pub random_starts: usize,
    /// Relative amplitude (fraction of the period) of random start perturbations.
    pub start_amplitude: f64,
    /// Horizon of one evolution-operator application in the stationary
    /// fixed-point iteration; the contraction factor per sweep is
    /// `e^(-delta * stationary_step)`.
    pub stationary_step: f64,
    /// Sup-norm tolerance for the stationary fixed point.
    pub fp_tol: f64,
    /// Iteration cap for the stationary fixed point.
    pub max_fp_iters: usize,
    /// Required bound on the neglected tail weight of backward half-line values.
    pub tail_tol: f64,
    /// Hard cap on the backward horizon used to certify the tail.
    pub max_tail_horizon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_resolution: 64,
            curve_segments: 32,
            ode_substeps: 8,
            grad_tol: 1e-6,
            max_opt_iters: 200,
            min_horizon: 1e-3,
            max_winding: 1,
            random_starts: 4,
            start_amplitude: 0.1,
            stationary_step: 0.5,
            fp_tol: 1e-6,
            max_fp_iters: 500,
            tail_tol: 1e-5,
            max_tail_horizon: 50.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Config { key: key.to_string(), reason });
        if self.grid_resolution < 2 {
            return bad("grid_resolution", format!("{} < 2", self.grid_resolution));
        }
        if self.curve_segments == 0 {
            return bad("curve_segments", "must be positive".to_string());
        }
        if self.ode_substeps == 0 {
            return bad("ode_substeps", "must be positive".to_string());
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return bad("grad_tol", format!("{} must be finite and > 0", self.grad_tol));
        }
        if self.max_opt_iters == 0 {
            return bad("max_opt_iters", "must be positive".to_string());
        }
        if !(self.min_horizon.is_finite() && self.min_horizon > 0.0) {
            return bad("min_horizon", format!("{} must be finite and > 0", self.min_horizon));
        }
        if self.max_winding < 0 {
            return bad("max_winding", format!("{} < 0", self.max_winding));
        }
        if !(self.start_amplitude.is_finite() && self.start_amplitude >= 0.0) {
            return bad("start_amplitude", format!("{} must be finite and >= 0", self.start_amplitude));
        }
        if !(self.stationary_step.is_finite() && self.stationary_step >= self.min_horizon) {
            return bad(
                "stationary_step",
                format!("{} must be finite and >= min_horizon = {}", self.stationary_step, self.min_horizon),
            );
        }
        if !(self.fp_tol.is_finite() && self.fp_tol > 0.0) {
            return bad("fp_tol", format!("{} must be finite and > 0", self.fp_tol));
        }
        if self.max_fp_iters == 0 {
            return bad("max_fp_iters", "must be positive".to_string());
        }
        if !(self.tail_tol.is_finite() && self.tail_tol > 0.0) {
            return bad("tail_tol", format!("{} must be finite and > 0", self.tail_tol));
        }
        if !(self.max_tail_horizon.is_finite() && self.max_tail_horizon > 0.0) {
            return bad("max_tail_horizon", format!("{} must be finite and > 0", self.max_tail_horizon));
        }
        Ok(())
    }
}

/// Serializable description of a built-in model, the config-file counterpart of
/// the constructors in [`crate::lagrangian`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// One of `discounted`, `nonlinear_concave`, `time_scaled`.
    pub family: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Period per axis; a single entry is broadcast in 1D.
    #[serde(default = "default_period")]
    pub period: Vec<f64>,
    /// Kinetic coefficients (`[a]` or `[a11, a12, a22]`); identity when absent.
    #[serde(default)]
    pub kinetic: Option<Vec<f64>>,
    /// Trigonometric potential rows `[amplitude, wave..., phase]`.
    #[serde(default)]
    pub potential: Vec<Vec<f64>>,
    pub lambda: f64,
    #[serde(default)]
    pub eps: f64,
}

fn default_dimension() -> usize {
    1
}

fn default_period() -> Vec<f64> {
    vec![1.0]
}

impl ModelSpec {
    /// The undiscounted base data shared by every family.
    pub fn base_spec(&self) -> Result<TonelliSpec> {
        let dim = self.dimension;
        if self.period.len() != dim {
            return Err(Error::Config {
                key: "model.period".to_string(),
                reason: format!("{} entries for dimension {dim}", self.period.len()),
            });
        }
        let domain = match dim {
            1 => DomainDescriptor::line(self.period[0])?,
            2 => DomainDescriptor::square(self.period[0], self.period[1])?,
            d => {
                return Err(Error::Config {
                    key: "model.dimension".to_string(),
                    reason: format!("{d} not in {{1, 2}}"),
                })
            }
        };
        let kinetic = match &self.kinetic {
            Some(coeffs) => Kinetic::from_coeffs(dim, coeffs)?,
            None => Kinetic::identity(),
        };
        let potential = TrigPoly::from_rows(dim, &self.potential)?;
        Ok(TonelliSpec { domain, kinetic, potential })
    }

    pub fn build(&self) -> Result<LagrangianModel> {
        let l0 = self.base_spec()?;
        match self.family.as_str() {
            "discounted" => make_discounted(&l0, self.lambda),
            "nonlinear_concave" => make_nonlinear_concave(&l0, self.lambda, self.eps),
            "time_scaled" => make_time_scaled(&l0, self.lambda),
            other => Err(Error::Config {
                key: "model.family".to_string(),
                reason: format!("unknown family `{other}`"),
            }),
        }
    }

    /// Dual-side model for the finite-difference scheme: the discounted family
    /// has a closed-form Hamiltonian, the others go through the numeric
    /// Legendre transform.
    pub fn build_hamiltonian(&self) -> Result<HamiltonianModel> {
        match self.family.as_str() {
            "discounted" => make_discounted_hamiltonian(&self.base_spec()?, self.lambda),
            _ => legendre_to_hamiltonian(&self.build()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_names_the_key() {
        let mut cfg = SolverConfig::default();
        cfg.grad_tol = -1.0;
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "grad_tol"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn model_spec_builds_discounted() {
        let spec = ModelSpec {
            family: "discounted".to_string(),
            dimension: 1,
            period: vec![1.0],
            kinetic: None,
            potential: vec![vec![1.0, 1.0, 0.0]],
            lambda: 1.0,
            eps: 0.0,
        };
        let m = spec.build().unwrap();
        assert!(m.declared().declares(crate::lagrangian::Condition::L6));
    }

    #[test]
    fn model_spec_rejects_unknown_family() {
        let spec = ModelSpec {
            family: "quadratic".to_string(),
            dimension: 1,
            period: vec![1.0],
            kinetic: None,
            potential: vec![],
            lambda: 1.0,
            eps: 0.0,
        };
        match spec.build() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "model.family"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn model_spec_dimension_mismatch_is_named() {
        let spec = ModelSpec {
            family: "discounted".to_string(),
            dimension: 2,
            period: vec![1.0],
            kinetic: None,
            potential: vec![],
            lambda: 1.0,
            eps: 0.0,
        };
        assert!(matches!(spec.build(), Err(Error::Config { key, .. }) if key == "model.period"));
    }
}
