//! Config-file loading: one flat TOML table holding solver and experiment
//! keys, plus a single `[model]` block.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use contact_hj::config::{ModelSpec, SolverConfig};

use crate::CliError;

/// Keys read by individual commands on top of [`SolverConfig`]. Everything is
/// optional with working defaults so one fixture can serve several commands.
#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Final time of evolution runs.
    pub t_end: f64,
    /// Operator applications between time 0 and `t_end`.
    pub steps: usize,
    /// Initial datum as trigonometric rows `[amplitude, wave..., phase]`;
    /// empty means zero initial data.
    pub initial: Vec<Vec<f64>>,
    /// Grid nodes per axis for finite-difference runs; `grid_resolution`
    /// when absent.
    pub fd_resolution: Option<usize>,
    /// Fraction of the monotone step bound taken by the scheme.
    pub fd_cfl: f64,
    /// Numerical viscosity per axis; the scheme default when absent.
    pub fd_viscosity: Option<Vec<f64>>,
    pub fd_settle_tol: f64,
    pub fd_max_time: f64,
    /// Fixed evaluation points as rows `[t, x...]`.
    pub points: Vec<Vec<f64>>,
    /// Extra points drawn uniformly with `t in [0.2 t_end, t_end]` and `x`
    /// uniform over the domain.
    pub random_points: usize,
    /// Gauge rows: `[c]` for a constant rate, `[amplitude, frequency, phase,
    /// offset]` for a trigonometric one.
    pub gauges: Vec<Vec<f64>>,
    /// Ladder for convergence studies, finest last (>= 3 levels).
    pub ladder: Vec<usize>,
    /// Which convergence study to run: `ode-order`, `grid-mutual`,
    /// `semigroup`, or `time-rescale`.
    pub study: Option<String>,
    /// Draw count for the condition checker.
    pub samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            steps: 1,
            initial: Vec::new(),
            fd_resolution: None,
            fd_cfl: 0.4,
            fd_viscosity: None,
            fd_settle_tol: 1e-6,
            fd_max_time: 50.0,
            points: Vec::new(),
            random_points: 0,
            gauges: Vec::new(),
            ladder: Vec::new(),
            study: None,
            samples: 2000,
        }
    }
}

pub struct RunConfig {
    pub solver: SolverConfig,
    pub model: ModelSpec,
    pub experiment: ExperimentConfig,
}

const SOLVER_KEYS: &[&str] = &[
    "seed",
    "grid_resolution",
    "curve_segments",
    "ode_substeps",
    "grad_tol",
    "max_opt_iters",
    "min_horizon",
    "max_winding",
    "random_starts",
    "start_amplitude",
    "stationary_step",
    "fp_tol",
    "max_fp_iters",
    "tail_tol",
    "max_tail_horizon",
];

const EXPERIMENT_KEYS: &[&str] = &[
    "t_end",
    "steps",
    "initial",
    "fd_resolution",
    "fd_cfl",
    "fd_viscosity",
    "fd_settle_tol",
    "fd_max_time",
    "points",
    "random_points",
    "gauges",
    "ladder",
    "study",
    "samples",
];

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| CliError::config("config", e.to_string()))?;
    let table = value
        .as_table()
        .ok_or_else(|| CliError::config("config", "top level is not a table".to_string()))?;

    for key in table.keys() {
        let known = key == "model"
            || SOLVER_KEYS.contains(&key.as_str())
            || EXPERIMENT_KEYS.contains(&key.as_str());
        if !known {
            return Err(CliError::config(key, "unknown key".to_string()));
        }
    }
    if !table.contains_key("seed") {
        return Err(CliError::config(
            "seed",
            "missing; every run must pin an explicit seed".to_string(),
        ));
    }
    let model_value = table
        .get("model")
        .ok_or_else(|| CliError::config("model", "missing table".to_string()))?;
    let model: ModelSpec = model_value
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config("model", e.to_string()))?;

    let solver: SolverConfig = value
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config("config", e.to_string()))?;
    solver.validate()?;

    let experiment: ExperimentConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config("config", e.to_string()))?;
    if !(experiment.t_end.is_finite() && experiment.t_end > 0.0) {
        return Err(CliError::config("t_end", format!("{} must be finite and > 0", experiment.t_end)));
    }
    if experiment.steps == 0 {
        return Err(CliError::config("steps", "must be positive".to_string()));
    }

    Ok(RunConfig { solver, model, experiment })
}
