use crate::herglotz::HerglotzResult;

/// Crate-wide error type. Variants that end a solver run carry enough state to
/// diagnose the failure without re-running.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    #[error("configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("value ODE diverged (|u| > {guard:.1e}) at s = {time}")]
    Divergence { time: f64, guard: f64 },

    #[error("gauge function produced a non-finite value at s = {time}")]
    NonFiniteGauge { time: f64 },

    #[error("Legendre transform inner Newton failed; worst dual residual {residual:.3e}")]
    LegendreNoConvergence { residual: f64 },

    #[error(
        "no optimizer start converged after {starts} starts \
         (best value {value:.6e}, gradient sup-norm {grad_norm:.3e})"
    )]
    NoStartConverged {
        starts: usize,
        value: f64,
        grad_norm: f64,
        /// Best candidate found, returned for diagnosis; `converged` is false.
        best: Box<HerglotzResult>,
    },

    #[error("horizon t2 - t1 = {horizon:.3e} below the minimum {min:.3e}")]
    ShortHorizon { horizon: f64, min: f64 },

    #[error("inner solve failed at grid pair (x index {x_index}, y index {y_index}): {source}")]
    OperatorSolve {
        x_index: usize,
        y_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point iteration stopped after {iterations} iterations, residual {residual:.3e}")]
    StationaryNoConvergence { iterations: usize, residual: f64 },

    #[error(
        "tail certificate not met by horizon {horizon}: e^(-delta T)*|u| = {tail:.3e} > {tol:.3e}"
    )]
    TailHorizon { horizon: f64, tail: f64, tol: f64 },

    #[error("measured inf of -L_u along the backward trajectory is {delta:.3e} <= 0")]
    NonPositiveDelta { delta: f64 },

    #[error("finite-difference solution at t = {time:.4} grew to {norm:.3e}, beyond the stability envelope {envelope:.3e}")]
    FdInstability { time: f64, norm: f64, envelope: f64 },

    #[error("finite-difference march did not settle: rate {rate:.3e} after {steps} steps")]
    FdNoSettle { rate: f64, steps: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid { what, why: why.into() }
    }
}
