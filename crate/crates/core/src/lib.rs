//! Solvers for Hamilton-Jacobi equations of contact type, i.e. equations whose
//! Hamiltonian depends on the unknown function value `u` in addition to `(t, x, Du)`.
//!
//! The central object is the generalized variational (Herglotz) principle: along a
//! curve `xi` the value `u_xi` solves the functional ODE
//! `du/ds = L(s, xi(s), xi'(s), u(s))`, and the equation's viscosity solution is
//! obtained by minimizing the endpoint value over curves. The crate provides
//!
//! * [`lagrangian`]: model bundles `L(s, x, v, u)` on flat periodic domains plus the
//!   convex-dual Hamiltonian side and a numerical condition checker,
//! * [`caratheodory`]: the value ODE along piecewise-linear curves and several
//!   exponentially weighted evaluators for its closed-form solution,
//! * [`herglotz`]: the two-point minimization producing the fundamental solution,
//! * [`lax_oleinik`]: the induced nonlinear evolution operator on grid functions and
//!   its stationary fixed point,
//! * [`repformulas`]: independent representation formulas for the same solution,
//!   cross-checkable against each other,
//! * [`fd_oracle`]: a monotone finite-difference reference solver.

pub mod caratheodory;
pub mod config;
mod error;
pub mod fd_oracle;
pub mod herglotz;
pub mod lagrangian;
pub mod lax_oleinik;
mod optimize;
pub mod repformulas;

pub use error::{Error, Result};
