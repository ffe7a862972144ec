//! Command-line front end for the contact-hj solvers.
//!
//! Exit codes: 0 on success, 2 on configuration errors (message names the
//! offending key), 3 on solver non-convergence (diagnostics JSON on stdout).
//! Set `RAYON_NUM_THREADS` to override the worker-pool size.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config_file;
mod output;

#[derive(Parser)]
#[command(
    name = "contact-hj",
    version,
    about = "Variational and finite-difference solvers for contact Hamilton-Jacobi equations on periodic domains",
    after_help = "Set RAYON_NUM_THREADS to override the worker-pool size."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data under the variational operator and write one CSV
    /// per frame.
    SolveEvolution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterate the operator to its fixed point and write the solution plus
    /// the convergence history.
    SolveStationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the two-point value functional and print value, minimizer
    /// nodes, and per-start diagnostics.
    FundamentalSolution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        /// Start point, comma-separated coordinates.
        #[arg(long)]
        x: String,
        /// End point, comma-separated coordinates.
        #[arg(long)]
        y: String,
        #[arg(long)]
        u0: f64,
        /// Emit one JSON object instead of the human-readable report.
        #[arg(long)]
        json: bool,
        /// Also write the value trajectory (s, x..., v..., u) to this CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
    /// Evaluate every applicable value formula at a set of points and
    /// tabulate the discrepancies.
    CompareFormulas {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured points: `t,x[,y]` groups separated by `;`.
        #[arg(long)]
        points: Option<String>,
    },
    /// Run the monotone finite-difference scheme with the same frame output
    /// as solve-evolution.
    FdSolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// March to the settled stationary solution instead of a fixed
        /// horizon.
        #[arg(long)]
        stationary: bool,
    },
    /// Repeat an experiment across a resolution ladder and fit the log-log
    /// error slope.
    ConvergenceStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe the structural conditions on random samples and report margins.
    CheckConditions {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Top-level failure classes, one per exit code.
pub enum CliError {
    /// Exit 2: bad configuration; `key` names the offending entry.
    Config { key: String, reason: String },
    /// Exit 3: a solver gave up; reported as diagnostics JSON on stdout.
    Solver(contact_hj::Error),
    /// Exit 3: a declared structural condition failed its sampling test.
    ConditionsFailed { failed: Vec<String> },
    /// Exit 1: anything else (I/O, internal).
    Other(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), reason: reason.into() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) | CliError::ConditionsFailed { .. } => 3,
            CliError::Other(_) => 1,
        }
    }

    fn report(&self) {
        match self {
            CliError::Config { key, reason } => {
                eprintln!("config error: key `{key}`: {reason}");
            }
            CliError::Solver(err) => {
                println!("{:#}", diagnostics_json(err));
                eprintln!("solver failed: {err}");
            }
            CliError::ConditionsFailed { failed } => {
                println!(
                    "{:#}",
                    serde_json::json!({ "error": "conditions-failed", "failed": failed })
                );
                eprintln!("declared conditions failed: {}", failed.join(", "));
            }
            CliError::Other(msg) => eprintln!("error: {msg}"),
        }
    }
}

impl From<contact_hj::Error> for CliError {
    fn from(e: contact_hj::Error) -> Self {
        use contact_hj::Error as E;
        match e {
            E::Config { key, reason } => CliError::Config { key, reason },
            // Invalid inputs assembled from config values trace back to the
            // config, so they share the config exit code.
            E::Invalid { what, why } => CliError::Config { key: what.to_string(), reason: why },
            E::ShortHorizon { .. } => {
                CliError::Config { key: "min_horizon".to_string(), reason: e.to_string() }
            }
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Structured failure report for exit code 3.
fn diagnostics_json(err: &contact_hj::Error) -> serde_json::Value {
    use contact_hj::Error as E;
    let mut body = serde_json::json!({
        "error": variant_name(err),
        "message": err.to_string(),
    });
    let obj = body.as_object_mut().unwrap();
    match err {
        E::NoStartConverged { starts, value, grad_norm, .. } => {
            obj.insert("starts".into(), (*starts).into());
            obj.insert("best_value".into(), (*value).into());
            obj.insert("grad_norm".into(), (*grad_norm).into());
        }
        E::StationaryNoConvergence { iterations, residual } => {
            obj.insert("iterations".into(), (*iterations).into());
            obj.insert("residual".into(), (*residual).into());
        }
        E::TailHorizon { horizon, tail, tol } => {
            obj.insert("horizon".into(), (*horizon).into());
            obj.insert("tail".into(), (*tail).into());
            obj.insert("tol".into(), (*tol).into());
        }
        E::NonPositiveDelta { delta } => {
            obj.insert("delta".into(), (*delta).into());
        }
        E::Divergence { time, guard } => {
            obj.insert("time".into(), (*time).into());
            obj.insert("guard".into(), (*guard).into());
        }
        E::FdInstability { time, norm, envelope } => {
            obj.insert("time".into(), (*time).into());
            obj.insert("norm".into(), (*norm).into());
            obj.insert("envelope".into(), (*envelope).into());
        }
        E::FdNoSettle { rate, steps } => {
            obj.insert("rate".into(), (*rate).into());
            obj.insert("steps".into(), (*steps).into());
        }
        E::LegendreNoConvergence { residual } => {
            obj.insert("residual".into(), (*residual).into());
        }
        E::OperatorSolve { x_index, y_index, source } => {
            obj.insert("x_index".into(), (*x_index).into());
            obj.insert("y_index".into(), (*y_index).into());
            obj.insert("inner".into(), diagnostics_json(source));
        }
        _ => {}
    }
    body
}

fn variant_name(err: &contact_hj::Error) -> &'static str {
    use contact_hj::Error as E;
    match err {
        E::Invalid { .. } => "invalid",
        E::Config { .. } => "config",
        E::Divergence { .. } => "divergence",
        E::NonFiniteGauge { .. } => "non-finite-gauge",
        E::LegendreNoConvergence { .. } => "legendre-no-convergence",
        E::NoStartConverged { .. } => "no-start-converged",
        E::ShortHorizon { .. } => "short-horizon",
        E::OperatorSolve { .. } => "operator-solve",
        E::StationaryNoConvergence { .. } => "stationary-no-convergence",
        E::TailHorizon { .. } => "tail-horizon",
        E::NonPositiveDelta { .. } => "non-positive-delta",
        E::FdInstability { .. } => "fd-instability",
        E::FdNoSettle { .. } => "fd-no-settle",
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveEvolution { config, out } => commands::solve_evolution(&config, &out),
        Command::SolveStationary { config, out } => commands::solve_stationary(&config, &out),
        Command::FundamentalSolution { config, t1, t2, x, y, u0, json, dump_trajectory } => {
            commands::fundamental(&config, t1, t2, &x, &y, u0, json, dump_trajectory.as_deref())
        }
        Command::CompareFormulas { config, out, points } => {
            commands::compare_formulas(&config, &out, points.as_deref())
        }
        Command::FdSolve { config, out, stationary } => {
            commands::fd_solve(&config, &out, stationary)
        }
        Command::ConvergenceStudy { config, out } => commands::convergence_study(&config, &out),
        Command::CheckConditions { config } => commands::check_conditions(&config),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
