//! The seven subcommands: orchestration between config files, the solver
//! crate, and the deterministic output tree.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use contact_hj::caratheodory::{Gauge, ValueTrajectory};
use contact_hj::config::SolverConfig;
use contact_hj::fd_oracle::{fd_evolve, fd_stationary, FdConfig};
use contact_hj::herglotz::fundamental_solution;
use contact_hj::lagrangian::{
    check_conditions as probe_conditions, Coord, DomainDescriptor, SampleBox, TrigPoly,
};
use contact_hj::lax_oleinik::{apply, evolve, stationary_fixed_point, GridFunction};
use contact_hj::repformulas::{time_rescaling_check, FormulaSession};

use crate::config_file::{self, RunConfig};
use crate::output::{fmt12, RunWriter};
use crate::CliError;

fn grid_shape(dim: usize, n: usize) -> [usize; 2] {
    [n, if dim == 2 { n } else { 1 }]
}

/// Sample trigonometric rows onto a grid of `n` nodes per axis.
fn initial_grid(
    domain: &DomainDescriptor,
    rows: &[Vec<f64>],
    n: usize,
) -> Result<GridFunction, CliError> {
    let poly = TrigPoly::from_rows(domain.dim(), rows)
        .map_err(|e| CliError::config("initial", e.to_string()))?;
    let d = *domain;
    GridFunction::from_fn(d, grid_shape(d.dim(), n), |x| poly.eval(&d, x)).map_err(Into::into)
}

fn frame_rows(g: &GridFunction) -> (&'static str, Vec<String>) {
    let dim = g.domain().dim();
    let header = if dim == 1 { "x,u" } else { "x1,x2,u" };
    let rows = (0..g.len())
        .map(|i| {
            let x = g.node_position(i);
            let u = g.values()[i];
            if dim == 1 {
                format!("{},{}", fmt12(x[0]), fmt12(u))
            } else {
                format!("{},{},{}", fmt12(x[0]), fmt12(x[1]), fmt12(u))
            }
        })
        .collect();
    (header, rows)
}

fn parse_coord(dim: usize, text: &str, key: &'static str) -> Result<Coord, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != dim {
        return Err(CliError::config(
            key,
            format!("expected {dim} comma-separated coordinates, got {}", parts.len()),
        ));
    }
    let mut c = [0.0; 2];
    for (i, p) in parts.iter().enumerate() {
        c[i] = p
            .trim()
            .parse()
            .map_err(|_| CliError::config(key, format!("`{p}` is not a number")))?;
    }
    Ok(c)
}

fn parse_gauge(row: &[f64]) -> Result<Gauge, CliError> {
    match *row {
        [c] => Ok(Gauge::Constant(c)),
        [amplitude, frequency, phase, offset] => {
            Ok(Gauge::Trig { amplitude, frequency, phase, offset })
        }
        _ => Err(CliError::config(
            "gauges",
            format!("rows have 1 (constant) or 4 (trig) entries, got {}", row.len()),
        )),
    }
}

/// Decouple command-level sampling from the solver-internal streams that share
/// the same master seed.
fn derive_seed(seed: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(seed ^ 0x9E37_79B9_7F4A_7C15, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3))
}

pub fn solve_evolution(config: &Path, out: &Path) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let model = rc.model.build()?;
    let phi = initial_grid(model.domain(), &rc.experiment.initial, rc.solver.grid_resolution)?;
    let result = evolve(&model, &phi, 0.0, rc.experiment.t_end, rc.experiment.steps, &rc.solver)?;

    let mut writer = RunWriter::create(out)?;
    let mut residuals = Vec::new();
    for (k, frame) in result.frames.iter().enumerate() {
        let (header, rows) = frame_rows(frame);
        writer.write_csv(&format!("frames/frame_{k:04}.csv"), header, &rows)?;
        if k > 0 {
            residuals.push(frame.sup_diff(&result.frames[k - 1]));
        }
    }
    writer.finish(serde_json::json!({
        "command": "solve-evolution",
        "seed": rc.solver.seed,
        "family": rc.model.family,
        "resolution": grid_shape(model.domain().dim(), rc.solver.grid_resolution),
        "times": result.times,
        "residuals": residuals,
    }))?;
    println!("wrote {} frames to {}", result.frames.len(), out.display());
    Ok(())
}

pub fn solve_stationary(config: &Path, out: &Path) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let model = rc.model.build()?;
    let st = stationary_fixed_point(&model, &rc.solver)?;

    let mut writer = RunWriter::create(out)?;
    let (header, rows) = frame_rows(&st.u);
    writer.write_csv("frames/stationary.csv", header, &rows)?;
    let history: Vec<String> = st
        .history
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{},{}", i + 1, fmt12(*r)))
        .collect();
    writer.write_csv("tables/convergence_history.csv", "sweep,update", &history)?;
    writer.finish(serde_json::json!({
        "command": "solve-stationary",
        "seed": rc.solver.seed,
        "family": rc.model.family,
        "resolution": grid_shape(model.domain().dim(), rc.solver.grid_resolution),
        "stationary_step": rc.solver.stationary_step,
        "iterations": st.iterations,
        "residuals": st.history,
    }))?;
    println!(
        "stationary fixed point after {} sweeps, last update {}",
        st.iterations,
        fmt12(st.residual)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn fundamental(
    config: &Path,
    t1: f64,
    t2: f64,
    x_text: &str,
    y_text: &str,
    u0: f64,
    json: bool,
    dump: Option<&Path>,
) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let model = rc.model.build()?;
    let dim = model.domain().dim();
    let x = parse_coord(dim, x_text, "x")?;
    let y = parse_coord(dim, y_text, "y")?;
    let sol = fundamental_solution(&model, t1, t2, x, y, u0, &rc.solver)?;
    if let Some(path) = dump {
        write_trajectory_csv(path, &sol.trajectory)?;
    }

    let nodes: Vec<serde_json::Value> = sol
        .minimizer
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let s = sol.minimizer.node_time(i);
            let mut row = vec![s, node[0]];
            if dim == 2 {
                row.push(node[1]);
            }
            row.into()
        })
        .collect();

    if json {
        let starts: Vec<serde_json::Value> = sol
            .starts
            .iter()
            .map(|s| {
                serde_json::json!({
                    "kind": s.kind.to_string(),
                    "value": s.value,
                    "grad_norm": s.grad_norm,
                    "iterations": s.iterations,
                    "converged": s.converged,
                    "selected": s.selected,
                })
            })
            .collect();
        println!(
            "{:#}",
            serde_json::json!({
                "t1": t1,
                "t2": t2,
                "u0": u0,
                "value": sol.value,
                "stationarity_residual": sol.stationarity_residual,
                "end_value_sensitivity": sol.end_value_sensitivity,
                "converged": sol.converged,
                "grad_norm": sol.grad_norm,
                "starts_tried": sol.starts_tried,
                "nodes": nodes,
                "starts": starts,
            })
        );
    } else {
        println!("value = {}", fmt12(sol.value));
        println!("stationarity_residual = {}", fmt12(sol.stationarity_residual));
        println!("end_value_sensitivity = {}", fmt12(sol.end_value_sensitivity));
        println!("converged = {} ({} starts tried)", sol.converged, sol.starts_tried);
        println!("nodes:");
        println!("{}", if dim == 1 { "s,x" } else { "s,x1,x2" });
        for row in &nodes {
            let vals: Vec<String> =
                row.as_array().unwrap().iter().map(|v| fmt12(v.as_f64().unwrap())).collect();
            println!("{}", vals.join(","));
        }
    }
    Ok(())
}

fn write_trajectory_csv(path: &Path, traj: &ValueTrajectory) -> Result<(), CliError> {
    let curve = traj.curve();
    let dim = curve.domain().dim();
    let mut text = String::new();
    text.push_str(if dim == 1 { "s,x,v,u" } else { "s,x1,x2,v1,v2,u" });
    text.push('\n');
    for (k, &s) in traj.times().iter().enumerate() {
        let x = curve.position_at(s);
        let v = curve.velocity_at(s);
        let u = traj.values()[k];
        let mut cols = vec![fmt12(s), fmt12(x[0])];
        if dim == 2 {
            cols.push(fmt12(x[1]));
        }
        cols.push(fmt12(v[0]));
        if dim == 2 {
            cols.push(fmt12(v[1]));
        }
        cols.push(fmt12(u));
        text.push_str(&cols.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn compare_formulas(config: &Path, out: &Path, points_flag: Option<&str>) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let model = rc.model.build()?;
    let dim = model.domain().dim();
    let phi = initial_grid(model.domain(), &rc.experiment.initial, rc.solver.grid_resolution)?;

    let mut points: Vec<(f64, Coord)> = Vec::new();
    if let Some(flag) = points_flag {
        for group in flag.split(';').filter(|g| !g.trim().is_empty()) {
            let parts: Vec<&str> = group.split(',').collect();
            if parts.len() != 1 + dim {
                return Err(CliError::config(
                    "points",
                    format!("`{group}` has {} entries, expected t plus {dim} coordinates", parts.len()),
                ));
            }
            let mut nums = [0.0f64; 3];
            for (i, p) in parts.iter().enumerate() {
                nums[i] = p
                    .trim()
                    .parse()
                    .map_err(|_| CliError::config("points", format!("`{p}` is not a number")))?;
            }
            points.push((nums[0], [nums[1], if dim == 2 { nums[2] } else { 0.0 }]));
        }
    } else {
        for row in &rc.experiment.points {
            if row.len() != 1 + dim {
                return Err(CliError::config(
                    "points",
                    format!("rows need t plus {dim} coordinates, got {}", row.len()),
                ));
            }
            points.push((row[0], [row[1], if dim == 2 { row[2] } else { 0.0 }]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rc.solver.seed, "points"));
    for _ in 0..rc.experiment.random_points {
        let t = rng.gen_range(0.2 * rc.experiment.t_end..=rc.experiment.t_end);
        let mut x = [0.0; 2];
        for a in 0..dim {
            x[a] = rng.gen_range(0.0..model.domain().period(a));
        }
        points.push((t, x));
    }
    if points.is_empty() {
        return Err(CliError::config("points", "no evaluation points configured".to_string()));
    }
    let gauges: Vec<Gauge> =
        rc.experiment.gauges.iter().map(|row| parse_gauge(row)).collect::<Result<_, _>>()?;

    let header = if dim == 1 {
        "t,x,formula,value,discrepancy"
    } else {
        "t,x1,x2,formula,value,discrepancy"
    };
    let mut rows: Vec<String> = Vec::new();
    let mut pair_max: BTreeMap<String, f64> = BTreeMap::new();
    let mut formulas_seen: Vec<String> = Vec::new();

    for &(t, x) in &points {
        let session = FormulaSession::new(&model, &phi, 0.0, t, x, &rc.solver)?;
        let mut cell: Vec<(String, f64, f64)> = Vec::new();
        let direct = session.direct();
        cell.push((direct.formula.name().to_string(), direct.value, direct.discrepancy));
        let mut push = |label: String, report: contact_hj::repformulas::FormulaReport| {
            cell.push((label, report.value, report.discrepancy));
        };
        match session.integrating_factor() {
            Ok(r) => push(r.formula.name().to_string(), r),
            Err(contact_hj::Error::Invalid { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        match session.frozen_linearization() {
            Ok(r) => push(r.formula.name().to_string(), r),
            Err(contact_hj::Error::Invalid { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        match session.secant_slope() {
            Ok(r) => push(r.formula.name().to_string(), r),
            Err(contact_hj::Error::Invalid { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        for (gi, gauge) in gauges.iter().enumerate() {
            match session.gauge(*gauge) {
                Ok(r) => push(format!("{}[{gi}]", r.formula.name()), r),
                Err(contact_hj::Error::Invalid { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        match session.discounted_explicit() {
            Ok(r) => push(r.formula.name().to_string(), r),
            Err(contact_hj::Error::Invalid { .. }) => {}
            Err(e) => return Err(e.into()),
        }

        for (label, value, discrepancy) in &cell {
            if !formulas_seen.contains(label) {
                formulas_seen.push(label.clone());
            }
            let coords = if dim == 1 {
                format!("{},{}", fmt12(t), fmt12(x[0]))
            } else {
                format!("{},{},{}", fmt12(t), fmt12(x[0]), fmt12(x[1]))
            };
            rows.push(format!("{coords},{label},{},{}", fmt12(*value), fmt12(*discrepancy)));
        }
        for i in 0..cell.len() {
            for j in (i + 1)..cell.len() {
                let (a, b) = if cell[i].0 <= cell[j].0 { (i, j) } else { (j, i) };
                let key = format!("{}|{}", cell[a].0, cell[b].0);
                let gap = (cell[i].1 - cell[j].1).abs();
                let slot = pair_max.entry(key).or_insert(0.0);
                *slot = slot.max(gap);
            }
        }
    }

    let mut writer = RunWriter::create(out)?;
    writer.write_csv("tables/comparison.csv", header, &rows)?;
    let worst = pair_max.iter().map(|(k, v)| (k.clone(), *v)).fold(
        (String::new(), 0.0f64),
        |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
    );
    writer.finish(serde_json::json!({
        "command": "compare-formulas",
        "seed": rc.solver.seed,
        "family": rc.model.family,
        "points": points.len(),
        "formulas": formulas_seen,
        "pair_max_discrepancy": pair_max,
    }))?;
    println!(
        "{} points, worst pair {} with max discrepancy {}",
        points.len(),
        worst.0,
        fmt12(worst.1)
    );
    Ok(())
}

fn fd_config(rc: &RunConfig, dim: usize) -> Result<FdConfig, CliError> {
    let mut fd = FdConfig {
        cfl: rc.experiment.fd_cfl,
        settle_tol: rc.experiment.fd_settle_tol,
        max_settle_time: rc.experiment.fd_max_time,
        ..FdConfig::default()
    };
    if let Some(nu) = &rc.experiment.fd_viscosity {
        if nu.len() != dim {
            return Err(CliError::config(
                "fd_viscosity",
                format!("{} entries for dimension {dim}", nu.len()),
            ));
        }
        for (a, &v) in nu.iter().enumerate() {
            fd.viscosity[a] = v;
        }
    }
    Ok(fd)
}

pub fn fd_solve(config: &Path, out: &Path, stationary: bool) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let ham = rc.model.build_hamiltonian()?;
    let dim = ham.domain().dim();
    let n = rc.experiment.fd_resolution.unwrap_or(rc.solver.grid_resolution);
    let fd = fd_config(&rc, dim)?;

    let mut writer = RunWriter::create(out)?;
    if stationary {
        let res = fd_stationary(&ham, grid_shape(dim, n), &fd)?;
        let (header, rows) = frame_rows(&res.u);
        writer.write_csv("frames/stationary.csv", header, &rows)?;
        writer.finish(serde_json::json!({
            "command": "fd-solve",
            "mode": "stationary",
            "seed": rc.solver.seed,
            "family": rc.model.family,
            "resolution": grid_shape(dim, n),
            "dt": res.dt,
            "steps": res.steps,
            "settle_rate": res.settle_rate,
        }))?;
        println!("settled after {} steps at rate {}", res.steps, fmt12(res.settle_rate.unwrap_or(0.0)));
    } else {
        let domain = *ham.domain();
        let phi = initial_grid(&domain, &rc.experiment.initial, n)?;
        let steps = rc.experiment.steps;
        let t_end = rc.experiment.t_end;
        let mut frames = vec![phi];
        for k in 1..=steps {
            let t1 = t_end * (k - 1) as f64 / steps as f64;
            let t2 = t_end * k as f64 / steps as f64;
            let res = fd_evolve(&ham, frames.last().unwrap(), t1, t2, &fd)?;
            frames.push(res.u);
        }
        let mut residuals = Vec::new();
        for (k, frame) in frames.iter().enumerate() {
            let (header, rows) = frame_rows(frame);
            writer.write_csv(&format!("frames/frame_{k:04}.csv"), header, &rows)?;
            if k > 0 {
                residuals.push(frame.sup_diff(&frames[k - 1]));
            }
        }
        let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
        writer.finish(serde_json::json!({
            "command": "fd-solve",
            "mode": "evolution",
            "seed": rc.solver.seed,
            "family": rc.model.family,
            "resolution": grid_shape(dim, n),
            "times": times,
            "residuals": residuals,
        }))?;
        println!("wrote {} frames to {}", frames.len(), out.display());
    }
    Ok(())
}

pub fn convergence_study(config: &Path, out: &Path) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    let study = rc
        .experiment
        .study
        .clone()
        .ok_or_else(|| CliError::config("study", "missing".to_string()))?;
    let ladder = &rc.experiment.ladder;
    if ladder.len() < 3 {
        return Err(CliError::config(
            "ladder",
            format!("needs at least 3 levels, got {}", ladder.len()),
        ));
    }
    if ladder.iter().any(|&n| n == 0) {
        return Err(CliError::config("ladder", "levels must be positive".to_string()));
    }

    let (spacings, errors) = match study.as_str() {
        "ode-order" => ode_order_study(&rc)?,
        "grid-mutual" => grid_mutual_study(&rc)?,
        "semigroup" => semigroup_study(&rc)?,
        "time-rescale" => time_rescale_study(&rc)?,
        other => {
            return Err(CliError::config(
                "study",
                format!("unknown study `{other}`; expected ode-order, grid-mutual, semigroup, or time-rescale"),
            ))
        }
    };
    let slope = fitted_slope(&spacings, &errors);

    let mut writer = RunWriter::create(out)?;
    let rows: Vec<String> = ladder
        .iter()
        .zip(spacings.iter().zip(&errors))
        .enumerate()
        .map(|(i, (n, (h, e)))| format!("{i},{n},{},{}", fmt12(*h), fmt12(*e)))
        .collect();
    writer.write_csv("tables/convergence.csv", "level,parameter,spacing,error", &rows)?;
    writer.finish(serde_json::json!({
        "command": "convergence-study",
        "study": study,
        "seed": rc.solver.seed,
        "family": rc.model.family,
        "levels": ladder,
        "spacings": spacings,
        "errors": errors,
        "slope": slope,
    }))?;
    println!("study {study}: fitted log-log slope {}", fmt12(slope));
    Ok(())
}

/// Integrate the value equation along a pinned constant curve at each substep
/// count and compare with the closed-form answer.
fn ode_order_study(rc: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if rc.model.family != "discounted" {
        return Err(CliError::config(
            "study",
            "ode-order needs the discounted family (closed-form reference)".to_string(),
        ));
    }
    for row in &rc.experiment.initial {
        // Rows are [amplitude, wave..., phase]; any nonzero wave breaks the
        // constant-data closed form.
        if row.len() >= 3 && row[1..row.len() - 1].iter().any(|&k| k != 0.0) {
            return Err(CliError::config(
                "initial",
                "ode-order needs constant initial data (zero wave numbers)".to_string(),
            ));
        }
    }
    let model = rc.model.build()?;
    let l0 = rc.model.base_spec()?;
    let domain = *model.domain();
    let origin = [0.0; 2];
    let poly = TrigPoly::from_rows(domain.dim(), &rc.experiment.initial)
        .map_err(|e| CliError::config("initial", e.to_string()))?;
    let c = poly.eval(&domain, origin);
    // Along the constant curve at the origin the rate is
    // du/ds = -V(0) - lambda u, so the end value is explicit.
    let vbar = l0.potential.eval(&domain, origin);
    let t = rc.experiment.t_end;
    let lambda = rc.model.lambda;
    let exact = if lambda > 0.0 {
        (c + vbar / lambda) * (-lambda * t).exp() - vbar / lambda
    } else {
        c - vbar * t
    };

    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &substeps in &rc.experiment.ladder {
        let cfg = SolverConfig {
            ode_substeps: substeps,
            curve_segments: 1,
            max_winding: 0,
            random_starts: 0,
            ..rc.solver.clone()
        };
        let sol = fundamental_solution(&model, 0.0, t, origin, origin, c, &cfg)?;
        spacings.push(1.0 / substeps as f64);
        errors.push((c + sol.value - exact).abs());
    }
    Ok((spacings, errors))
}

/// Mutual sup-distance between the variational evolution and the
/// finite-difference scheme at matching resolutions.
fn grid_mutual_study(rc: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let model = rc.model.build()?;
    let ham = rc.model.build_hamiltonian()?;
    let dim = model.domain().dim();
    let fd = fd_config(rc, dim)?;
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in &rc.experiment.ladder {
        let phi = initial_grid(model.domain(), &rc.experiment.initial, n)?;
        let lo = evolve(&model, &phi, 0.0, rc.experiment.t_end, rc.experiment.steps, &rc.solver)?;
        let fdr = fd_evolve(&ham, &phi, 0.0, rc.experiment.t_end, &fd)?;
        spacings.push(model.domain().period(0) / n as f64);
        errors.push(lo.frames.last().unwrap().sup_diff(&fdr.u));
    }
    Ok((spacings, errors))
}

/// Defect between one application over `t_end` and two applications over
/// halves; vanishes with the grid spacing because only the intermediate
/// restriction to grid nodes separates them.
fn semigroup_study(rc: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let model = rc.model.build()?;
    let t = rc.experiment.t_end;
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in &rc.experiment.ladder {
        let phi = initial_grid(model.domain(), &rc.experiment.initial, n)?;
        let one = apply(&model, &phi, 0.0, t, &rc.solver)?;
        let half = apply(&model, &phi, 0.0, 0.5 * t, &rc.solver)?;
        let two = apply(&model, &half.values, 0.5 * t, t, &rc.solver)?;
        spacings.push(model.domain().period(0) / n as f64);
        errors.push(two.values.sup_diff(&one.values));
    }
    Ok((spacings, errors))
}

/// Sup-distance between the exponentially rescaled evolution and the
/// discounted one, per resolution.
fn time_rescale_study(rc: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let l0 = rc.model.base_spec()?;
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in &rc.experiment.ladder {
        let phi = initial_grid(&l0.domain, &rc.experiment.initial, n)?;
        let rep = time_rescaling_check(
            &l0,
            rc.model.lambda,
            &phi,
            rc.experiment.t_end,
            rc.experiment.steps,
            &rc.solver,
        )?;
        spacings.push(l0.domain.period(0) / n as f64);
        errors.push(rep.max_error);
    }
    Ok((spacings, errors))
}

/// Least-squares slope of `ln error` against `ln spacing`; errors are floored
/// at 1e-16 so an exact level cannot blow up the fit.
fn fitted_slope(spacings: &[f64], errors: &[f64]) -> f64 {
    let lx: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.max(1e-16).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

pub fn check_conditions(config: &Path) -> Result<(), CliError> {
    let rc = config_file::load(config)?;
    if rc.experiment.samples == 0 {
        return Err(CliError::config("samples", "must be positive".to_string()));
    }
    let model = rc.model.build()?;
    let report = probe_conditions(&model, rc.experiment.samples, &SampleBox::default(), rc.solver.seed);

    println!("condition  declared  passed  worst_margin");
    for entry in &report.entries {
        println!(
            "{:<9}  {:<8}  {:<6}  {}",
            format!("{:?}", entry.condition),
            entry.declared,
            entry.passed,
            fmt12(entry.worst_margin),
        );
    }
    let ok = report.declared_ok();
    println!("declared conditions hold: {ok}");
    if ok {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .entries
            .iter()
            .filter(|e| e.declared && !e.passed)
            .map(|e| format!("{:?}", e.condition))
            .collect();
        Err(CliError::ConditionsFailed { failed })
    }
}
