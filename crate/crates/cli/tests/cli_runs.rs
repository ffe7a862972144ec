//! End-to-end runs of the binary: exit codes, output-tree layout, digests,
//! and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-hj"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_EVOLUTION: &str = r#"
seed = 11
grid_resolution = 6
curve_segments = 6
ode_substeps = 4
random_starts = 1
t_end = 0.4
steps = 2
initial = [[0.3, 1.0, 0.0]]

[model]
family = "discounted"
potential = [[0.5, 1.0, 0.0]]
lambda = 1.0
"#;

#[test]
fn config_errors_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();

    let cfg = write_config(dir.path(), "seed = 1\nbogus_key = 2\n[model]\nfamily = \"discounted\"\nlambda = 1.0\n");
    let out = bin().args(["check-conditions", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus_key"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "seed = 1\ngrad_tol = -1.0\n[model]\nfamily = \"discounted\"\nlambda = 1.0\n");
    let out = bin().args(["check-conditions", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grad_tol"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "grid_resolution = 8\n[model]\nfamily = \"discounted\"\nlambda = 1.0\n");
    let out = bin().args(["check-conditions", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "seed = 1\n[model]\nfamily = \"discounted\"\nlambda = 1.0\nwrong = 3\n");
    let out = bin().args(["check-conditions", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("wrong"), "{}", stderr(&out));
}

#[test]
fn evolution_runs_are_digested_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_EVOLUTION);
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = bin()
            .args(["solve-evolution", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        out_dir
    };
    let a = run("a");
    let b = run("b");

    // Every listed file exists and its digest matches its bytes.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for entry in files {
        let rel = entry["path"].as_str().unwrap();
        let bytes = fs::read(a.join(rel)).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{rel}");
        // Headers are mandatory.
        assert!(bytes.starts_with(b"x,u\n"), "{rel}");
    }
    assert_eq!(manifest["times"].as_array().unwrap().len(), 3);

    // Same seed, same bytes.
    for rel in ["manifest.json", "frames/frame_0000.csv", "frames/frame_0002.csv"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn condition_report_passes_for_the_discounted_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 7\nsamples = 500\n[model]\nfamily = \"discounted\"\npotential = [[0.5, 1.0, 0.0]]\nlambda = 1.0\n",
    );
    let out = bin().args(["check-conditions", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("L6"), "{text}");
    assert!(text.contains("declared conditions hold: true"), "{text}");
}

#[test]
fn fundamental_solution_reports_per_start_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_EVOLUTION);
    let traj = dir.path().join("trajectory.csv");
    let out = bin()
        .args(["fundamental-solution", "--config"])
        .arg(&cfg)
        .args(["--t1", "0", "--t2", "0.5", "--x", "0.1", "--y", "0.6", "--u0", "0.2", "--json"])
        .arg("--dump-trajectory")
        .arg(&traj)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["value"].as_f64().unwrap().is_finite());
    assert!(report["converged"].as_bool().unwrap());
    let starts = report["starts"].as_array().unwrap();
    assert!(!starts.is_empty());
    assert_eq!(starts.iter().filter(|s| s["selected"].as_bool().unwrap()).count(), 1);
    // 6 segments means 7 nodes, endpoints pinned to the requested points.
    let nodes = report["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 7);
    assert_eq!(nodes[0][1].as_f64().unwrap(), 0.1);
    assert_eq!(nodes[6][1].as_f64().unwrap(), 0.6);

    let dump = fs::read_to_string(&traj).unwrap();
    assert!(dump.starts_with("s,x,v,u\n"));
    assert!(dump.lines().count() > 6);
}

#[test]
fn formula_comparison_stays_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 11
grid_resolution = 6
curve_segments = 8
ode_substeps = 6
random_starts = 1
t_end = 1.0
initial = [[0.3, 1.0, 0.0]]
points = [[0.5, 0.25]]
random_points = 2
gauges = [[0.0], [0.5, 3.0, 0.0, 0.2]]

[model]
family = "nonlinear_concave"
potential = [[0.5, 1.0, 0.0]]
lambda = 1.0
eps = 0.3
"#,
    );
    let out_dir = dir.path().join("cmp");
    let out = bin()
        .args(["compare-formulas", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let pairs = manifest["pair_max_discrepancy"].as_object().unwrap();
    assert!(!pairs.is_empty());
    for (pair, v) in pairs {
        assert!(v.as_f64().unwrap() < 1e-4, "{pair}: {v}");
    }
    let csv = fs::read_to_string(out_dir.join("tables/comparison.csv")).unwrap();
    assert!(csv.starts_with("t,x,formula,value,discrepancy\n"));
    assert!(csv.contains("frozen-linearization"));

    // The --points flag overrides the configured fixed points.
    let out = bin()
        .args(["compare-formulas", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("cmp2"))
        .args(["--points", "0.4,0.1;0.8,0.7"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cmp2/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["points"].as_i64(), Some(4));
}

#[test]
fn scheme_run_mirrors_the_evolution_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 2
grid_resolution = 8
t_end = 0.4
steps = 2
initial = [[0.3, 1.0, 0.0]]
fd_resolution = 64

[model]
family = "discounted"
potential = [[0.5, 1.0, 0.0]]
lambda = 1.0
"#,
    );
    let out_dir = dir.path().join("fd");
    let out = bin()
        .args(["fd-solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["resolution"][0].as_i64(), Some(64));
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
    let frame = fs::read_to_string(out_dir.join("frames/frame_0002.csv")).unwrap();
    assert_eq!(frame.lines().count(), 65);
}

#[test]
fn ode_integration_is_fourth_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 3
t_end = 1.0
initial = [[1.0, 0.0, 0.0]]
study = "ode-order"
ladder = [2, 4, 8]

[model]
family = "discounted"
potential = [[0.5, 1.0, 0.0]]
lambda = 1.0
"#,
    );
    let out_dir = dir.path().join("study");
    let out = bin()
        .args(["convergence-study", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let slope = manifest["slope"].as_f64().unwrap();
    assert!(slope > 3.5, "measured order {slope}");
}

#[test]
fn starved_fixed_point_exits_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 5
grid_resolution = 6
curve_segments = 6
ode_substeps = 4
random_starts = 1
max_fp_iters = 1
fp_tol = 1e-12

[model]
family = "discounted"
potential = [[0.3, 1.0, 0.0]]
lambda = 1.0
"#,
    );
    let out = bin()
        .args(["solve-stationary", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("st"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["error"].as_str(), Some("stationary-no-convergence"));
    assert_eq!(report["iterations"].as_i64(), Some(1));
    assert!(report["residual"].as_f64().unwrap() > 1e-12);
}
