//! Drives the `pqspectra` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SUBLINEAR: &str = "mesh.nx = 8\nmesh.ny = 8\nproblem.p = 2\nproblem.q = 3\nproblem.r = 1.5\nproblem.lambda = 1.0\n";
const HOMOGENEOUS: &str = "mesh.nx = 8\nmesh.ny = 8\nproblem.p = 2.5\nproblem.q = 4\nproblem.r = 4\n\
problem.beta1 = 0\nproblem.beta2 = 0\nsolver.restarts = 2\n";
const SMALL_LAMBDA: &str = "mesh.nx = 8\nmesh.ny = 8\nproblem.p = 2\nproblem.q = 3\n\
problem.r = \"2.5 - min(1, min(min(x, 1 - x), min(y, 1 - y)) / 0.1)\"\nsolver.probes = 2\n";
const SUPERLINEAR: &str = "mesh.nx = 8\nmesh.ny = 8\nproblem.p = 2\nproblem.q = 2.5\nproblem.r = 4\nproblem.lambda = 1.0\n";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn pqspectra(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pqspectra"));
    cmd.args(args).env_remove("PQSPECTRA_OUT");
    if let Some(d) = env_out {
        cmd.env("PQSPECTRA_OUT", d);
    }
    cmd.output().unwrap()
}

fn run(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), config);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pqspectra(&args, None)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_all_artifacts_with_the_config_hash() {
    let out = TempDir::new().unwrap();
    let o = run("solve", SUBLINEAR, out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.path().join("report.json"));
    let hash = report["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(report["case"], "Sublinear-A");
    assert!(report["summary"]["energy"].as_f64().unwrap() < 0.0);
    assert!(report["family"].as_array().unwrap().len() >= 2);
    let trace = fs::read_to_string(out.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_hash {hash}"));
    assert_eq!(lines.next().unwrap(), "iter,energy,residual");
    assert!(lines.next().unwrap().starts_with("0,"));
    let field = fs::read_to_string(out.path().join("solution.field")).unwrap();
    assert!(field.starts_with("pq-field v1 8 8 "));
    assert!(field.contains(&format!("# config_hash {hash}")));
    let dump = pqspectra_core::mesh::read_field_dump(field.as_bytes()).unwrap();
    assert_eq!(dump.values.len(), 81);
}

#[test]
fn exponent_at_one_is_a_config_error() {
    let out = TempDir::new().unwrap();
    let o = run("solve", &SUBLINEAR.replace("problem.p = 2", "problem.p = 1"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("C+"));
}

#[test]
fn malformed_config_reports_the_line() {
    let out = TempDir::new().unwrap();
    let o = run("solve", "mesh.nx = 8\nmesh.ny = \n", out.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let out = TempDir::new().unwrap();
    let file = out.path().join("occupied");
    fs::write(&file, "").unwrap();
    let o = run("solve", SUBLINEAR, &file.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn below_threshold_solve_exits_unconverged() {
    let out = TempDir::new().unwrap();
    let o = run("solve", &format!("{HOMOGENEOUS}problem.lambda = 1.0\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let report = json(&out.path().join("report.json"));
    assert_eq!(report["found"], false);
    assert!(report["failure"].as_str().unwrap().contains("below threshold"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let cfg_dir = TempDir::new().unwrap();
    let out = TempDir::new().unwrap();
    let cfg = write_config(cfg_dir.path(), SUBLINEAR);
    let o = pqspectra(&["thresholds", "--config", cfg.to_str().unwrap()], Some(out.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(out.path().join("thresholds.json").exists());
}

#[test]
fn sweep_is_sorted_single_point_capable_and_deterministic() {
    let grid = "sweep.min = 0.5\nsweep.max = 2.0\nsweep.steps = 3\nsweep.relative_to_sigma = true\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run("sweep", &format!("{HOMOGENEOUS}{grid}"), a.path(), &["--jobs", "2"]).status.code(), Some(0));
    assert_eq!(run("sweep", &format!("{HOMOGENEOUS}{grid}"), b.path(), &["--jobs", "1"]).status.code(), Some(0));
    let csv = fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.path().join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(text.lines().nth(1).unwrap(), "lambda,found,energy,residual,u_norm,sigma_ref");
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains(",false,") && rows[2].contains(",true,"));
    let sigma: Vec<&str> = rows.iter().map(|r| r.rsplit(',').next().unwrap()).collect();
    assert!(sigma.windows(2).all(|w| w[0] == w[1]));

    let one = "sweep.min = 50\nsweep.max = 50\nsweep.steps = 1\n";
    let c = TempDir::new().unwrap();
    assert_eq!(run("sweep", &format!("{HOMOGENEOUS}{one}"), c.path(), &[]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(c.path().join("sweep.csv")).unwrap().lines().count(), 3);
}

#[test]
fn sweep_requires_a_homogeneous_case_and_a_grid() {
    let out = TempDir::new().unwrap();
    assert_eq!(run("sweep", HOMOGENEOUS, out.path(), &[]).status.code(), Some(1));
    let grid = "sweep.min = 0.5\nsweep.max = 2.0\nsweep.steps = 3\n";
    assert_eq!(run("sweep", &format!("{SUBLINEAR}{grid}"), out.path(), &[]).status.code(), Some(1));
}

#[test]
fn thresholds_are_gated_by_case() {
    let out = TempDir::new().unwrap();
    assert_eq!(run("thresholds", SMALL_LAMBDA, out.path(), &[]).status.code(), Some(0));
    let t = json(&out.path().join("thresholds.json"));
    assert_eq!(t["case"], "SmallLambda-B");
    assert!(t["c_star"]["lambda_cap"].as_f64().unwrap() > 0.0);

    assert_eq!(run("thresholds", HOMOGENEOUS, out.path(), &[]).status.code(), Some(0));
    let t = json(&out.path().join("thresholds.json"));
    assert!(t["sigma"]["value"].as_f64().unwrap() > 0.0);

    assert_eq!(run("thresholds", SUPERLINEAR, out.path(), &[]).status.code(), Some(0));
    let t = json(&out.path().join("thresholds.json"));
    assert!(t["mountain_geometry"]["b"].as_f64().unwrap() > 0.0);
    assert!(t.get("c_star").is_none() && t.get("sigma").is_none());
}

#[test]
fn seed_and_tolerance_overrides_change_the_hash() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run("thresholds", SUBLINEAR, a.path(), &[]);
    run("thresholds", SUBLINEAR, b.path(), &["--seed", "4", "--tol", "1e-9"]);
    let (ha, hb) = (json(&a.path().join("thresholds.json")), json(&b.path().join("thresholds.json")));
    assert_ne!(ha["config_hash"], hb["config_hash"]);
    assert_eq!(hb["seed"], 4);
}
