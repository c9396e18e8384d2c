use std::path::Path;
use std::process::{Command, Output};

use fraclab::cli::SEED_ENV;
use serde_json::Value;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn fraclab(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fraclab"));
    cmd.args(args).env_remove(SEED_ENV);
    if let Some(s) = seed {
        cmd.env(SEED_ENV, s);
    }
    cmd.output().unwrap()
}

fn run(sub: &str, cfg: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    fraclab(&args, None)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eigen_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let csv = dir.path().join("out.csv");
    let cfg = write(
        dir.path(),
        "eig.json",
        &format!(
            r#"{{"domain": {{"intervals": [[-1, 1]]}}, "s": 0.5, "n": 64, "k_max": 3,
                "output": {{"json": "{}", "csv": "{}"}}}}"#,
            json.display(),
            csv.display()
        ),
    );
    let o = run("eigen", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,lambda,gap");
    assert_eq!(lines.len(), 4);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let l1 = v["runs"][0]["modes"][0]["lambda"].as_f64().unwrap();
    assert!((l1 - 1.1578).abs() < 1e-3, "lambda_1 = {l1}");
    assert_eq!(stdout(&o), text);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eig.json", r#"{"domain": {"intervals": [[-1, -0.2], [0.3, 1]]}, "s": [0.3, 0.6], "n": [16, 32]}"#);
    let a = run("eigen", &cfg, &["--jobs", "1"]);
    let b = run("eigen", &cfg, &["--jobs", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("s,n,k,lambda,gap\n"));
}

#[test]
fn flag_overrides_replace_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eig.json", r#"{"domain": {"intervals": [[-1, 1]]}, "s": [0.3, 0.6], "n": 16}"#);
    let o = run("eigen", &cfg, &["--s", "0.4", "--n", "32"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("k,lambda,gap\n"));
}

#[test]
fn passing_identity_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rs.json",
        r#"{"domain": {"intervals": [[-1, 1]]}, "identity": "ros-oton-serra", "s": 0.5, "n": [64, 128], "tol": 0.1}"#,
    );
    let o = run("verify", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("identity,s,n,lhs,rhs,rel_residual,pass\n"));
    assert!(out.trim_end().ends_with("PASS"));
}

#[test]
fn failing_identity_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rs.json",
        r#"{"domain": {"intervals": [[-1, 1]]}, "identity": "ros-oton-serra", "s": 0.5, "n": 32}"#,
    );
    let o = run("verify", &cfg, &["--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).trim_end().ends_with("FAIL"));
}

#[test]
fn inward_field_fails_flux_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "neg.json",
        r#"{"domain": {"implicit2d": {"g": "x^2 + y^2 - 1", "bbox": [-2, 2, -2, 2]}},
            "field": {"dim": 2, "components": ["-x", "-y"], "box": [[-2, 2], [-2, 2]]},
            "certificates": ["flux"]}"#,
    );
    assert_eq!(run("certify", &cfg, &[]).status.code(), Some(1));
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eig.json", r#"{"domain": {"intervals": [[-1, 1]]}}"#);
    assert_eq!(run("eigen", &cfg, &["--n", "100"]).status.code(), Some(2));
    assert_eq!(run("eigen", &cfg, &["--s", "1.5"]).status.code(), Some(2));
    let unknown = write(dir.path(), "bad.json", r#"{"domian": {"intervals": [[-1, 1]]}}"#);
    assert_eq!(run("eigen", &unknown, &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run("eigen", &missing, &[]).status.code(), Some(2));
    let overlap = write(dir.path(), "ov.json", r#"{"domain": {"intervals": [[-1, 1], [0.5, 2]]}}"#);
    assert_eq!(run("eigen", &overlap, &[]).status.code(), Some(2));
    let bump = write(
        dir.path(),
        "l21.json",
        r#"{"domain": {"intervals": [[-1, 1]]}, "identity": "lemma21", "bump": {"center": 0.5, "radius": 0.5},
            "field": {"dim": 1, "components": ["x"], "box": [[-2, 2]]}}"#,
    );
    assert_eq!(run("verify", &bump, &[]).status.code(), Some(2));
    assert_eq!(fraclab(&["nonsense"], None).status.code(), Some(2));
}

#[test]
fn seed_variable_changes_sampling_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"field": {"dim": 2, "components": ["x + 0.1x^3", "y"], "box": [[-1, 1], [-1, 1]]},
            "certificates": ["c1_c2_condition"], "samples": 200}"#,
    );
    let args = ["certify", "--config", cfg.to_str().unwrap()];
    let a = fraclab(&args, Some("1"));
    let b = fraclab(&args, Some("1"));
    let c = fraclab(&args, Some("2"));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(fraclab(&args, Some("not-a-number")).status.code(), Some(2));
}

#[test]
fn certify_reports_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"constants": [1.5, 1.0], "dim": 2, "query_s": [0.25]}"#);
    let o = run("certify", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("s = 2.5000000000000000e-1: nonexistence for p > 8.0000000000000000e0"));
}

#[test]
fn hadamard_even_only_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("h.json");
    let cfg = write(
        dir.path(),
        "h.json.in",
        &format!(
            r#"{{"domain": {{"intervals": [[-2, -1], [1, 2]]}}, "identity": "hadamard", "s": 0.5, "n": 256,
                "k": 1, "even_only": true, "output": {{"json": "{}"}}}}"#,
            json.display()
        ),
    );
    let o = run("verify", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let r = &v["reports"][0];
    assert_eq!(r["even_only"], Value::Bool(true));
    assert!(r["fd_slope"].as_f64().unwrap() < 0.0);
    assert!(r["rel_error"].as_f64().unwrap() < 0.05);
}

#[test]
fn semilinear_and_fraclap_run() {
    let dir = tempfile::tempdir().unwrap();
    let semi = write(
        dir.path(),
        "semi.json",
        r#"{"domain": {"intervals": [[-1, 1]]}, "s": 0.5, "n": 64, "nonlinearity": {"kind": "power", "p": 3}}"#,
    );
    let o = run("semilinear", &semi, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("s,n,p,iterations,residual,max,pohozaev_rel_residual\n"));
    let fl = write(
        dir.path(),
        "fl.json",
        r#"{"function": "1 - x^2", "support": [-1, 1], "s": 0.5, "points": [0, 0.5]}"#,
    );
    let o = run("fraclap", &fl, &[]);
    assert_eq!(o.status.code(), Some(0));
    // (-Δ)^{1/2}(1 - x²)_+ = (2/π)(2 - x ln((1 + x)/(1 - x))) on (-1, 1)
    for line in stdout(&o).lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let x = cols[1];
        let want = 2.0 / std::f64::consts::PI * (2.0 - x * ((1.0 + x) / (1.0 - x)).ln());
        assert!((cols[2] - want).abs() < 1e-6, "{line}");
    }
}
