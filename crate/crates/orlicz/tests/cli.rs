use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orlicz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn radial_oracle_certifies_with_unit_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = orlicz(&["check", "radial-oracle", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("radial-oracle.check.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(num(&report["beta_a0"]), 1.0);
    assert_eq!(num(&report["growth"]["l_p"]), 1.0);
    assert_eq!(num(&report["growth"]["l_q"]), 1.0);
    assert_eq!(num(&report["a1"][0]["outcome"]["beta"]), 1.0);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn double_phase_preset_passes_with_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = orlicz(&["check", "double-phase-corollary", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("double-phase-corollary.check.json"));
    for entry in report["a1"].as_array().unwrap() {
        let beta = num(&entry["outcome"]["beta"]);
        assert!(beta > 0.0 && beta <= 1.0);
    }
}

#[test]
fn wide_double_phase_fails_a1_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wide.toml");
    std::fs::write(
        &cfg,
        r#"
preset = "double-phase-corollary"
name = "wide"

[phi]
variant = "double-phase"
p = 2.0
q = 8.0
weight = { rule = "radial-power", coefficient = 1.0, power = 1.0 }

[envelope]
p = 2.0
q = 8.0
a1_balls = [{ center = [0.0, 0.0], radius = 1e-12 }]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = orlicz(&["check", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let report = json(&out_dir.join("wide.check.json"));
    assert_eq!(report["passed"], false);
    assert!(report["a1"][0]["failure"].as_str().unwrap().contains("A1"), "{report}");
    assert!(report.get("envelope").is_none());

    // solving needs the override
    let out = orlicz(&["solve", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(), "--h", "0.125"]);
    assert_eq!(code(&out), 4);
    assert!(!out_dir.join("wide.field.csv").exists());
}

fn constant_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("flat.toml");
    std::fs::write(
        &cfg,
        r#"
preset = "radial-oracle"
name = "flat"
boundary = { rule = "constant", value = 2.0 }
exact = { rule = "constant", value = 2.0 }

[mesh]
h = 0.0625
"#,
    )
    .unwrap();
    cfg
}

#[test]
fn constant_data_gives_constant_field_and_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = constant_config(dir.path());
    let out = orlicz(&["solve", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("flat.report.json"));
    assert_eq!(num(&report["report"]["energy"]), 0.0);
    assert_eq!(num(&report["sup_error"]), 0.0);
    let field = orlicz::io::read_field_csv(&dir.path().join("flat.field.csv")).unwrap();
    assert!(field.values.iter().all(|v| *v == 2.0));
    assert_eq!(field.comment("config-sha256"), report["config_sha256"].as_str());
}

#[test]
fn verify_on_a_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = constant_config(dir.path());
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&orlicz(&["solve", cfg.to_str().unwrap(), "--out-dir", d])), 0);
    let field = dir.path().join("flat.field.csv");
    let out = orlicz(&["verify", cfg.to_str().unwrap(), field.to_str().unwrap(), "--out-dir", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("flat.verify.json"));
    assert_eq!(v["passed"], true);
    let r = &v["entries"][0]["report"];
    assert_eq!(num(&r["harnack_quotient"]), 1.0);
    assert_eq!(num(&r["bloch_integral"]), 0.0);
    assert_eq!(num(&r["caccioppoli"]["lhs"]), 0.0);
    assert_eq!(r["monotonicity"]["passed"], true);
}

#[test]
fn verify_names_the_failing_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = constant_config(dir.path());
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&orlicz(&["solve", cfg.to_str().unwrap(), "--out-dir", d, "--h", "0.03125"])), 0);
    // a bump in the middle of the ball breaks monotonicity and the residual
    let path = dir.path().join("flat.field.csv");
    let mut file = orlicz::io::read_field_csv(&path).unwrap();
    let domain = orlicz_core::function_spaces::TriangulatedDomain::build(
        orlicz_core::function_spaces::Shape::Annulus {
            center: [0.0, 0.0],
            inner: 0.25,
            outer: 1.0,
        },
        0.03125,
    )
    .unwrap();
    let c = [0.6, 0.0];
    for (p, v) in file.points.iter().zip(file.values.iter_mut()) {
        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        *v += (1.0 - d2 / 0.0081).max(0.0);
    }
    let u = file.on(&domain).unwrap();
    let bytes = orlicz::io::field_csv(&domain, &u, &[]).unwrap();
    std::fs::write(&path, bytes).unwrap();
    let out = orlicz(&["verify", cfg.to_str().unwrap(), path.to_str().unwrap(), "--out-dir", d, "--h", "0.03125"]);
    assert_eq!(code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("monotonicity"), "{stderr}");
    assert!(stderr.contains("residual"), "{stderr}");
}

#[test]
fn non_convergence_exits_three_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(
        &cfg,
        "preset = \"radial-oracle\"\nname = \"short\"\n[mesh]\nh = 0.0625\n[solver]\nmax_iterations = 1\n",
    )
    .unwrap();
    let out = orlicz(&["solve", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let report = json(&dir.path().join("short.report.json"));
    assert_eq!(report["report"]["termination"], "max-iterations");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&orlicz(&["check", "no-such-preset"])), 2);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"radial-oracle\"\nbogus = 1\n").unwrap();
    assert_eq!(code(&orlicz(&["check", cfg.to_str().unwrap()])), 2);
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&orlicz(&["check", "radial-oracle", "--out-dir", d])), 0);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&orlicz(&["verify", "radial-oracle", missing.to_str().unwrap(), "--out-dir", d])), 2);
}

#[test]
fn sweep_rows_are_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.toml");
    std::fs::write(
        &sweep,
        "name = \"radii\"\nscenarios = [\"var-exp-example\", \"double-phase-corollary\"]\nr = [0.25, 0.125, 0.0625]\nh = [0.0625]\n",
    )
    .unwrap();
    let run = |out: &Path| {
        let o = orlicz(&["sweep", sweep.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("radii.sweep.csv")).unwrap()
    };
    let a = run(&dir.path().join("a"));
    let b = run(&dir.path().join("b"));
    assert_eq!(a, b);

    let text = String::from_utf8(a.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config-sha256="));
    assert_eq!(lines.next().unwrap(), orlicz::sweep::COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[..3].iter().all(|r| r.starts_with("var-exp-example,")));
    assert!(rows.iter().all(|r| r.contains(",true,")));

    // a rerun resumes every row and leaves the table unchanged
    let again = run(&dir.path().join("a"));
    assert_eq!(again, a);
    let timing = std::fs::read_to_string(dir.path().join("a/radii.sweep.timing.csv")).unwrap();
    assert_eq!(timing.lines().filter(|l| l.ends_with(",true")).count(), 2);
}

#[test]
fn larger_lambda_max_does_not_raise_the_energy() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("lam.toml");
    std::fs::write(
        &sweep,
        "name = \"lam\"\nscenarios = [\"var-exp-example\"]\nlambda_max = [16.0, 256.0, 4096.0]\nr = [0.125]\nh = [0.0625]\n",
    )
    .unwrap();
    let out = orlicz(&["sweep", sweep.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    // truncated schedules stop before the sup-difference rule is met
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("schedule ended"));
    let text = std::fs::read_to_string(dir.path().join("lam.sweep.csv")).unwrap();
    let energies: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(energies.len(), 3);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{energies:?}");
}
