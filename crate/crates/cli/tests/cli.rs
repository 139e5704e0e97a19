use std::path::Path;
use std::process::Command;

use qrl::format::{state_to_json, test_to_json};
use qrl::gen::{random_dense_state, random_qmlt, rng_for};
use qrl::{make_classical, make_tau, Bitstring, QSigmaPrefix, QuantumTest, Tolerances};
use qrl_cli::{evaluate, execute, run_suite, CliError, RunConfig, Suite};

fn qrl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrl"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn small_approx_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        suite: Suite::Approx,
        seed: 42,
        instance_count: 1,
        n_max: Some(4),
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let report = run_suite(&cfg).unwrap();
    assert!(report.passed());
    assert!(report.family("approx").any(|c| c.inequality == "Tr(M) < 4d/(δm)"));
    assert_eq!(report.summary.passed + report.summary.failed, report.summary.total);
    for f in ["approx.json", "approx.csv", "approx.timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn zero_instances_is_a_config_error() {
    let cfg = RunConfig { instance_count: 0, ..RunConfig::default() };
    assert!(matches!(execute(&cfg), Err(CliError::Config(_))));
}

#[test]
fn reports_are_deterministic() {
    let cfg = RunConfig { suite: Suite::Measures, seed: 5, instance_count: 2, n_max: Some(6), ..RunConfig::default() };
    let a = execute(&cfg).unwrap();
    let b = execute(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let other = execute(&RunConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.to_json().unwrap(), other.to_json().unwrap());
}

#[test]
fn tau_values_are_member_masses() {
    let mut rng = rng_for(3, 0, 0);
    let t = random_qmlt(&mut rng, 5, 4).unwrap();
    let r = evaluate(&make_tau(5).unwrap(), &t, 0.9).unwrap();
    for row in &r.members {
        assert!((row.value.unwrap() - row.mass).abs() < 1e-12);
    }
    assert!(!r.fails);
}

#[test]
fn zeros_fail_the_cylinder_test() {
    let tol = Tolerances::default();
    let gs = (1..=4).map(|m| QSigmaPrefix::cylinder(Bitstring::zeros(m), 6).unwrap()).collect();
    let t = QuantumTest::qmlt(gs, &tol).unwrap();
    let zeros = make_classical(Bitstring::zeros(6), 6).unwrap();
    for delta in [0.1, 0.5, 0.99] {
        assert!(evaluate(&zeros, &t, delta).unwrap().fails);
    }
}

#[test]
fn eval_files_match_library_calls() {
    let tol = Tolerances::default();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rng_for(4, 0, 0);
    let rho = random_dense_state(&mut rng, 4, 2).unwrap();
    let t = random_qmlt(&mut rng, 4, 3).unwrap();
    let sp = write(dir.path(), "state.json", &state_to_json(&rho).unwrap());
    let tp = write(dir.path(), "test.json", &test_to_json(&t).unwrap());
    let report = qrl_cli::eval_state_against_test(&sp, &tp, 0.3, &tol).unwrap();
    let direct = t.member_values(&rho).unwrap();
    for (row, v) in report.members.iter().zip(direct) {
        assert!((row.value.unwrap() - v.unwrap()).abs() < 1e-12);
    }
    assert_eq!(report.fails, qrl::fails_qmlt(&rho, &t, 0.3).unwrap());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let ok = qrl()
        .args(["run", "--suite", "lln", "--seed", "1", "--count", "1", "--n-max", "8", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(out.join("lln.json").exists());

    let bad = qrl().args(["run", "--count", "0", "--out"]).arg(&out).status().unwrap();
    assert_eq!(bad.code(), Some(2));
    let deep = qrl().args(["run", "--suite", "approx", "--n-max", "13", "--out"]).arg(&out).status().unwrap();
    assert_eq!(deep.code(), Some(2));
    let usage = qrl().args(["run", "--bogus"]).status().unwrap();
    assert_eq!(usage.code(), Some(2));

    let tight = qrl()
        .args(["run", "--suite", "lln", "--count", "1", "--n-max", "8", "--tol", "trace=0", "--delta", "0.5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(tight.code(), Some(0));
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", "suite = \"measures\"\ncount = 1\nn_max = 8\ndelta = 0.95\n");
    let status = qrl()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("r"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn generated_files_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let test = dir.path().join("t.json");
    let s = qrl().args(["gen-state", "--kind", "classical", "--depth", "6", "--bits", "0", "--out"]).arg(&state).status().unwrap();
    let t = qrl().args(["gen-test", "--kind", "cylinder", "--depth", "6", "--members", "4", "--out"]).arg(&test).status().unwrap();
    assert!(s.success() && t.success());
    let out = qrl().args(["eval", "--delta", "0.5", "--format", "json", "--state"]).arg(&state).arg("--test").arg(&test).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["fails"], serde_json::Value::Bool(true));
    assert_eq!(v["members"].as_array().unwrap().len(), 4);
}
