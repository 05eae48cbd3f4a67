use std::path::PathBuf;
use std::process::{Command, Output};

fn instance(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("instances")
        .join(name)
}

fn fairfluid(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairfluid"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("FAIRFLUID_THREADS", n);
    }
    cmd.output().unwrap()
}

#[test]
fn repro_exit_codes() {
    for name in ["prop1", "prop2", "pof", "theorem1"] {
        let out = fairfluid(&["repro", name], None);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = fairfluid(&["repro", "prop2", "--alpha", "1.5"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fairfluid(&["repro", "nope"], None).status.code(), Some(2));
}

#[test]
fn output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "0"] {
        let path = dir.path().join(format!("prop1-{threads}.json"));
        let out = fairfluid(
            &[
                "repro",
                "prop1",
                "--format",
                "json",
                "--out",
                path.to_str().unwrap(),
            ],
            Some(threads),
        );
        assert!(out.status.success());
        let text = std::fs::read_to_string(&path).unwrap();
        outputs.push(text.replace(path.to_str().unwrap(), ""));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(
        fairfluid(&["repro", "prop2"], Some("many")).status.code(),
        Some(2)
    );
}

#[test]
fn audit_gates_on_fairness() {
    let prop2 = instance("prop2.json");
    let prop2 = prop2.to_str().unwrap();
    let unfair = fairfluid(
        &[
            "audit",
            "--instance",
            prop2,
            "--policy",
            "slashing",
            "--delta",
            "0.05",
            "--format",
            "json",
        ],
        None,
    );
    assert_eq!(unfair.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&unfair.stdout).unwrap();
    assert!((report["gap"].as_f64().unwrap() - 34.0 / 195.0).abs() < 1e-12);
    assert_eq!(report["fair"], false);
    let fair = fairfluid(
        &["audit", "--instance", prop2, "--policy", "static:0.3,0.7"],
        None,
    );
    assert!(fair.status.success());
}

#[test]
fn optimize_json_fields() {
    let out = fairfluid(
        &[
            "optimize",
            "--instance",
            instance("prop1.json").to_str().unwrap(),
            "--grid",
            "0.005",
            "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for field in ["x_star", "n_star", "value", "grid_resolution", "refined"] {
        assert!(result.get(field).is_some(), "{field}");
    }
    assert!((result["value"].as_f64().unwrap() - 362.5).abs() < 1e-6);
}

#[test]
fn simulate_and_steady_csv() {
    let prop2 = instance("prop2.json");
    let prop2 = prop2.to_str().unwrap();
    let sim = fairfluid(
        &[
            "simulate",
            "--instance",
            prop2,
            "--policy",
            "slashing",
            "--horizon",
            "3",
        ],
        None,
    );
    assert!(sim.status.success());
    let text = String::from_utf8(sim.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,type,cohort,mass,payout_index");
    // four states, two types, one cohort
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert_eq!(lines[3], "1,0,0,0.1,1");

    let steady = fairfluid(
        &[
            "steady",
            "--instance",
            prop2,
            "--policy",
            "slashing",
            "--format",
            "json",
        ],
        None,
    );
    assert!(steady.status.success());
    let profile: serde_json::Value = serde_json::from_slice(&steady.stdout).unwrap();
    assert!((profile["avg_profit"].as_f64().unwrap() - 0.79).abs() < 1e-12);
}

#[test]
fn bad_inputs_exit_with_usage_errors() {
    let missing = fairfluid(
        &["optimize", "--instance", "/nonexistent/instance.json"],
        None,
    );
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot access"));
    let bad_policy = fairfluid(
        &[
            "steady",
            "--instance",
            instance("prop2.json").to_str().unwrap(),
            "--policy",
            "cyclic:0,1;1",
        ],
        None,
    );
    assert_eq!(bad_policy.status.code(), Some(2));
}
