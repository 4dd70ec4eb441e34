use std::path::Path;
use std::process::{Command, Output};

fn procten(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procten"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) {
    std::fs::write(dir.join("run.json"), body).unwrap();
}

const FREE: &str = r#"{
  "bath": {"alpha": 0.0, "omega_c": 10, "temperature": 0.01},
  "grid": {"dt": 0.05, "k": 200},
  "solver": {"scheme": "nonlocal", "lambda_c": 1e-6}
}"#;

#[test]
fn decoupled_evolution_is_a_rabi_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), FREE);
    let out = procten(
        dir.path(),
        &["evolve", "--config", "run.json", "--out", "traj"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut rows = csv::Reader::from_path(dir.path().join("traj/trajectory.csv")).unwrap();
    let mut n = 0;
    for row in rows.records() {
        let row = row.unwrap();
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        let sz = v[1] - v[7];
        assert!((sz - v[0].cos()).abs() < 1e-10, "t = {}: {sz}", v[0]);
        n += 1;
    }
    assert_eq!(n, 201);
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), FREE);
    for out in ["a", "b"] {
        let o = procten(
            dir.path(),
            &[
                "spectrum",
                "--config",
                "run.json",
                "--k",
                "60",
                "--override",
                "bath.alpha=0.4",
                "--override",
                "task.anchor=20",
                "--override",
                "task.n_tau=40",
                "--override",
                "output.formats=[\"csv\",\"json\",\"mps\"]",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // everything except the output directory recorded in stats.json matches
    for name in [
        "g1_exact.csv",
        "spectrum_regression.csv",
        "spectrum_markov.csv",
        "influence.mps",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let stats = |d: &str| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(d).join("stats.json")).unwrap())
                .unwrap();
        v.as_object_mut().unwrap().remove("config_hash");
        v["config"]["output"]["directory"] = serde_json::Value::Null;
        v
    };
    assert_eq!(stats("a"), stats("b"));
    assert_eq!(stats("a")["bond_history"].as_array().unwrap().len(), 60);
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), FREE);
    let out = procten(
        dir.path(),
        &["evolve", "--config", "run.json", "--override", "grid.dt=-1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
    let out = procten(
        dir.path(),
        &[
            "evolve",
            "--config",
            "run.json",
            "--override",
            "solver.scheme=\"sideways\"",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.scheme"));
    let out = procten(dir.path(), &["evolve", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = procten(dir.path(), &["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn benchmark_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), FREE);
    let out = procten(
        dir.path(),
        &[
            "benchmark",
            "--config",
            "run.json",
            "--override",
            "task.ks=[10,20]",
            "--override",
            "task.warmup=false",
            "--out",
            "bench",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let jsonl = std::fs::read_to_string(dir.path().join("bench/bench.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4);
    for line in jsonl.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["valid"], true);
        assert!(r["max_bond"].as_array().unwrap().iter().all(|b| b == 1));
    }
}

#[test]
fn shipped_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        // an out-of-range override only fails after the file itself parsed
        let out = procten(
            dir.path(),
            &[
                "evolve",
                "--config",
                path.to_str().unwrap(),
                "--override",
                "solver.lambda_c=5",
            ],
        );
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{}", path.display());
        assert!(err.contains("solver.lambda_c"), "{}: {err}", path.display());
    }
}
