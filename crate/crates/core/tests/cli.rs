//! End-to-end checks of the command line tool: exit codes, payload
//! shapes and byte-level reproducibility.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wpsim"))
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("wpsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn analytics_smoke() {
    let out = bin()
        .args(["analytics", "--d", "3", "--tol", "1e-12"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["profile"]["d"], 3.0);
    assert_eq!(v["identities"]["all_pass"], true);
    let a_star = v["profile"]["alpha_star"].as_f64().unwrap();
    assert!((a_star - 0.335).abs() < 5e-4);
}

#[test]
fn analytics_rejects_bad_density() {
    let out = bin().args(["analytics", "--d", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wp_classifies_matrix_file() {
    let dir = tempdir();
    let path = dir.join("three_var.txt");
    // rows {v0+v1, v0+v1, v1+v2}
    std::fs::write(&path, "3 3\n0 0\n0 1\n1 0\n1 1\n2 1\n2 2\n").unwrap();
    let out = bin()
        .args(["wp", "--input", path.to_str().unwrap(), "--dump"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["V_s"], serde_json::json!([0, 1]));
    assert_eq!(v["C_s"], serde_json::json!([0, 1]));
    assert_eq!(v["V_other"], serde_json::json!([2]));
    assert_eq!(v["n_s"], 2);
    assert_eq!(v["rounds"], 2);
    assert!(v["messages"].as_array().unwrap().len() == 6);
}

#[test]
fn wp_missing_file_is_runtime_error() {
    let out = bin()
        .args(["wp", "--input", "/nonexistent/m.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn slush_summary() {
    let dir = tempdir();
    let path = dir.join("cycle.txt");
    std::fs::write(&path, "2 2\n0 0\n0 1\n1 0\n1 1\n").unwrap();
    let out = bin()
        .args(["slush", "--input", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_s"], 2);
    assert_eq!(v["m_s"], 2);
    assert_eq!(v["contraction"]["cycle_rank"], 1);
    assert_eq!(v["canonical_flipper"], serde_json::json!([0, 1]));
}

#[test]
fn experiment_reports_are_byte_identical() {
    let dir = tempdir();
    let f1 = dir.join("r1.json");
    let f2 = dir.join("r2.json");
    for f in [&f1, &f2] {
        let out = bin()
            .args([
                "experiment",
                "two-point",
                "--n",
                "80",
                "--d",
                "2.0",
                "--trials",
                "3",
                "--seed",
                "42",
                "--no-timestamp",
                "--out",
                f.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let b1 = std::fs::read(&f1).unwrap();
    let b2 = std::fs::read(&f2).unwrap();
    assert_eq!(b1, b2, "same seed and config must give identical payloads");
}

#[test]
fn experiment_worker_count_does_not_change_payload() {
    let dir = tempdir();
    let f1 = dir.join("w1.json");
    let f2 = dir.join("w2.json");
    for (f, workers) in [(&f1, "1"), (&f2, "4")] {
        let out = bin()
            .env("WPSIM_WORKERS", workers)
            .args([
                "experiment",
                "overlap",
                "--n",
                "60",
                "--d",
                "1.5",
                "--trials",
                "4",
                "--samples",
                "20",
                "--seed",
                "9",
                "--no-timestamp",
                "--out",
                f.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn experiment_requires_seed() {
    let out = bin()
        .args([
            "experiment",
            "two-point",
            "--n",
            "50",
            "--d",
            "1.0",
            "--trials",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_rejects_unknown_kind_and_bad_config() {
    let out = bin()
        .args(["experiment", "nonsense", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args([
            "experiment",
            "two-point",
            "--n",
            "50",
            "--d",
            "1.0",
            "--trials",
            "1",
            "--seed",
            "1",
            "--epsilon",
            "0.9",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_config_file_with_flag_override() {
    let dir = tempdir();
    let cfg_path = dir.join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"kind":"two-point","n":60,"d":1.0,"trials":5,"seed":1}"#,
    )
    .unwrap();
    let out_path = dir.join("cfg_report.json");
    let out = bin()
        .args([
            "experiment",
            "two-point",
            "--config",
            cfg_path.to_str().unwrap(),
            "--trials",
            "2",
            "--seed",
            "77",
            "--no-timestamp",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["n"], 60, "config file value survives");
    assert_eq!(v["config"]["trials"], 2, "flag overrides the file");
    assert_eq!(v["config"]["seed"], 77);
    assert_eq!(v["per_trial"].as_array().unwrap().len(), 2);
}

#[test]
fn experiment_writes_csv() {
    let dir = tempdir();
    let csv_path = dir.join("rows.csv");
    let out = bin()
        .args([
            "experiment",
            "slush",
            "--n",
            "200",
            "--d",
            "3.0",
            "--trials",
            "2",
            "--seed",
            "5",
            "--no-timestamp",
            "--csv",
            csv_path.to_str().unwrap(),
            "--out",
            dir.join("slush.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("trial,f,f_hat"));
    assert_eq!(lines.count(), 2);
}
