use std::path::Path;
use std::process::{Command, Output};

use cqr::bench::{Aggregate, RunRecord};

fn bench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqr-bench"))
        .arg("run")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("cqr-bench runs")
}

const SMALL: &[&str] = &["--n", "300", "--n-test", "500", "--dim", "8", "--reps", "2"];

#[test]
fn json_output_has_config_results_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = bench(
        &[
            SMALL,
            &["--regressor", "knn", "--gamma", "0.5", "--gamma", "0.8"],
        ]
        .concat(),
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["regressor"]["kind"], "knn");
    assert_eq!(v["config"]["alpha"], 0.1);
    let records: Vec<RunRecord> = serde_json::from_value(v["results"].clone()).unwrap();
    let aggregates: Vec<Aggregate> = serde_json::from_value(v["aggregates"].clone()).unwrap();
    assert_eq!(records.len(), 2 * 2 * 3);
    assert_eq!(aggregates.len(), 2 * 3);
    assert!(records
        .iter()
        .all(|r| r.n_test == 500 && r.n_train + r.n_calib == 300));
    // aggregates are recomputable from the emitted records at full precision
    assert_eq!(cqr::bench::aggregate(&records), aggregates);
}

#[test]
fn csv_format_writes_aggregate_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = bench(
        &[
            SMALL,
            &[
                "--regressor",
                "linear",
                "--epochs",
                "200",
                "--methods",
                "cqr,cqr-r",
                "--format",
                "csv",
            ],
        ]
        .concat(),
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,gamma,coverage_mean,coverage_std,width_mean,width_std,n_infinite,repetitions"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("CQR,0.75,"));
    assert!(rows[1].starts_with("CQR-r,0.75,"));
}

#[test]
fn bundled_csv_source_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/concrete_like.csv");
    let o = bench(
        &[
            "--source",
            "csv",
            "--csv-path",
            data,
            "--target",
            "#8",
            "--regressor",
            "qrf",
            "--trees",
            "20",
            "--reps",
            "1",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("CQR-m"), "{stderr}");
}

#[test]
fn same_flags_same_bytes_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = bench(
            &[
                SMALL,
                &["--regressor", "qrf", "--trees", "10", "--seed", seed],
            ]
            .concat(),
            &out,
        );
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a", "3"), run("b", "3"));
    assert_ne!(run("c", "3"), run("d", "4"));
}

#[test]
fn bad_input_exits_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    for args in [
        &["--alpha", "1.5"][..],
        &["--gamma", "0"],
        &["--methods", "cqr,bogus"],
        &["--tune", "sometimes"],
        &["--source", "csv"],
        &[
            "--source",
            "csv",
            "--csv-path",
            "/nonexistent.csv",
            "--target",
            "y",
        ],
    ] {
        let o = bench(args, &out);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(
            String::from_utf8_lossy(&o.stderr).contains("error"),
            "{args:?}"
        );
    }
    assert!(!out.exists());
}
