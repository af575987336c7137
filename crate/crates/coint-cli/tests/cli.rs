//! End-to-end tests against the compiled binary: exit-code contract,
//! JSON schema stability, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn coint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coint"))
        .args(args)
        .env_remove("COINT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("JSON stdout")
}

fn write_fixture(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("coint-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

/// A strongly cointegrated fixture: y tracks 2x + noise.
fn coint_fixture() -> PathBuf {
    let sim = coint(&["simulate", "--t", "120", "--phi", "0.3", "--beta", "2.0", "--seed", "41"]);
    assert!(sim.status.success());
    write_fixture("coint.csv", &stdout_str(&sim))
}

/// A spurious pair: two independent random walks glued column-wise.
fn rw_fixture() -> PathBuf {
    let sim = coint(&["simulate", "--t", "150", "--phi", "1", "--seed", "42"]);
    assert!(sim.status.success());
    write_fixture("rw.csv", &stdout_str(&sim))
}

#[test]
fn test_detects_cointegrated_fixture() {
    let path = coint_fixture();
    let out = coint(&["test", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["test"]["cointegrated"], true);
    assert_eq!(doc["test"]["threshold_log_c"], 2.0);
}

#[test]
fn test_threshold_is_echoed() {
    let path = coint_fixture();
    let out = coint(&["test", path.to_str().unwrap(), "--threshold-log-c", "1.25"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["test"]["threshold_log_c"], 1.25);
}

#[test]
fn test_classical_baseline_included_on_request() {
    let path = coint_fixture();
    let out = coint(&["test", path.to_str().unwrap(), "--classical"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert!(doc["classical"]["tau"].is_f64());
    assert!(doc["classical"]["reject_unit_root"].is_boolean());
}

#[test]
fn two_row_csv_exits_2_naming_the_requirement() {
    let path = write_fixture("tiny.csv", "x,y\n1.0,2.0\n2.0,3.0\n");
    let out = coint(&["test", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("at least 3"));
}

#[test]
fn missing_columns_exit_2() {
    let path = write_fixture("cols.csv", "a,b\n1,2\n3,4\n5,6\n");
    let out = coint(&["test", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("`x` and `y`"));
}

#[test]
fn malformed_row_fails_unless_skip_bad() {
    let body = "x,y\n1.0,2.3\n2.0,oops\n3.0,3.9\n4.0,5.6\n2.5,3.1\n5.0,6.2\n6.5,8.0\n7.0,7.7\n8.0,9.4\n";
    let path = write_fixture("bad.csv", body);
    let strict = coint(&["test", path.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr_str(&strict).contains("line 3"));
    let lenient = coint(&["test", path.to_str().unwrap(), "--skip-bad"]);
    assert!(lenient.status.success(), "{}", stderr_str(&lenient));
}

#[test]
fn verdict_is_data_not_exit_status() {
    let path = rw_fixture();
    let out = coint(&["test", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(json(&out)["test"]["cointegrated"].is_boolean());
}

#[test]
fn segment_requires_transition_flags() {
    let path = coint_fixture();
    let out = coint(&["segment", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("--p-init-rw"));
}

#[test]
fn segment_forced_rw_labels_every_step_rw() {
    let path = rw_fixture();
    let out = coint(&[
        "segment",
        path.to_str().unwrap(),
        "--p-init-rw",
        "1",
        "--p-rw-to-rw",
        "1",
        "--p-c-to-c",
        "0.5",
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let doc = json(&out);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 149);
    for row in rows {
        assert_eq!(row["regime"], 1);
        assert_eq!(row["phi"], 1.0);
        assert_eq!(row["smoothed_rw_prob"], 1.0);
    }
}

#[test]
fn segment_emits_params_and_per_time_rows() {
    let path = coint_fixture();
    let out = coint(&[
        "segment",
        path.to_str().unwrap(),
        "--p-init-rw",
        "0.5",
        "--p-rw-to-rw",
        "0.95",
        "--p-c-to-c",
        "0.95",
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    for key in ["alpha", "beta", "sigma2"] {
        assert!(doc["params"][key].is_f64());
    }
    assert!(doc["loglik"].is_f64());
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 119);
    for row in rows {
        for key in ["t", "filtered_rw_prob", "smoothed_rw_prob", "phi"] {
            assert!(row[key].is_f64(), "missing {key}");
        }
    }
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let a = coint(&["simulate", "--t", "100", "--phi", "1", "--seed", "7"]);
    let b = coint(&["simulate", "--t", "100", "--phi", "1", "--seed", "7"]);
    let c = coint(&["simulate", "--t", "100", "--phi", "1", "--seed", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = stdout_str(&a);
    assert!(text.starts_with("t,x,y\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn experiment_rates_schema_and_determinism() {
    let out_path = std::env::temp_dir().join(format!("coint-rates-{}.csv", std::process::id()));
    let args = [
        "experiment",
        "rates",
        "--lengths",
        "20,30",
        "--n",
        "20",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ];
    let a = coint(&args);
    assert!(a.status.success(), "{}", stderr_str(&a));
    let csv_text = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv_text.starts_with("method,t_len,fp_rate,fn_rate,n_true_neg,n_true_pos\n"));
    assert_eq!(csv_text.lines().count(), 5);
    let b = coint(&args);
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["rates"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_rates_identical_across_thread_counts() {
    let args = ["experiment", "rates", "--lengths", "25", "--n", "16", "--seed", "9"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_coint"))
            .args(args)
            .env("COINT_THREADS", threads)
            .output()
            .expect("binary runs")
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn experiment_roc_reports_auc() {
    let out = coint(&["experiment", "roc", "--t", "40", "--n", "30", "--seed", "5"]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let doc = json(&out);
    let ab = doc["roc"]["auc_bayes"].as_f64().unwrap();
    let ac = doc["roc"]["auc_classical"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ab) && (0.0..=1.0).contains(&ac));
}

#[test]
fn bad_thread_env_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_coint"))
        .args(["simulate", "--t", "10", "--phi", "0.5"])
        .env("COINT_THREADS", "zero")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

/// Golden pin of the test-document schema: key set and version.
#[test]
fn test_json_schema_is_pinned() {
    let path = coint_fixture();
    let out = coint(&["test", path.to_str().unwrap(), "--classical"]);
    let doc = json(&out);
    let mut top: Vec<&str> = doc.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    top.sort_unstable();
    assert_eq!(top, ["classical", "input", "schema_version", "test"]);
    let mut test_keys: Vec<&str> = doc["test"]
        .as_object()
        .unwrap()
        .keys()
        .map(|s| s.as_str())
        .collect();
    test_keys.sort_unstable();
    assert_eq!(
        test_keys,
        [
            "cointegrated",
            "fitted",
            "log_bayes_factor",
            "log_l_c",
            "log_l_rw",
            "phi_moments",
            "threshold_log_c"
        ]
    );
}
