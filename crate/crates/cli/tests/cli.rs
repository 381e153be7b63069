use std::path::Path;
use std::process::{Command, Output};

use qnee_cli::commands::{read_csv, AggregateRow, GroundRow, TrialRow};

fn qnee(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnee"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QNEE_SEED")
        .output()
        .unwrap()
}

const TINY: [&str; 12] = [
    "--shots", "2000",
    "--set", "qnee.n_outer=2",
    "--set", "qnee.net.hidden_width=16",
    "--set", "qnee.net.embed_dim=8",
    "--set", "qnee.nn_initial.n_iter=200",
    "--set", "vqse.n_iter=4",
];

fn estimate(extra: &[&str], out: &Path) -> Output {
    let mut args = vec!["estimate"];
    args.extend(TINY);
    args.extend(extra);
    qnee(&args, out)
}

#[test]
fn single_point_grid_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = qnee(&["ground-state", "--lambda-grid", "3.0", "--subsystem", "3"], dir.path());
    assert!(o.status.success());
    let rows: Vec<GroundRow> = read_csv(&dir.path().join("ground_state.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].lambda, 3.0);
    assert!(rows[0].exact_entropy.abs() < 1e-6);
}

#[test]
fn tables_round_trip_and_aggregate_matches_trials() {
    let dir = tempfile::tempdir().unwrap();
    let o = estimate(&["--lambda-grid", "0.5,2.5", "--subsystem", "2", "--trials", "3", "--method", "both"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let agg: Vec<AggregateRow> = read_csv(&dir.path().join("aggregate.csv")).unwrap();
    let trials: Vec<TrialRow> = read_csv(&dir.path().join("trials.csv")).unwrap();
    assert_eq!(agg.len(), 4);
    assert_eq!(trials.len(), 12);

    let mut buf = csv::Writer::from_writer(Vec::new());
    for r in &agg {
        buf.serialize(r).unwrap();
    }
    let emitted = String::from_utf8(buf.into_inner().unwrap()).unwrap();
    assert_eq!(emitted, std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap());

    for a in &agg {
        let xs: Vec<f64> = trials
            .iter()
            .filter(|t| t.method == a.method && t.lambda == a.lambda && t.subsystem == a.subsystem)
            .map(|t| t.estimate)
            .collect();
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(a.min, Some(min));
        assert!(a.min.unwrap() <= a.mean.unwrap());
        if a.method == "qnee" {
            assert_eq!(a.estimate, a.min);
        }
    }
}

#[test]
fn exact_method_writes_only_oracle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = estimate(&["--lambda-grid", "1.0", "--subsystem", "2,3", "--method", "exact"], dir.path());
    assert!(o.status.success());
    let agg: Vec<AggregateRow> = read_csv(&dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.len(), 2);
    assert!(agg.iter().all(|r| r.method == "exact" && r.abs_error == Some(0.0)));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qnee(&["estimate", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(qnee(&["ground-state", "--subsystem", "8"], dir.path()).status.code(), Some(1));
    assert_eq!(qnee(&["ground-state", "--set", "nope=1"], dir.path()).status.code(), Some(1));
    assert_eq!(
        qnee(&["ground-state", "--lambda-grid", "1:0:2"], dir.path()).status.code(),
        Some(1)
    );

    let o = Command::new(env!("CARGO_BIN_EXE_qnee"))
        .args(["oracle-check", "--mutate", "gibbs-sign"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL gibbs-bound"));
    assert!(text.contains("checks run: 10"));

    let o = Command::new(env!("CARGO_BIN_EXE_qnee")).arg("oracle-check").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn diverging_cells_exit_3_after_writing_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let o = estimate(
        &[
            "--lambda-grid", "0.5",
            "--subsystem", "2",
            "--method", "both",
            "--trials", "1",
            "--set", "qnee.nn_initial.learning_rate=1e6",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let agg: Vec<AggregateRow> = read_csv(&dir.path().join("aggregate.csv")).unwrap();
    let q = agg.iter().find(|r| r.method == "qnee").unwrap();
    let v = agg.iter().find(|r| r.method == "vqse").unwrap();
    assert!(q.estimate.is_none() && q.status != "ok");
    assert!(v.estimate.is_some() && v.status == "ok");
}

#[test]
fn environment_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qnee"))
        .args(["ground-state", "--out"])
        .arg(dir.path())
        .env("QNEE_LAMBDA_GRID", "0.25,2.75")
        .env("QNEE_SUBSYSTEM", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let rows: Vec<GroundRow> = read_csv(&dir.path().join("ground_state.csv")).unwrap();
    let got: Vec<(f64, usize)> = rows.iter().map(|r| (r.lambda, r.subsystem)).collect();
    assert_eq!(got, vec![(0.25, 1), (2.75, 1)]);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "lambda_grid = [1.0]\nsubsystems = [2]\nmethod = \"exact\"\n").unwrap();
    let o = qnee(&["estimate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let agg: Vec<AggregateRow> = read_csv(&dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.len(), 1);
}
