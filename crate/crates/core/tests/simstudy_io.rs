use std::fs;

use mmdcheck::simstudy::{
    derivative_ustats, emit_appendix_csv, emit_csv, illustrative_limits, illustrative_stats, read_appendix_csv, read_csv,
    run_appendix_b, run_experiment, Cell, Experiment, ExperimentConfig, ExperimentResult, ResultRow, TestName,
    APPENDIX_HEADER, POWER_HEADER,
};
use mmdcheck::MmdError;
use tempfile::TempDir;

fn row(param: f64, rejections: usize) -> ResultRow {
    let cell = Cell {
        index: 0,
        n: 500,
        p: 2,
        param,
    };
    ResultRow::new(Experiment::Example1, &cell, 4.5, TestName::Spec, rejections, 1000, 0)
}

#[test]
fn empty_result_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.csv");
    emit_csv(&ExperimentResult::default(), &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), format!("{POWER_HEADER}\n"));
    assert!(read_csv(&path).unwrap().rows.is_empty());
}

#[test]
fn three_rows_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("three.csv");
    let result = ExperimentResult {
        rows: vec![row(1.0, 51), row(1.1, 333), row(1.0 / 3.0, 1000)],
    };
    emit_csv(&result, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(!text.contains('"'));
    assert!(text.lines().nth(1).unwrap().starts_with("example1,500,2,1.0000000000000000e0,4.5000000000000000e0,spec_test,51,1000,"));
    assert_eq!(read_csv(&path).unwrap(), result);
    // overwrite is idempotent
    emit_csv(&result, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn rejects_foreign_header() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(matches!(read_csv(&path), Err(MmdError::Malformed { line: 1, .. })));
    fs::write(&path, format!("{POWER_HEADER}\nexample1,500,2,x,4.5,spec_test,1,2,0.5,0.1,0\n")).unwrap();
    assert!(matches!(read_csv(&path), Err(MmdError::Malformed { line: 2, .. })));
}

#[test]
fn emit_into_missing_directory_fails_cleanly() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("no/such/dir/out.csv");
    assert!(matches!(emit_csv(&ExperimentResult::default(), &path), Err(MmdError::Io(_))));
}

#[test]
fn grid_csv_is_worker_independent() {
    let dir = TempDir::new().unwrap();
    let base = ExperimentConfig {
        n_list: vec![80],
        p_list: vec![2, 4],
        param_grid: vec![1.2, 1.4],
        reps: 10,
        ..ExperimentConfig::paper_grid(Experiment::Example4)
    };
    let mut texts = Vec::new();
    for workers in [1, 2, 4] {
        let cfg = ExperimentConfig { workers, ..base.clone() };
        let path = dir.path().join(format!("w{workers}.csv"));
        emit_csv(&run_experiment(&cfg).unwrap(), &path).unwrap();
        texts.push(fs::read_to_string(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
    assert_eq!(texts[0].lines().count(), 1 + 2 * 2 * 3 * 2);
}

#[test]
fn appendix_csv_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("b.csv");
    let rows = run_appendix_b(&[30, 50], 40, 9, 2).unwrap();
    emit_appendix_csv(&rows, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some(APPENDIX_HEADER));
    assert_eq!(read_appendix_csv(&path).unwrap(), rows);
}

#[test]
fn fixed_location_statistic_is_centred() {
    let rows = run_appendix_b(&[100], 400, 4, 1).unwrap();
    let (fixed, est) = (&rows[0].summary, &rows[1].summary);
    assert!(fixed.mean.abs() < 0.15, "fixed mean {}", fixed.mean);
    assert!(est.sd > 0.0 && fixed.sd > 0.0);
}

#[test]
fn derivative_statistics_approach_closed_forms() {
    let s = illustrative_stats(200, 600, 8, 1e-5, 1).unwrap();
    let (v, m) = illustrative_limits();
    assert!((s.var_sqrtn_u1 - v).abs() < 0.06, "var {} vs {v}", s.var_sqrtn_u1);
    assert!((s.mean_u2 - m).abs() < 0.03, "mean {} vs {m}", s.mean_u2);
}

#[test]
fn derivative_step_halving_is_stable() {
    let a = illustrative_stats(100, 50, 3, 1e-5, 1).unwrap();
    let b = illustrative_stats(100, 50, 3, 5e-6, 1).unwrap();
    assert!((a.var_sqrtn_u1 - b.var_sqrtn_u1).abs() < 1e-4);
    assert!((a.mean_u2 - b.mean_u2).abs() < 1e-4);
}

#[test]
fn first_derivative_is_odd_in_the_samples() {
    // reflecting both samples flips the sign of the first derivative and
    // leaves the second unchanged
    let x: Vec<f64> = (0..30).map(|i| ((i * 37 % 29) as f64 - 14.0) / 7.0).collect();
    let y: Vec<f64> = (0..30).map(|i| ((i * 11 % 31) as f64 - 15.0) / 8.0).collect();
    let xr: Vec<f64> = x.iter().map(|v| -v).collect();
    let yr: Vec<f64> = y.iter().map(|v| -v).collect();
    let (a1, a2) = derivative_ustats(&x, &y, 1e-5);
    let (b1, b2) = derivative_ustats(&xr, &yr, 1e-5);
    assert!((a1 + b1).abs() < 1e-8);
    assert!((a2 - b2).abs() < 1e-4);
}
