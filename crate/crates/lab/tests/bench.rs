use std::fs;
use std::process::Command;

use stokes_core::mesh::build_unit_square_mesh;
use stokes_core::multigrid::AmgMode;
use stokes_core::stokes::{NullspacePolicy, SchurPrecondKind};
use stokes_lab::bench::{
    compute_eff, emit_csv, history_path, read_csv, run_experiment, CsvRow, ExperimentConfig, MeshSource, Method,
    RunRecord, CSV_HEADER,
};
use stokes_lab::io::{read_mesh, write_mesh};

fn small(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        levels: vec![4],
        mu: vec![1.0],
        lambda: vec![0.0],
        method,
        ..ExperimentConfig::default()
    }
}

#[test]
fn one_record_gives_header_and_one_row() {
    let report = run_experiment(&small(Method::Method1)).unwrap();
    assert_eq!(report.records.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    emit_csv(&report, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER.join(","));
    let hist = fs::read_to_string(history_path(&path, 0)).unwrap();
    assert_eq!(hist.lines().count(), report.records[0].history.len() + 1);
}

#[test]
fn csv_round_trips() {
    let cfg = ExperimentConfig {
        levels: vec![3, 4],
        mu: vec![1.0, 1e-4],
        lambda: vec![0.0, 10.0],
        ..small(Method::Method1)
    };
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    emit_csv(&report, &path).unwrap();
    let rows = read_csv(&path).unwrap();
    let expected: Vec<CsvRow> = report.records.iter().map(CsvRow::from).collect();
    assert_eq!(rows, expected);
}

#[test]
fn eff_column_matches_wall_time_and_dofs() {
    let report = run_experiment(&small(Method::Projection)).unwrap();
    for r in &report.records {
        assert!(r.converged);
        assert_eq!(r.eff_ms, compute_eff(r.wall_s, 1, r.dofs));
    }
}

#[test]
fn record_count_is_the_sweep_size_and_failures_are_kept() {
    let cfg = ExperimentConfig {
        levels: vec![3, 4],
        mu: vec![1.0, 1e-2, 1e-4],
        lambda: vec![0.0, 1.0],
        ..small(Method::Method1)
    };
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 12);
    let order: Vec<(usize, f64, f64)> = report.records.iter().map(|r| (r.level, r.mu, r.lambda)).collect();
    assert_eq!(order[0], (3, 1.0, 0.0));
    assert_eq!(order[1], (3, 1.0, 1.0));
    assert_eq!(order[11], (4, 1e-4, 1.0));
    // a cap of one iteration cannot reach the tolerance
    let starved = ExperimentConfig { max_iter: 1, ..cfg };
    let report = run_experiment(&starved).unwrap();
    assert_eq!(report.records.len(), 12);
    assert!(report.records.iter().all(|r| !r.converged));
    assert!(!report.all_converged());
}

fn deterministic_part(r: &RunRecord) -> (usize, usize, Option<f64>, Option<f64>, Vec<f64>) {
    (r.outer_iters, r.inner_iters, r.vel_err, r.press_err, r.history.clone())
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let cfg = ExperimentConfig {
        levels: vec![3, 4],
        mu: vec![1.0, 1e-2],
        method: Method::Method2,
        ..small(Method::Method2)
    };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&ExperimentConfig { threads: 3, ..cfg }).unwrap();
    let da: Vec<_> = a.records.iter().map(deterministic_part).collect();
    let db: Vec<_> = b.records.iter().map(deterministic_part).collect();
    assert_eq!(da, db);
}

#[test]
fn every_method_runs() {
    for method in [
        Method::Method1,
        Method::Method2,
        Method::Projection,
        Method::VelocityOnly,
        Method::BmbtOnly,
    ] {
        let report = run_experiment(&small(method)).unwrap();
        let r = &report.records[0];
        assert!(r.converged, "{method:?}: {:?}", r.error);
        assert!(r.worst_residual_ratio <= 1.0 + 1e-12, "{method:?}");
        assert_eq!(r.vel_err.is_some(), method != Method::BmbtOnly);
        assert_eq!(r.press_err.is_some(), method != Method::VelocityOnly);
    }
}

#[test]
fn loaded_meshes_are_refined_per_level() {
    let coarse = build_unit_square_mesh(2, 0.1, 3).unwrap().with_open_right_side();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coarse.mesh");
    write_mesh(&coarse, &path).unwrap();
    let cfg = ExperimentConfig {
        levels: vec![0, 1],
        mesh: MeshSource::Loaded(read_mesh(&path).unwrap()),
        policy: NullspacePolicy::OpenBoundary,
        schur_precond: SchurPrecondKind::C {
            a: AmgMode::TWO_VC,
            b: AmgMode::TWO_VC,
        },
        ..small(Method::Method1)
    };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.all_converged());
    assert!(report.records[1].dofs > 3 * report.records[0].dofs);
    // the open side needs the matching nullspace policy
    let wrong = ExperimentConfig {
        policy: NullspacePolicy::ProjectMeanZero,
        ..cfg
    };
    assert!(run_experiment(&wrong).is_err());
}

#[test]
fn cli_writes_csv_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cli.csv");
    let mesh = dir.path().join("m.mesh");
    let mats = dir.path().join("mats");
    let status = Command::new(env!("CARGO_BIN_EXE_stokes-lab"))
        .args([
            "--levels",
            "3",
            "--mu",
            "1,1e-2",
            "--method",
            "method2",
            "--schur-precond",
            "c-th-2vc",
        ])
        .arg("--out")
        .arg(&out)
        .arg("--dump-mesh")
        .arg(&mesh)
        .arg("--dump-matrix")
        .arg(&mats)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("c-th-2vc+a3-2vc"), "{stdout}");
    assert_eq!(read_csv(&out).unwrap().len(), 2);
    assert_eq!(read_mesh(&mesh).unwrap(), build_unit_square_mesh(3, 0.2, 1).unwrap());
    let a = fs::read_to_string(mats.join("a.mtx")).unwrap();
    assert!(a.starts_with("%%MatrixMarket matrix coordinate real general"));
}

#[test]
fn cli_rejects_bad_arguments() {
    for args in [
        &["--schur-precond", "cdelta-th"][..],
        &["--vel-precond", "a9-2vc"][..],
        &["--levels", "0"][..],
        &["--tol", "2"][..],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_stokes-lab"))
            .args(args)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn cli_exit_code_reports_non_convergence() {
    let out = Command::new(env!("CARGO_BIN_EXE_stokes-lab"))
        .args(["--levels", "4", "--mu", "1", "--max-iter", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

fn record(
    id: usize,
    vals: (f64, f64, f64, Option<f64>, Option<f64>),
    counts: (usize, usize, usize),
    ok: bool,
) -> RunRecord {
    RunRecord {
        run_id: id,
        method: "method1".into(),
        precond: "clambda-2vc".into(),
        level: counts.0,
        dofs: counts.1,
        mu: vals.0,
        lambda: vals.1,
        outer_iters: counts.2,
        inner_iters: counts.2 * 3,
        vel_err: vals.3,
        press_err: vals.4,
        press_err_l1: None,
        wall_s: vals.2,
        eff_ms: compute_eff(vals.2, 1, counts.1.max(1)),
        converged: ok,
        history: vec![1.0, vals.2],
        worst_residual_ratio: 0.5,
        error: None,
    }
}

proptest::proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(32))]

    #[test]
    fn arbitrary_records_round_trip(
        rows in proptest::collection::vec(
            (
                (1e-12f64..1e6, 0.0f64..100.0, 0.0f64..1e4,
                 proptest::option::of(0.0f64..1e3), proptest::option::of(0.0f64..1e3)),
                (1usize..512, 1usize..10_000_000, 0usize..5000),
                proptest::bool::ANY,
            ),
            0..8,
        )
    ) {
        let report = stokes_lab::bench::ExperimentReport {
            records: rows.into_iter().enumerate().map(|(i, (v, c, ok))| record(i, v, c, ok)).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        emit_csv(&report, &path).unwrap();
        let expected: Vec<CsvRow> = report.records.iter().map(CsvRow::from).collect();
        proptest::prop_assert_eq!(read_csv(&path).unwrap(), expected);
    }
}
