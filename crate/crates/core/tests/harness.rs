use std::collections::HashSet;
use std::fs;

use sfe_core::harness::{
    emit_convergence, read_runs, report_experiment, run_experiment, run_seed, AlgorithmSpec,
    DatasetSpec, ExperimentConfig, Summary,
};
use sfe_core::synthetic::PlantedSpec;
use sfe_core::LabelColumn;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "small".into(),
        algorithms: vec![
            AlgorithmSpec::Sfe,
            AlgorithmSpec::Bpso,
            AlgorithmSpec::SfePso,
        ],
        budget: 120,
        runs: 3,
        seed: 5,
        workers: 2,
        datasets: vec![
            DatasetSpec::planted("toy", PlantedSpec::new(30, 40, 3, 1)),
            DatasetSpec::planted("noisy", PlantedSpec::new(30, 40, 0, 2)),
        ],
        ..ExperimentConfig::default()
    };
    cfg.hybrid.warmup_fes = 40;
    cfg.hybrid.stagnation_window = 20;
    cfg
}

#[test]
fn accounting_for_a_tiny_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![AlgorithmSpec::Sfe],
        runs: 2,
        budget: 10,
        ..small_config()
    };
    let report = run_experiment(&cfg, dir.path()).unwrap();
    assert!(report.is_success());
    let runs = read_runs(dir.path()).unwrap();
    assert_eq!(runs.len(), 4);
    let runs: Vec<_> = runs
        .into_iter()
        .filter(|r| r.record.dataset == "toy")
        .collect();
    for r in &runs {
        assert_eq!(r.trace.len(), 10);
        assert_eq!(r.record.fes_used, 10);
    }
    let accs: Vec<f64> = runs.iter().map(|r| r.record.accuracy.unwrap()).collect();
    let cell = report.cell("sfe", "toy").unwrap();
    assert_eq!(cell.accuracy, Summary::of(&accs));
    assert!(dir.path().join("runs/toy/sfe/run_000.jsonl").is_file());
    assert!(dir.path().join("runs/toy/sfe/run_001.jsonl").is_file());
    assert!(dir.path().join("report.txt").is_file());
}

#[test]
fn report_round_trips_from_raw_records() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small_config(), dir.path()).unwrap();
    let again = report_experiment(dir.path()).unwrap();
    assert_eq!(report, again);
    assert_eq!(report.marks.len(), 4);
    assert_eq!(report.friedman_accuracy.as_ref().map(Vec::len), Some(3));
    let ranks: f64 = report.friedman_selected.unwrap().iter().sum();
    assert!((ranks - 6.0).abs() < 1e-12);
}

#[test]
fn seeds_are_distinct_and_folds_shared_per_run_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    run_experiment(&cfg, dir.path()).unwrap();
    let runs = read_runs(dir.path()).unwrap();
    let seeds: HashSet<u64> = runs.iter().map(|r| r.record.seed).collect();
    assert_eq!(seeds.len(), runs.len());
    for r in &runs {
        assert_eq!(
            r.record.seed,
            run_seed(
                cfg.seed,
                &r.record.algorithm,
                &r.record.dataset,
                r.record.run
            )
        );
        let peers = runs
            .iter()
            .filter(|o| o.record.run == r.record.run && o.record.dataset == r.record.dataset);
        assert!(peers
            .into_iter()
            .all(|o| o.record.fold_seed == r.record.fold_seed));
    }
}

#[test]
fn convergence_files_are_monotone_means() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small_config(), dir.path()).unwrap();
    let out = dir.path().join("curves");
    let files = emit_convergence(dir.path(), &out).unwrap();
    assert_eq!(files.len(), 6);
    let runs = read_runs(dir.path()).unwrap();
    for f in files {
        let mut rd = csv::Reader::from_path(&f).unwrap();
        let rows: Vec<Vec<f64>> = rd
            .records()
            .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert!(
            rows.windows(2).all(|w| w[1][1] >= w[0][1]),
            "{}",
            f.display()
        );
        let stem = f.file_stem().unwrap().to_string_lossy().into_owned();
        let (dataset, algo) = stem.split_once("__").unwrap();
        let mine: Vec<_> = runs
            .iter()
            .filter(|r| r.record.algorithm == algo && r.record.dataset == dataset)
            .collect();
        let first = mine.iter().map(|r| r.trace[0].best.percent()).sum::<f64>() / mine.len() as f64;
        assert!((rows[0][1] - first).abs() < 1e-9);
    }
}

#[test]
fn convergence_errors_without_traces() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_convergence(dir.path(), &dir.path().join("out")).is_err());
}

#[test]
fn failed_runs_are_recorded_not_raised() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tiny.csv");
    // Two instances per class cannot fill five folds.
    fs::write(&csv, "a,b,y\n1,2,p\n2,3,p\n3,4,q\n4,5,q\n").unwrap();
    let cfg = ExperimentConfig {
        algorithms: vec![AlgorithmSpec::Sfe],
        runs: 2,
        datasets: vec![
            DatasetSpec::csv(&csv, LabelColumn::Last),
            DatasetSpec::planted("toy", PlantedSpec::new(30, 20, 2, 1)),
        ],
        ..small_config()
    };
    let report = run_experiment(&cfg, dir.path().join("exp").as_path()).unwrap();
    assert!(!report.is_success());
    assert_eq!(report.failures.len(), 2);
    assert!(report.cell("sfe", "toy").is_some());
}

#[test]
fn config_survives_toml() {
    let cfg = small_config();
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    assert!(ExperimentConfig::from_toml_str("nonsense = 1").is_err());
}
