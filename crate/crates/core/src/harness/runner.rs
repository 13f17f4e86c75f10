use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::bpso::pso_search;
use crate::dataset::{load_csv, stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::fitness::FitnessEvaluator;
use crate::harness::config::{AlgorithmSpec, DatasetSpec, EngineKind, ExperimentConfig};
use crate::harness::report::{aggregate, ExperimentReport};
use crate::harness::store::{self, RunRecord, StoredRun};
use crate::hybrid::{
    sfe_ec_search, ContinuationEngine, HillClimbEngine, IdentityEngine, PsoEngine,
};
use crate::sfe::sfe_search;
use crate::synthetic::planted_dataset;
use crate::trace::{SearchTrace, TraceRecord};

/// 64-bit FNV-1a, finished with a splitmix round. Stable across platforms
/// and releases.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // Separator so ("ab", "c") and ("a", "bc") differ.
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

pub fn run_seed(master: u64, algorithm: &str, dataset: &str, run: usize) -> u64 {
    stable_hash(&[
        &master.to_le_bytes(),
        algorithm.as_bytes(),
        dataset.as_bytes(),
        &(run as u64).to_le_bytes(),
    ])
}

/// Fold seed shared by every algorithm at the same run index, or by every
/// run when `fixed` is set.
pub fn fold_seed(master: u64, dataset: &str, run: usize, fixed: bool) -> u64 {
    let run_part = if fixed { u64::MAX } else { run as u64 };
    stable_hash(&[
        &master.to_le_bytes(),
        b"folds",
        dataset.as_bytes(),
        &run_part.to_le_bytes(),
    ])
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    match (&spec.path, &spec.planted) {
        (Some(p), None) => load_csv(p, &spec.csv_options()),
        (None, Some(planted)) => Ok(planted_dataset(planted)?.dataset),
        _ => Err(Error::Config(
            "each dataset needs exactly one of `path` or `planted`".into(),
        )),
    }
}

fn engine_for(cfg: &ExperimentConfig, kind: EngineKind) -> Box<dyn ContinuationEngine> {
    match kind {
        EngineKind::Pso => Box::new(PsoEngine { params: cfg.pso }),
        EngineKind::Identity => Box::new(IdentityEngine),
        EngineKind::HillClimb => Box::new(HillClimbEngine {
            patience: cfg.hillclimb.patience,
        }),
    }
}

struct RunOutput {
    trace: SearchTrace,
    fes_used: usize,
    handoff_fes: Option<usize>,
}

/// Executes one cell of the matrix against a fresh evaluator.
fn execute(
    cfg: &ExperimentConfig,
    data: Arc<Dataset>,
    dataset_name: &str,
    algorithm: AlgorithmSpec,
    run: usize,
    seed: u64,
) -> Result<RunOutput> {
    let folds = stratified_kfold(
        &data,
        cfg.folds,
        fold_seed(cfg.seed, dataset_name, run, cfg.fixed_folds),
    )?;
    let mut ev = FitnessEvaluator::new(data, folds, cfg.knn_k, cfg.budget)?
        .with_scoring(cfg.scoring)
        .with_cache(cfg.cache);
    let mut handoff_fes = None;
    let trace = match algorithm {
        AlgorithmSpec::Sfe => sfe_search(&mut ev, &cfg.sfe, seed)?,
        AlgorithmSpec::Bpso => pso_search(&mut ev, &cfg.pso, None, seed)?,
        AlgorithmSpec::SfePso | AlgorithmSpec::SfeEc(_) => {
            let kind = match algorithm {
                AlgorithmSpec::SfeEc(k) => k,
                _ => EngineKind::Pso,
            };
            let engine = engine_for(cfg, kind);
            let outcome = sfe_ec_search(&mut ev, engine.as_ref(), &cfg.hybrid_params(), seed)?;
            handoff_fes = outcome.handoff.map(|h| h.fes);
            outcome.trace
        }
    };
    Ok(RunOutput {
        trace,
        fes_used: ev.used(),
        handoff_fes,
    })
}

struct Job<'a> {
    dataset: &'a str,
    data: std::result::Result<Arc<Dataset>, String>,
    algorithm: AlgorithmSpec,
    run: usize,
}

/// Runs the whole matrix, persisting each run as soon as it finishes, then
/// writes the report. Individual run failures are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let runs_dir = out_dir.join(store::RUNS_DIR);
    if runs_dir.exists() {
        fs::remove_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    }
    let config_path = out_dir.join(store::CONFIG_FILE);
    fs::write(&config_path, cfg.to_toml_string()?).map_err(|e| Error::io(&config_path, e))?;

    let names: Vec<String> = cfg.datasets.iter().map(DatasetSpec::display_name).collect();
    let loaded: Vec<std::result::Result<Arc<Dataset>, String>> = cfg
        .datasets
        .iter()
        .map(|d| load_dataset(d).map(Arc::new).map_err(|e| e.to_string()))
        .collect();

    let mut jobs = Vec::new();
    for (name, data) in names.iter().zip(&loaded) {
        for &algorithm in &cfg.algorithms {
            for run in 0..cfg.runs {
                jobs.push(Job {
                    dataset: name,
                    data: data.clone(),
                    algorithm,
                    run,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records: Vec<Result<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(cfg, out_dir, job))
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let report = report_for(cfg, &records)?;
    write_report(out_dir, &report)?;
    Ok(report)
}

fn run_job(cfg: &ExperimentConfig, out_dir: &Path, job: &Job<'_>) -> Result<RunRecord> {
    let algorithm = job.algorithm.to_string();
    let seed = run_seed(cfg.seed, &algorithm, job.dataset, job.run);
    let started = Instant::now();
    let result = match &job.data {
        Ok(data) => execute(
            cfg,
            Arc::clone(data),
            job.dataset,
            job.algorithm,
            job.run,
            seed,
        )
        .map_err(|e| e.to_string()),
        Err(e) => Err(format!("dataset failed to load: {e}")),
    };
    let wall_time_s = started.elapsed().as_secs_f64();

    let mut record = RunRecord {
        algorithm,
        dataset: job.dataset.to_string(),
        run: job.run,
        seed,
        fold_seed: fold_seed(cfg.seed, job.dataset, job.run, cfg.fixed_folds),
        accuracy: None,
        selected: None,
        features: Vec::new(),
        fes_used: 0,
        wall_time_s,
        handoff_fes: None,
        error: None,
    };
    let trace: Vec<TraceRecord> = match result {
        Ok(out) => {
            record.accuracy = Some(out.trace.final_fitness().percent());
            record.selected = Some(out.trace.final_mask().selected_count());
            record.features = out.trace.final_mask().selected_indices();
            record.fes_used = out.fes_used;
            record.handoff_fes = out.handoff_fes;
            out.trace.records().to_vec()
        }
        Err(e) => {
            record.error = Some(e);
            Vec::new()
        }
    };
    let path = store::run_file(out_dir, job.dataset, &job.algorithm.file_stem(), job.run);
    store::write_run(&path, &record, &trace)?;
    Ok(record)
}

fn report_for(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<ExperimentReport> {
    let algorithms: Vec<String> = cfg.algorithms.iter().map(|a| a.to_string()).collect();
    let datasets: Vec<String> = cfg.datasets.iter().map(DatasetSpec::display_name).collect();
    let reference = cfg.reference.map(|r| r.to_string());
    aggregate(
        &cfg.name,
        &algorithms,
        &datasets,
        reference.as_deref(),
        cfg.alpha,
        records,
    )
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    let json = dir.join(store::REPORT_JSON);
    fs::write(&json, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(&json, e))?;
    let txt = dir.join(store::REPORT_TXT);
    fs::write(&txt, report.to_text()).map_err(|e| Error::io(&txt, e))?;
    Ok(())
}

/// Recomputes the report of an experiment directory from its stored
/// configuration and raw run records, and rewrites the report files.
pub fn report_experiment(dir: &Path) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig::from_toml_str(
        &fs::read_to_string(dir.join(store::CONFIG_FILE))
            .map_err(|e| Error::io(dir.join(store::CONFIG_FILE), e))?,
    )?;
    let runs = store::read_runs(dir)?;
    let records: Vec<RunRecord> = runs
        .into_iter()
        .map(|StoredRun { record, .. }| record)
        .collect();
    let report = report_for(&cfg, &records)?;
    write_report(dir, &report)?;
    Ok(report)
}
