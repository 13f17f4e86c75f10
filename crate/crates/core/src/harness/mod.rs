//! Experiment orchestration: configuration, the multi-seed run matrix,
//! persistence of raw run records, reports and convergence data.

pub mod config;
pub mod converge;
pub mod report;
pub mod runner;
pub mod store;

pub use config::{AlgorithmSpec, DatasetSpec, EngineKind, ExperimentConfig, OUTPUT_ROOT_ENV};
pub use converge::{convergence_series, emit_convergence, ConvergencePoint};
pub use report::{aggregate, CellStats, ExperimentReport, MarkEntry, RunFailure, Summary};
pub use runner::{fold_seed, load_dataset, report_experiment, run_experiment, run_seed};
pub use store::{read_runs, RunRecord, StoredRun};
