//! Wrapper feature selection for high-dimensional tabular data.
//!
//! Candidate feature subsets are scored by cross-validated k-nearest-neighbour
//! accuracy under a fixed evaluation budget. Three searches share that
//! budget model:
//!
//! * [`sfe`]: a single binary mask improved by dropping batches of selected
//!   features and re-adding single features when the mask would empty;
//! * [`bpso`]: binary particle swarm optimisation;
//! * [`hybrid`]: SFE until its best fitness stagnates, then a continuation
//!   search (BPSO by default) over the surviving features only.
//!
//! [`stats`] holds the rank-sum and Friedman-rank comparisons used in
//! reports, and [`harness`] runs whole experiment matrices.

pub mod bpso;
pub mod dataset;
pub mod error;
pub mod fitness;
pub mod harness;
pub mod hybrid;
pub mod mask;
pub mod sfe;
pub mod stats;
pub mod synthetic;
pub mod trace;

pub use bpso::{pso_search, PsoParams};
pub use dataset::{load_csv, stratified_kfold, CsvOptions, Dataset, FoldAssignment, LabelColumn};
pub use error::{Error, Result};
pub use fitness::{knn_predict, FitnessEvaluator, FitnessValue, Scoring};
pub use hybrid::{
    sfe_ec_search, sfe_pso_search, stagnation_check, ContinuationEngine, HybridOutcome,
    HybridParams,
};
pub use mask::FeatureMask;
pub use sfe::{sfe_search, SfeParams, UnPolicy};
pub use stats::{friedman_mean_ranks, wilcoxon_ranksum, ComparisonMark};
pub use trace::{SearchTrace, TraceRecord};
