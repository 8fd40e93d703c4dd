//! Metrics, stratified cross-validation and randomized hyperparameter search.

pub mod cv;
pub mod metrics;
pub mod search;

pub use cv::{accuracy, cross_validate, stratified_kfold, CvResult, Fold, Grouping};
pub use metrics::{compute_report, Averages, ClassMetrics, ConfusionMatrix, EvalReport};
pub use search::{apply_candidate, randomized_search, Candidate, CandidateResult, SearchResult, SearchSpace};
