//! Evaluation: cross-entropy, stratified folds, BCa bootstrap intervals,
//! per-composition predictors and stepwise regression.

mod bootstrap;
mod entropy;
mod folds;
mod predictors;
mod regression;
mod report;
mod trace;

use thiserror::Error;

pub use bootstrap::{bca_from_replicates, bootstrap_ci, bootstrap_replicates, BootstrapConfig, Interval};
pub use entropy::{cross_entropy, information_content};
pub use folds::{make_folds, read_fold_plan, write_fold_plan, FoldPlan};
pub use predictors::{improbable_types, EvalRecord, PredictorContext, Predictors};
pub use regression::{ols, MIN_RECORDS, stepwise_regression, Criterion, OlsFit, RegressionResult, Step, StepAction, StepwiseConfig};
pub use report::{format_regression_report, read_results_csv, write_results_csv, write_summary_csv, SummaryRow};
pub use trace::{entropy_by_composition, read_trace, write_trace, TraceRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("probability {p} at position {index} is outside (0, 1]")]
    BadProbability { index: usize, p: f64 },
    #[error("cannot evaluate an empty sequence")]
    EmptySequence,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("fold count must be at least 1")]
    ZeroFolds,
    #[error("composition {0:?} appears more than once")]
    DuplicateComposition(String),
    #[error("composition {0:?} is not in the fold plan")]
    UnknownComposition(String),
    #[error("fold {fold} is out of range for k = {k}")]
    FoldOutOfRange { fold: usize, k: usize },
    #[error("predictor {name:?} has {got} values, expected {expected}")]
    DimensionMismatch { name: String, expected: usize, got: usize },
    #[error("token id {id} is outside the vocabulary of {size}")]
    TokenOutOfRange { id: u32, size: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
