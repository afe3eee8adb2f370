//! Metrics, splits, cross-validation, and hyperparameter search.
//!
//! * [`compute_metrics`] - R^2 / MSE / MAPE with a declared near-zero-target
//!   exclusion rule for MAPE.
//! * [`split_train_test_by_history`] - per-hive chronological 80/20 split.
//! * [`kfold_indices`] - hive-stratified, seeded k-fold partition.
//! * [`random_search_cv`] - seeded sampling without replacement over a finite
//!   parameter grid, scored by mean cross-validation MSE.
//! * [`per_hive_metric_distribution`] - per-hive test metrics plus histogram
//!   helpers for plot-ready exports.

mod distribution;
mod metrics;
mod search;
mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ModelError;
use crate::types::HiveId;

pub use distribution::{histogram, per_hive_metric_distribution, HistogramBin, HiveMetrics};
pub use metrics::{compute_metrics, mean_squared_error, Metrics, MAPE_EPSILON};
pub use search::{
    random_search_cv, GbtGrid, ParamSpace, RfGrid, SearchResult, SearchSpace, TrialRecord,
};
pub use split::{kfold_indices, split_train_test_by_history, TrainTestSplit};

/// Which side of the chronological split a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitScope {
    Train,
    Test,
}

/// Which seasonal window a report covers: every row, or March-September only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodScope {
    Complete,
    Production,
}

/// Identifies what a [`MetricReport`] was computed over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricScope {
    pub split: SplitScope,
    pub period: PeriodScope,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hive_id: Option<HiveId>,
}

/// Metrics tagged with the rows they describe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scope: MetricScope,
    #[serde(flatten)]
    pub metrics: Metrics<f64>,
}

/// Errors from evaluation routines.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction length {got} does not match target length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least {required} rows, got {got}")]
    TooFewRows { required: usize, got: usize },
    #[error("cannot build {k} folds from {n} rows")]
    TooFewRowsForFolds { n: usize, k: usize },
    #[error("train fraction must lie strictly between 0 and 1")]
    InvalidTrainFraction,
    #[error("search space has an empty candidate list")]
    EmptySearchSpace,
    #[error("row index {0} is out of range")]
    RowOutOfRange(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}
