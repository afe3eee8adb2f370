//! Daily hive-weight variation forecasting from local weather.
//!
//! The library covers the full experiment pipeline:
//!
//! * [`ingest`] - raw scale readings and hourly weather-grid CSVs into a daily
//!   per-hive panel (distance/altitude-weighted weather join).
//! * [`preprocess`] - outlier cleaning, stationarity diagnostics, first
//!   differencing, and lagged feature-matrix assembly.
//! * [`models`] - regression trees, random forests, gradient boosting, and an
//!   ordinary-least-squares baseline, all seeded and reproducible.
//! * [`evaluate`] - metrics, chronological splits, cross-validation, and random
//!   hyperparameter search.
//! * [`explain`] - impurity and permutation importances plus Shapley values.
//! * [`synthgen`] - synthetic scenario generator with a ground-truth manifest,
//!   used for end-to-end audits.
//!
//! Numeric kernels are generic over [`scalar::Scalar`] (`f32`/`f64`); the
//! aliases below fix the `f64` instantiation used by the pipeline.

pub mod evaluate;
pub mod explain;
pub mod ingest;
pub mod models;
pub mod preprocess;
pub mod scalar;
mod seeding;
pub mod synthgen;
pub mod types;

pub use scalar::Scalar;
pub use types::{
    validate_panel, FeatureMatrix, HiveId, HiveLocation, HiveObservation, HiveSeries,
    HourlyWeather, PanelError, PanelReport, RowMeta, WeatherCell,
};

/// Feature matrix in the pipeline's working precision.
pub type Matrix = types::FeatureMatrix<f64>;
/// Fitted tree in the pipeline's working precision.
pub type Tree = models::TreeNode<f64>;
/// Any fitted model in the pipeline's working precision.
pub type Model = models::EnsembleModel<f64>;
/// Explanation output in the pipeline's working precision.
pub type Explanation = explain::Explanation<f64>;
