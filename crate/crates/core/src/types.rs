//! Domain types shared by every pipeline stage, plus panel validation.
//!
//! All types serialize with serde so artifacts (models, reports, matrices) can be
//! written to disk and reloaded without loss.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{to_f64, Scalar};

/// Identifier of a single scale-equipped hive.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HiveId(String);

impl HiveId {
    pub fn new(id: impl Into<String>) -> Self {
        HiveId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for HiveId {
    fn from(s: &str) -> Self {
        HiveId(s.to_owned())
    }
}

impl From<String> for HiveId {
    fn from(s: String) -> Self {
        HiveId(s)
    }
}

/// One raw scale reading with the hive's geographic position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiveObservation {
    pub hive_id: HiveId,
    pub timestamp: DateTime<Utc>,
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_m: f64,
    pub weight_kg: f64,
}

/// Fixed position of a hive, carried alongside its series for the weather join
/// and the static feature columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiveLocation {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_m: f64,
}

/// One hourly record from a weather grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyWeather {
    pub timestamp: DateTime<Utc>,
    pub temperature_2m_c: f64,
    pub dewpoint_c: f64,
    pub precipitation_m: f64,
    pub wind_speed_ms: f64,
    pub solar_radiation_jm2: f64,
    pub surface_pressure_pa: f64,
}

/// A weather grid cell: fixed position plus its hourly record stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherCell {
    pub cell_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_m: f64,
    pub hours: Vec<HourlyWeather>,
}

/// Canonical names of the daily panel variables.
pub mod vars {
    /// Daily mean hive weight (kg); its first difference is the target.
    pub const WEIGHT: &str = "weight";
    pub const TEMP_AVG: &str = "temp_avg";
    pub const TEMP_MIN: &str = "temp_min";
    pub const TEMP_MAX: &str = "temp_max";
    pub const RAIN_MAX: &str = "rain_max";
    pub const RAIN_TOTAL: &str = "rain_total";
    pub const DEWPOINT_AVG: &str = "dewpoint_avg";
    pub const WIND_AVG: &str = "wind_avg";
    pub const RADIATION_AVG: &str = "radiation_avg";
    pub const PRESSURE_AVG: &str = "pressure_avg";

    /// Weather variables in canonical column order.
    pub const WEATHER: [&str; 9] = [
        TEMP_AVG,
        TEMP_MIN,
        TEMP_MAX,
        RAIN_MAX,
        RAIN_TOTAL,
        DEWPOINT_AVG,
        WIND_AVG,
        RADIATION_AVG,
        PRESSURE_AVG,
    ];

    /// All daily variables (weight first) in canonical column order.
    pub const ALL: [&str; 10] = [
        WEIGHT,
        TEMP_AVG,
        TEMP_MIN,
        TEMP_MAX,
        RAIN_MAX,
        RAIN_TOTAL,
        DEWPOINT_AVG,
        WIND_AVG,
        RADIATION_AVG,
        PRESSURE_AVG,
    ];

    /// Prefix marking a first-differenced variable.
    pub const DIFF_PREFIX: &str = "d_";
}

/// Daily panel for one hive: a strictly increasing date axis and per-variable
/// value columns aligned to it (`None` = missing that day).
///
/// `new` enforces the date ordering and column alignment; [`validate_panel`]
/// re-checks a whole collection, so externally assembled series are audited
/// before use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiveSeries {
    pub hive_id: HiveId,
    pub days: Vec<NaiveDate>,
    pub values: BTreeMap<String, Vec<Option<f64>>>,
}

impl HiveSeries {
    pub fn new(
        hive_id: HiveId,
        days: Vec<NaiveDate>,
        values: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Result<Self, PanelError> {
        let series = HiveSeries { hive_id, days, values };
        series.check()?;
        Ok(series)
    }

    /// Empty series with a date axis only; columns are added with `insert_column`.
    pub fn with_days(hive_id: HiveId, days: Vec<NaiveDate>) -> Result<Self, PanelError> {
        Self::new(hive_id, days, BTreeMap::new())
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.values.get(name).map(|v| v.as_slice())
    }

    /// Adds or replaces a column; the column must match the date axis length.
    pub fn insert_column(
        &mut self,
        name: impl Into<String>,
        column: Vec<Option<f64>>,
    ) -> Result<(), PanelError> {
        let name = name.into();
        if column.len() != self.days.len() {
            return Err(PanelError::ColumnLength {
                hive_id: self.hive_id.clone(),
                variable: name,
                expected: self.days.len(),
                found: column.len(),
            });
        }
        self.values.insert(name, column);
        Ok(())
    }

    /// Index of a calendar date on the axis, if present.
    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.days.binary_search(&date).ok()
    }

    pub fn present_count(&self, name: &str) -> usize {
        self.column(name)
            .map(|c| c.iter().filter(|v| v.is_some()).count())
            .unwrap_or(0)
    }

    fn check(&self) -> Result<(), PanelError> {
        for pair in self.days.windows(2) {
            if pair[1] <= pair[0] {
                return Err(PanelError::DuplicateOrUnsortedDate {
                    hive_id: self.hive_id.clone(),
                    date: pair[1],
                });
            }
        }
        for (name, column) in &self.values {
            if column.len() != self.days.len() {
                return Err(PanelError::ColumnLength {
                    hive_id: self.hive_id.clone(),
                    variable: name.clone(),
                    expected: self.days.len(),
                    found: column.len(),
                });
            }
            if let Some(idx) = column.iter().position(|v| v.map_or(false, |x| !x.is_finite())) {
                return Err(PanelError::NonFiniteValue {
                    hive_id: self.hive_id.clone(),
                    variable: name.clone(),
                    date: self.days[idx],
                });
            }
        }
        Ok(())
    }
}

/// Identity of one supervised row: which hive and day it describes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowMeta {
    pub hive_id: HiveId,
    pub date: NaiveDate,
}

/// Supervised learning matrix: named feature columns, a target vector, and
/// per-row provenance. Rows are complete (no missing entries) and finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix<S: Scalar> {
    feature_names: Vec<String>,
    n_features: usize,
    /// Row-major, `n_rows * n_features`.
    data: Vec<S>,
    targets: Vec<S>,
    meta: Vec<RowMeta>,
}

impl<S: Scalar> FeatureMatrix<S> {
    pub fn new(
        feature_names: Vec<String>,
        data: Vec<S>,
        targets: Vec<S>,
        meta: Vec<RowMeta>,
    ) -> Result<Self, PanelError> {
        let n_features = feature_names.len();
        let names: BTreeSet<&String> = feature_names.iter().collect();
        if names.len() != n_features {
            return Err(PanelError::DuplicateFeatureName);
        }
        if targets.len() != meta.len() || data.len() != targets.len() * n_features {
            return Err(PanelError::MatrixShape {
                n_data: data.len(),
                n_targets: targets.len(),
                n_meta: meta.len(),
                n_features,
            });
        }
        if data.iter().any(|v| !v.is_finite()) || targets.iter().any(|v| !v.is_finite()) {
            return Err(PanelError::NonFiniteMatrixEntry);
        }
        Ok(FeatureMatrix { feature_names, n_features, data, targets, meta })
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> S {
        self.data[row * self.n_features + feature]
    }

    pub fn targets(&self) -> &[S] {
        &self.targets
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    /// Copies one feature column out (used by column shuffles and scans).
    pub fn feature_column(&self, feature: usize) -> Vec<S> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_features);
        let mut targets = Vec::with_capacity(rows.len());
        let mut meta = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            targets.push(self.targets[r]);
            meta.push(self.meta[r].clone());
        }
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            n_features: self.n_features,
            data,
            targets,
            meta,
        }
    }

    /// Rows whose date falls in the honey production period (March-September).
    pub fn production_period(&self) -> Self {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&i| {
                let m = self.meta[i].date.month();
                (3..=9).contains(&m)
            })
            .collect();
        self.subset(&rows)
    }

    /// Converts every entry to `f64` (report output is always `f64`).
    pub fn to_f64(&self) -> FeatureMatrix<f64> {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            n_features: self.n_features,
            data: self.data.iter().map(|&v| to_f64(v)).collect(),
            targets: self.targets.iter().map(|&v| to_f64(v)).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Per-hive summary produced by [`validate_panel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HivePanelSummary {
    pub hive_id: HiveId,
    pub n_days: usize,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    /// Missing fraction per variable, in `[0, 1]`.
    pub missing_fraction: BTreeMap<String, f64>,
}

/// Validation report over a whole panel of hive series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelReport {
    pub hives: Vec<HivePanelSummary>,
}

/// Validation and shape errors for panels and matrices.
#[derive(Debug, Error)]
pub enum PanelError {
    #[error("hive {hive_id}: duplicate or unsorted date {date}")]
    DuplicateOrUnsortedDate { hive_id: HiveId, date: NaiveDate },
    #[error("hive {hive_id} appears in more than one series")]
    DuplicateHive { hive_id: HiveId },
    #[error("hive {hive_id}: column {variable} has {found} entries, expected {expected}")]
    ColumnLength { hive_id: HiveId, variable: String, expected: usize, found: usize },
    #[error("hive {hive_id}: non-finite value in {variable} on {date}")]
    NonFiniteValue { hive_id: HiveId, variable: String, date: NaiveDate },
    #[error("empty panel: no hive series")]
    EmptyPanel,
    #[error("feature matrix has duplicate feature names")]
    DuplicateFeatureName,
    #[error(
        "feature matrix shape mismatch: {n_data} values, {n_targets} targets, \
         {n_meta} meta rows, {n_features} features"
    )]
    MatrixShape { n_data: usize, n_targets: usize, n_meta: usize, n_features: usize },
    #[error("feature matrix contains a non-finite entry")]
    NonFiniteMatrixEntry,
}

/// Audits a panel: rejects duplicate (hive, date) pairs and non-finite values,
/// and summarizes coverage per hive.
pub fn validate_panel(panel: &[HiveSeries]) -> Result<PanelReport, PanelError> {
    if panel.is_empty() {
        return Err(PanelError::EmptyPanel);
    }
    let mut seen = BTreeSet::new();
    let mut hives = Vec::with_capacity(panel.len());
    for series in panel {
        if !seen.insert(series.hive_id.clone()) {
            return Err(PanelError::DuplicateHive { hive_id: series.hive_id.clone() });
        }
        series.check()?;
        if series.is_empty() {
            continue;
        }
        let n = series.len();
        let missing_fraction = series
            .values
            .iter()
            .map(|(name, col)| {
                let missing = col.iter().filter(|v| v.is_none()).count();
                (name.clone(), missing as f64 / n as f64)
            })
            .collect();
        hives.push(HivePanelSummary {
            hive_id: series.hive_id.clone(),
            n_days: n,
            first_day: series.days[0],
            last_day: series.days[n - 1],
            missing_fraction,
        });
    }
    Ok(PanelReport { hives })
}
