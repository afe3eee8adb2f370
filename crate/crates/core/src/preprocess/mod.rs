//! Cleaning, stationarity handling, and feature-matrix assembly.
//!
//! The cleaning chain per hive, in order:
//!
//! 1. drop daily weights below a hard floor (defective near-zero readings),
//! 2. drop weight-level outliers with a trailing rolling z-score,
//! 3. first-difference every variable (consecutive calendar days only),
//! 4. drop weight-variation outliers with a whole-series z-score
//!    (harvest events and implausible production spikes),
//! 5. discard hives left with too few target observations.
//!
//! The rolling filter is sequential: a removed point leaves a gap that keeps
//! later windows from filling, so re-running the chain on its own output
//! changes nothing.

pub mod adf;

use std::collections::HashMap;

use chrono::{Datelike, Duration, NaiveDate};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::LocatedSeries;
use crate::types::{vars, FeatureMatrix, HiveId, HiveLocation, HiveSeries, PanelError, RowMeta};

/// Thresholds of the cleaning chain. Defaults follow the reference experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleaningConfig {
    /// Daily weights strictly below this are removed (kg).
    pub min_weight_kg: f64,
    /// Trailing window length (calendar days, all present) of the level
    /// outlier filter.
    pub rolling_window: usize,
    /// |z| above this removes a weight level.
    pub rolling_z_threshold: f64,
    /// |z| above this removes a weight variation (whole-series z-score).
    pub variation_z_threshold: f64,
    /// Hives with fewer target observations than this are discarded.
    pub min_observations: usize,
    /// Lag offsets (days) used for the feature columns.
    pub lags: Vec<usize>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            min_weight_kg: 20.0,
            rolling_window: 30,
            rolling_z_threshold: 1.2,
            variation_z_threshold: 2.0,
            min_observations: 60,
            lags: vec![1, 2, 3],
        }
    }
}

/// What the cleaning chain did to one hive.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HiveCleaningSummary {
    pub hive_id: HiveId,
    pub removed_min_weight: Vec<NaiveDate>,
    pub removed_rolling_z: Vec<NaiveDate>,
    pub removed_variation_z: Vec<NaiveDate>,
    /// Present target (weight-variation) observations after all filters.
    pub retained_observations: usize,
    pub discarded: bool,
}

/// Cleaning outcome for a whole panel.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub hives: Vec<HiveCleaningSummary>,
}

/// A hive that survived cleaning: cleaned level panel, differenced panel, and
/// everything needed to build supervised rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreparedHive {
    pub hive_id: HiveId,
    pub location: HiveLocation,
    /// Level variables after the level-stage filters.
    pub levels: HiveSeries,
    /// First-differenced variables (`d_` prefix); `d_weight` is the target.
    pub variations: HiveSeries,
    pub summary: HiveCleaningSummary,
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("series has no `{0}` column")]
    MissingColumn(String),
    #[error("no usable rows after cleaning and lag construction")]
    EmptyMatrix,
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Removes daily weights strictly below `floor`, returning the removed dates.
pub fn filter_min_weight(series: &mut HiveSeries, floor: f64) -> Vec<NaiveDate> {
    let days = series.days.clone();
    let mut removed = Vec::new();
    if let Some(column) = series.values.get_mut(vars::WEIGHT) {
        for (i, slot) in column.iter_mut().enumerate() {
            if let Some(w) = *slot {
                if w < floor {
                    *slot = None;
                    removed.push(days[i]);
                }
            }
        }
    }
    removed
}

/// Trailing rolling z-score filter on the weight levels.
///
/// Each point is judged against the `window` calendar days immediately before
/// it; all of those days must carry a present value, otherwise the point is
/// exempt. The z-score uses the window's mean and population standard
/// deviation, and a zero-variance window never flags. Points are visited in
/// date order and removals take effect immediately, so a removal leaves a gap
/// that exempts the following `window` days; re-running the filter therefore
/// changes nothing (the surviving points see exactly the windows they were
/// judged against).
pub fn rolling_zscore_filter(
    series: &mut HiveSeries,
    window: usize,
    threshold: f64,
) -> Vec<NaiveDate> {
    let days = series.days.clone();
    let mut removed = Vec::new();
    let Some(column) = series.values.get_mut(vars::WEIGHT) else {
        return removed;
    };
    let index: HashMap<NaiveDate, usize> =
        days.iter().enumerate().map(|(i, day)| (*day, i)).collect();
    let mut recent: Vec<f64> = Vec::with_capacity(window);
    for i in 0..column.len() {
        let Some(x) = column[i] else { continue };
        recent.clear();
        for back in 1..=window {
            let day = days[i] - Duration::days(back as i64);
            match index.get(&day).and_then(|&j| column[j]) {
                Some(v) => recent.push(v),
                None => break,
            }
        }
        if recent.len() < window {
            continue;
        }
        let mean = recent.iter().sum::<f64>() / window as f64;
        let var = recent.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window as f64;
        let sd = var.sqrt();
        if sd > 0.0 && ((x - mean) / sd).abs() > threshold {
            column[i] = None;
            removed.push(days[i]);
        }
    }
    removed
}

/// First difference of one column: defined where the previous calendar day is
/// also on the axis and both values are present.
pub fn first_difference(days: &[NaiveDate], values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    for i in 1..values.len() {
        if days[i] - days[i - 1] == Duration::days(1) {
            if let (Some(prev), Some(cur)) = (values[i - 1], values[i]) {
                out[i] = Some(cur - prev);
            }
        }
    }
    out
}

/// First-differences every column of a panel into a new `d_`-prefixed panel on
/// the same date axis.
pub fn difference_panel(series: &HiveSeries) -> HiveSeries {
    let mut out = HiveSeries {
        hive_id: series.hive_id.clone(),
        days: series.days.clone(),
        values: Default::default(),
    };
    for (name, column) in &series.values {
        out.values.insert(
            format!("{}{}", vars::DIFF_PREFIX, name),
            first_difference(&series.days, column),
        );
    }
    out
}

/// Whole-series z-score filter: removes entries whose z-score against the
/// column's own mean and population standard deviation exceeds `threshold` in
/// magnitude. Returns removed indices. Zero variance or fewer than two present
/// values flags nothing.
pub fn variation_zscore_filter(column: &mut [Option<f64>], threshold: f64) -> Vec<usize> {
    let present: Vec<f64> = column.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Vec::new();
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Vec::new();
    }
    let mut removed = Vec::new();
    for (i, slot) in column.iter_mut().enumerate() {
        if let Some(x) = *slot {
            if ((x - mean) / sd).abs() > threshold {
                *slot = None;
                removed.push(i);
            }
        }
    }
    removed
}

/// Runs the full cleaning chain on one joined hive panel.
///
/// Returns `None` (with the summary inside the report entry) when the hive ends
/// up below the minimum-observation cutoff.
pub fn prepare_hive(
    located: LocatedSeries,
    config: &CleaningConfig,
) -> (Option<PreparedHive>, HiveCleaningSummary) {
    let LocatedSeries { mut series, location } = located;
    let hive_id = series.hive_id.clone();

    let removed_min_weight = filter_min_weight(&mut series, config.min_weight_kg);
    let removed_rolling_z =
        rolling_zscore_filter(&mut series, config.rolling_window, config.rolling_z_threshold);

    let mut variations = difference_panel(&series);
    let target_name = format!("{}{}", vars::DIFF_PREFIX, vars::WEIGHT);
    let removed_variation_z = match variations.values.get_mut(&target_name) {
        Some(column) => {
            let idx = variation_zscore_filter(column, config.variation_z_threshold);
            idx.into_iter().map(|i| variations.days[i]).collect()
        }
        None => Vec::new(),
    };

    let retained = variations.present_count(&target_name);
    let discarded = retained < config.min_observations;
    let summary = HiveCleaningSummary {
        hive_id: hive_id.clone(),
        removed_min_weight,
        removed_rolling_z,
        removed_variation_z,
        retained_observations: retained,
        discarded,
    };
    if discarded {
        info!("hive {hive_id}: discarded ({retained} target observations)");
        return (None, summary);
    }
    let prepared = PreparedHive {
        hive_id,
        location,
        levels: series,
        variations,
        summary: summary.clone(),
    };
    (Some(prepared), summary)
}

/// Cleans a whole panel (hives independently, in parallel) and reports what was
/// removed. Output order follows input order regardless of worker count.
pub fn preprocess_panel(
    panel: Vec<LocatedSeries>,
    config: &CleaningConfig,
) -> (Vec<PreparedHive>, CleaningReport) {
    let results: Vec<(Option<PreparedHive>, HiveCleaningSummary)> =
        panel.into_par_iter().map(|located| prepare_hive(located, config)).collect();
    let mut kept = Vec::new();
    let mut summaries = Vec::with_capacity(results.len());
    for (prepared, summary) in results {
        if let Some(p) = prepared {
            kept.push(p);
        }
        summaries.push(summary);
    }
    (kept, CleaningReport { hives: summaries })
}

/// Names of the feature columns, in matrix order: every differenced variable at
/// every lag, then the static location and seasonal columns.
pub fn feature_names(lags: &[usize]) -> Vec<String> {
    let mut names = Vec::new();
    for var in vars::ALL {
        for lag in lags {
            names.push(format!("{}{}_lag{}", vars::DIFF_PREFIX, var, lag));
        }
    }
    for static_name in ["latitude", "longitude", "altitude_m", "doy_sin", "doy_cos"] {
        names.push(static_name.to_owned());
    }
    names
}

/// Assembles the supervised matrix from prepared hives.
///
/// One candidate row per present target value; the row is kept only if every
/// lagged variable is present at its calendar offset. Static features are the
/// hive coordinates and a sine/cosine encoding of the day of year.
pub fn assemble_feature_matrix(
    prepared: &[PreparedHive],
    config: &CleaningConfig,
) -> Result<FeatureMatrix<f64>, PreprocessError> {
    let names = feature_names(&config.lags);
    let n_features = names.len();
    let target_name = format!("{}{}", vars::DIFF_PREFIX, vars::WEIGHT);

    let mut data: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut meta: Vec<RowMeta> = Vec::new();
    let mut row_buf: Vec<f64> = Vec::with_capacity(n_features);

    for hive in prepared {
        let series = &hive.variations;
        let target = series
            .column(&target_name)
            .ok_or_else(|| PreprocessError::MissingColumn(target_name.clone()))?;
        let columns: Vec<&[Option<f64>]> = vars::ALL
            .iter()
            .map(|v| {
                let name = format!("{}{}", vars::DIFF_PREFIX, v);
                series
                    .column(&name)
                    .ok_or_else(|| PreprocessError::MissingColumn(name))
            })
            .collect::<Result<_, _>>()?;

        for (i, y) in target.iter().enumerate() {
            let Some(y) = *y else { continue };
            let date = series.days[i];
            row_buf.clear();
            let mut complete = true;
            'vars: for column in &columns {
                for &lag in &config.lags {
                    let lag_date = date - Duration::days(lag as i64);
                    let value = series
                        .day_index(lag_date)
                        .and_then(|j| column[j]);
                    match value {
                        Some(v) => row_buf.push(v),
                        None => {
                            complete = false;
                            break 'vars;
                        }
                    }
                }
            }
            if !complete {
                continue;
            }
            let doy = date.ordinal() as f64;
            let angle = 2.0 * std::f64::consts::PI * doy / 365.25;
            row_buf.extend([
                hive.location.latitude,
                hive.location.longitude,
                hive.location.altitude_m,
                angle.sin(),
                angle.cos(),
            ]);
            data.extend_from_slice(&row_buf);
            targets.push(y);
            meta.push(RowMeta { hive_id: hive.hive_id.clone(), date });
        }
    }

    if targets.is_empty() {
        return Err(PreprocessError::EmptyMatrix);
    }
    Ok(FeatureMatrix::new(names, data, targets, meta)?)
}
