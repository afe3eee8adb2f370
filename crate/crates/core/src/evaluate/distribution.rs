//! Per-hive metric breakdowns and histogram bins for plot-ready exports.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::types::{FeatureMatrix, HiveId};

use super::metrics::{compute_metrics, Metrics};
use super::EvalError;

/// Metrics of one hive's rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiveMetrics<S> {
    pub hive_id: HiveId,
    #[serde(flatten)]
    pub metrics: Metrics<S>,
}

/// One equal-width histogram bin; `hi` is exclusive except for the last bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Computes metrics separately for every hive contributing at least two rows
/// to `matrix`, in hive-id order. Predictions must align with matrix rows.
pub fn per_hive_metric_distribution<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    predictions: &[S],
) -> Result<Vec<HiveMetrics<S>>, EvalError> {
    if predictions.len() != matrix.n_rows() {
        return Err(EvalError::LengthMismatch {
            expected: matrix.n_rows(),
            got: predictions.len(),
        });
    }
    let mut groups: std::collections::BTreeMap<HiveId, Vec<usize>> = Default::default();
    for (i, meta) in matrix.meta().iter().enumerate() {
        groups.entry(meta.hive_id.clone()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (hive_id, rows) in groups {
        if rows.len() < 2 {
            continue;
        }
        let y: Vec<S> = rows.iter().map(|&i| matrix.targets()[i]).collect();
        let yhat: Vec<S> = rows.iter().map(|&i| predictions[i]).collect();
        out.push(HiveMetrics {
            hive_id,
            metrics: compute_metrics(&y, &yhat)?,
        });
    }
    Ok(out)
}

/// Equal-width bins over `[min, max]` of the values. Constant input collapses
/// to a single bin; NaNs are not expected and are filtered defensively.
pub fn histogram(values: &[f64], n_bins: usize) -> Vec<HistogramBin> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || n_bins == 0 {
        return Vec::new();
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![HistogramBin {
            lo,
            hi,
            count: finite.len(),
        }];
    }
    let width = (hi - lo) / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: lo + width * i as f64,
            hi: if i + 1 == n_bins {
                hi
            } else {
                lo + width * (i + 1) as f64
            },
            count: 0,
        })
        .collect();
    for v in finite {
        let idx = (((v - lo) / width) as usize).min(n_bins - 1);
        bins[idx].count += 1;
    }
    bins
}
