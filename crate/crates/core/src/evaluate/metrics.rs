//! Regression metrics.

use serde::{Deserialize, Serialize};

use crate::scalar::{cast, Scalar};

use super::EvalError;

/// Targets with absolute value below this are excluded from MAPE; the target
/// is a daily weight variation in kilograms and is frequently almost zero,
/// where a relative error is meaningless.
pub const MAPE_EPSILON: f64 = 0.01;

/// R^2, MSE, and MAPE over one set of rows.
///
/// `r_squared` is `None` when the targets have zero variance (the ratio is
/// undefined); `mape` is `None` when every row fell under the exclusion rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<S> {
    pub r_squared: Option<S>,
    pub mse: S,
    /// Percent: `100 * mean(|y - yhat| / |y|)` over the included rows.
    pub mape: Option<S>,
    pub n_rows: usize,
    pub n_excluded_mape: usize,
}

/// Plain mean squared error, defined for any non-empty pair of slices.
pub fn mean_squared_error<S: Scalar>(y: &[S], yhat: &[S]) -> Result<S, EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(EvalError::TooFewRows {
            required: 1,
            got: 0,
        });
    }
    let sse: S = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum();
    Ok(sse / cast::<S>(y.len() as f64))
}

/// Computes the three report metrics over aligned targets and predictions.
pub fn compute_metrics<S: Scalar>(y: &[S], yhat: &[S]) -> Result<Metrics<S>, EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(EvalError::TooFewRows {
            required: 2,
            got: y.len(),
        });
    }
    let n = cast::<S>(y.len() as f64);
    let mean: S = y.iter().copied().sum::<S>() / n;

    let mut sse = S::zero();
    let mut sst = S::zero();
    let mut ape_sum = S::zero();
    let mut included = 0usize;
    let eps = cast::<S>(MAPE_EPSILON);
    for (yi, hat) in y.iter().zip(yhat) {
        let err = *yi - *hat;
        sse += err * err;
        let dev = *yi - mean;
        sst += dev * dev;
        if yi.abs() >= eps {
            ape_sum += (err / *yi).abs();
            included += 1;
        }
    }

    Ok(Metrics {
        r_squared: if sst > S::zero() {
            Some(S::one() - sse / sst)
        } else {
            None
        },
        mse: sse / n,
        mape: if included > 0 {
            Some(cast::<S>(100.0) * ape_sum / cast::<S>(included as f64))
        } else {
            None
        },
        n_rows: y.len(),
        n_excluded_mape: y.len() - included,
    })
}
