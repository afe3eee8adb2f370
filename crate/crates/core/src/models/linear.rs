//! Ordinary least squares via the normal equations.
//!
//! The Gram matrix is accumulated and factored in `f64` regardless of the
//! model's scalar type. A rank-deficient design falls back to ridge
//! regularization with a small fixed lambda, and the fallback is flagged in
//! model metadata.

use serde::{Deserialize, Serialize};

use crate::scalar::{cast, to_f64, Scalar};
use crate::types::FeatureMatrix;

use super::{EnsembleModel, ModelError, ModelKind, ModelParams};

/// Ridge strength used only when the unpenalized normal equations are not
/// positive definite.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Coefficients of a fitted linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFit<S: Scalar> {
    pub intercept: S,
    /// One coefficient per feature, in matrix column order.
    pub coefficients: Vec<S>,
    /// True when the design was rank deficient and `lambda` was added to the
    /// Gram diagonal to obtain a unique solution.
    pub ridge_fallback: bool,
    pub lambda: f64,
}

/// Cholesky factorization of a symmetric matrix in place; fails when the
/// matrix is not positive definite.
fn cholesky(a: &mut [Vec<f64>]) -> Result<(), ()> {
    let k = a.len();
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i][j];
            for l in 0..j {
                sum -= a[i][l] * a[j][l];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(());
                }
                a[i][i] = sum.sqrt();
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mut sum = b[i];
        for j in 0..i {
            sum -= l[i][j] * z[j];
        }
        z[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut sum = z[i];
        for j in i + 1..k {
            sum -= l[j][i] * x[j];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Fits an intercept-plus-slopes least-squares model.
pub fn fit_linear_ols<S: Scalar>(matrix: &FeatureMatrix<S>) -> Result<EnsembleModel<S>, ModelError> {
    let n = matrix.n_rows();
    let p = matrix.n_features();
    if n == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    let k = p + 1;

    // Gram matrix and moment vector with the intercept as column 0.
    let mut gram = vec![vec![0.0f64; k]; k];
    let mut moment = vec![0.0f64; k];
    let mut x_row = vec![0.0f64; k];
    for i in 0..n {
        x_row[0] = 1.0;
        for (j, v) in matrix.row(i).iter().enumerate() {
            x_row[j + 1] = to_f64(*v);
        }
        let y = to_f64(matrix.targets()[i]);
        for a in 0..k {
            moment[a] += x_row[a] * y;
            for b in 0..=a {
                gram[a][b] += x_row[a] * x_row[b];
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            gram[a][b] = gram[b][a];
        }
    }

    let mut factor = gram.clone();
    let mut ridge_fallback = false;
    if cholesky(&mut factor).is_err() {
        ridge_fallback = true;
        factor = gram;
        for (i, row) in factor.iter_mut().enumerate() {
            row[i] += RIDGE_LAMBDA;
        }
        if cholesky(&mut factor).is_err() {
            return Err(ModelError::Singular);
        }
    }
    let beta = cholesky_solve(&factor, &moment);

    Ok(EnsembleModel {
        kind: ModelKind::Linear,
        feature_names: matrix.feature_names().to_vec(),
        params: ModelParams::Linear,
        seed: None,
        base_prediction: S::zero(),
        learning_rate: 1.0,
        trees: Vec::new(),
        linear: Some(LinearFit {
            intercept: cast::<S>(beta[0]),
            coefficients: beta[1..].iter().map(|b| cast::<S>(*b)).collect(),
            ridge_fallback,
            lambda: if ridge_fallback { RIDGE_LAMBDA } else { 0.0 },
        }),
    })
}
