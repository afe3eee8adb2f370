//! Model interpretability: impurity and permutation feature importances plus
//! Shapley-value explanations.
//!
//! SHAP uses the interventional (marginal) value function: features absent
//! from a coalition are drawn from a background sample, which makes the
//! efficiency, symmetry, and dummy axioms directly testable and treats tree
//! and linear models identically. Exact subset enumeration runs when the
//! feature count is small; otherwise a seeded permutation-sampling estimator
//! with antithetic pairs takes over.

mod importance;
mod shap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelError, ModelKind};

use super::evaluate::EvalError;

pub use importance::{impurity_importance, permutation_importance};
pub use shap::{
    sample_background, shap_global_summary, shap_values, ShapConfig, ShapRow, ShapSummary,
};

/// Which procedure produced an [`Explanation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Impurity,
    Permutation,
    ShapMeanAbs,
}

/// Per-feature scores from one importance method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation<S> {
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    pub scores: Vec<S>,
    /// Spread across repeats where the method has one (permutation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<Vec<S>>,
}

impl<S: crate::scalar::Scalar> Explanation<S> {
    /// Feature indices in descending score order; ties keep the lower index
    /// first.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        order
    }
}

/// Errors from explanation routines.
#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("method requires a tree-based model, got {0:?}")]
    UnsupportedModel(ModelKind),
    #[error("background sample is empty")]
    EmptyBackground,
    #[error(
        "exact SHAP supports at most {max} features, got {k}, and sampling is disabled \
         (mc_samples = 0)"
    )]
    TooManyFeatures { k: usize, max: usize },
    #[error("row has {got} features, model expects {expected}")]
    RowLength { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
