//! From-scratch supervised regressors.
//!
//! * [`fit_regression_tree`] - greedy CART with exact midpoint splits and
//!   optional cost-complexity pruning.
//! * [`fit_random_forest`] - bootstrap-aggregated trees with per-split random
//!   feature subsets; prediction is the unweighted mean.
//! * [`fit_gradient_boosting`] - first-order boosting under squared loss:
//!   each round fits a tree to the current residuals, scaled by `eta`.
//! * [`fit_linear_ols`] - ordinary least squares via the normal equations,
//!   with a small-ridge fallback on rank deficiency.
//!
//! All stochastic choices flow from explicit seeds, so identical inputs give
//! bit-identical serialized models regardless of worker count.

pub mod boosting;
pub mod forest;
pub mod linear;
pub mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, Scalar};
use crate::types::FeatureMatrix;

pub use boosting::fit_gradient_boosting;
pub use forest::fit_random_forest;
pub use linear::{fit_linear_ols, LinearFit};
pub use tree::{best_split, fit_regression_tree, SplitCandidate, TreeNode};

/// Which estimator a fitted [`EnsembleModel`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    RandomForest,
    GradientBoosting,
    Linear,
}

/// Growth and pruning controls for a single regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    /// Maximum depth of the tree; `None` grows until other stops trigger.
    pub max_depth: Option<u32>,
    /// Nodes with fewer samples than this become leaves.
    pub min_samples_split: usize,
    /// A found best split is discarded (the node becomes a leaf) when either
    /// child would hold fewer samples than this.
    pub min_samples_leaf: usize,
    /// Cost-complexity pruning strength; 0 disables pruning.
    pub ccp_alpha: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            ccp_alpha: 0.0,
        }
    }
}

impl TreeParams {
    fn validate(&self) -> Result<(), ModelError> {
        if self.min_samples_leaf < 1 {
            return Err(ModelError::InvalidParams(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.min_samples_split < 2 {
            return Err(ModelError::InvalidParams(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if !self.ccp_alpha.is_finite() || self.ccp_alpha < 0.0 {
            return Err(ModelError::InvalidParams(
                "ccp_alpha must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFeatures {
    /// Every feature (deterministic scan).
    All,
    /// ceil(p / 3), the usual regression-forest default.
    ThirdCeil,
    /// A fixed number of features, clamped to `[1, p]`.
    Count(usize),
    /// A fraction of features, `ceil(f * p)` clamped to `[1, p]`.
    Fraction(f64),
}

impl SplitFeatures {
    /// Number of candidate features per split for a `p`-feature matrix.
    pub fn resolve(&self, p: usize) -> usize {
        let k = match *self {
            SplitFeatures::All => p,
            SplitFeatures::ThirdCeil => p.div_ceil(3),
            SplitFeatures::Count(c) => c,
            SplitFeatures::Fraction(f) => (f * p as f64).ceil() as usize,
        };
        k.clamp(1, p.max(1))
    }
}

/// Random-forest configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    /// Number of trees in the ensemble.
    pub n_trees: usize,
    /// Per-tree growth controls.
    pub tree: TreeParams,
    /// Per-split candidate-feature rule.
    pub split_features: SplitFeatures,
    /// Draw an n-sample bootstrap (with replacement) per tree.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            tree: TreeParams {
                max_depth: Some(30),
                min_samples_split: 200,
                min_samples_leaf: 200,
                ccp_alpha: 0.0,
            },
            split_features: SplitFeatures::ThirdCeil,
            bootstrap: true,
        }
    }
}

/// Gradient-boosting configuration (squared loss, first order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbtParams {
    /// Learning rate applied to each round's tree. Must be positive; values
    /// in (0, 1] are the sensible range.
    pub eta: f64,
    /// Depth limit for the per-round trees.
    pub max_depth: Option<u32>,
    /// Minimum samples per leaf. Under squared loss every sample has unit
    /// hessian, so this is the exact analogue of a hessian-sum floor.
    pub min_child_weight: usize,
    /// Number of boosting rounds.
    pub n_rounds: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            eta: 0.08,
            max_depth: Some(6),
            min_child_weight: 7,
            n_rounds: 100,
        }
    }
}

/// Typed copy of the parameters a model was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Tree(TreeParams),
    RandomForest(ForestParams),
    GradientBoosting(GbtParams),
    Linear,
}

/// Fits whichever model `params` describes. `seed` feeds the stochastic
/// estimators and is ignored by the deterministic ones.
pub fn fit_model<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    params: &ModelParams,
    seed: u64,
) -> Result<EnsembleModel<S>, ModelError> {
    match params {
        ModelParams::Tree(p) => fit_regression_tree(matrix, p),
        ModelParams::RandomForest(p) => fit_random_forest(matrix, p, seed),
        ModelParams::GradientBoosting(p) => fit_gradient_boosting(matrix, p, seed),
        ModelParams::Linear => fit_linear_ols(matrix),
    }
}

/// Errors from fitting or applying models.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot fit a model on an empty matrix")]
    EmptyMatrix,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("input has {got} features but the model was fitted on {expected}")]
    FeatureCountMismatch { expected: usize, got: usize },
    #[error("input feature names do not match the model's training features")]
    FeatureNamesMismatch,
    #[error("normal equations not positive definite even with ridge fallback")]
    Singular,
}

/// A fitted model of any supported kind, self-describing and serializable.
///
/// Prediction is `base_prediction + learning_rate * sum(tree outputs)` for
/// tree ensembles (random forests fold the 1/M average into `predict`), and
/// the affine form for the linear kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleModel<S: Scalar> {
    pub kind: ModelKind,
    /// Column names the model was fitted on, in matrix order.
    pub feature_names: Vec<String>,
    pub params: ModelParams,
    /// Master seed the fit consumed, when the estimator is stochastic.
    pub seed: Option<u64>,
    /// Additive offset (the boosting base score; 0 for other kinds).
    pub base_prediction: S,
    /// Shrinkage applied to each tree's output (1 outside boosting).
    pub learning_rate: f64,
    pub trees: Vec<TreeNode<S>>,
    pub linear: Option<LinearFit<S>>,
}

impl<S: Scalar> EnsembleModel<S> {
    /// Predicts one row. The row must have exactly the training feature count.
    pub fn predict_row(&self, x: &[S]) -> Result<S, ModelError> {
        if x.len() != self.feature_names.len() {
            return Err(ModelError::FeatureCountMismatch {
                expected: self.feature_names.len(),
                got: x.len(),
            });
        }
        Ok(self.raw_predict(x))
    }

    /// Predicts every row of a matrix whose columns match the training ones.
    pub fn predict(&self, matrix: &FeatureMatrix<S>) -> Result<Vec<S>, ModelError> {
        if matrix.feature_names() != &self.feature_names[..] {
            if matrix.n_features() != self.feature_names.len() {
                return Err(ModelError::FeatureCountMismatch {
                    expected: self.feature_names.len(),
                    got: matrix.n_features(),
                });
            }
            return Err(ModelError::FeatureNamesMismatch);
        }
        Ok((0..matrix.n_rows())
            .map(|i| self.raw_predict(matrix.row(i)))
            .collect())
    }

    pub(crate) fn raw_predict(&self, x: &[S]) -> S {
        match self.kind {
            ModelKind::Tree => self.trees[0].predict(x),
            ModelKind::RandomForest => {
                let sum: S = self.trees.iter().map(|t| t.predict(x)).sum();
                sum / cast::<S>(self.trees.len() as f64)
            }
            ModelKind::GradientBoosting => {
                let sum: S = self.trees.iter().map(|t| t.predict(x)).sum();
                self.base_prediction + cast::<S>(self.learning_rate) * sum
            }
            ModelKind::Linear => {
                let fit = self.linear.as_ref().expect("linear model carries a fit");
                let mut acc = fit.intercept;
                for (xi, bi) in x.iter().zip(&fit.coefficients) {
                    acc += *xi * *bi;
                }
                acc
            }
        }
    }

    /// True for kinds built from decision trees.
    pub fn is_tree_based(&self) -> bool {
        !matches!(self.kind, ModelKind::Linear)
    }
}
