//! Gradient boosting under squared loss.
//!
//! The model starts from the target mean and adds `eta`-scaled trees, each
//! fitted to the residuals of the running prediction. With squared loss the
//! per-sample hessian is 1, so `min_child_weight` is exactly a minimum leaf
//! sample count. Rounds use every feature and no row subsampling, so the fit
//! is deterministic; the seed is recorded for provenance only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::{cast, Scalar};
use crate::types::FeatureMatrix;

use super::tree::{TreeBuilder, TreeNode};
use super::{EnsembleModel, GbtParams, ModelError, ModelKind, ModelParams, TreeParams};

/// Fits a gradient-boosted tree ensemble.
pub fn fit_gradient_boosting<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    params: &GbtParams,
    seed: u64,
) -> Result<EnsembleModel<S>, ModelError> {
    if !(params.eta.is_finite() && params.eta > 0.0) {
        return Err(ModelError::InvalidParams("eta must be positive".into()));
    }
    if params.n_rounds == 0 {
        return Err(ModelError::InvalidParams(
            "n_rounds must be at least 1".into(),
        ));
    }
    if params.min_child_weight < 1 {
        return Err(ModelError::InvalidParams(
            "min_child_weight must be at least 1".into(),
        ));
    }
    if matrix.n_rows() == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    if matrix.n_features() == 0 {
        return Err(ModelError::InvalidParams(
            "matrix has no feature columns".into(),
        ));
    }

    let n = matrix.n_rows();
    let p = matrix.n_features();
    let y = matrix.targets();
    let columns: Vec<Vec<S>> = (0..p).map(|j| matrix.feature_column(j)).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        min_samples_leaf: params.min_child_weight,
        ccp_alpha: 0.0,
    };

    let base: S = y.iter().copied().sum::<S>() / cast::<S>(n as f64);
    let eta = cast::<S>(params.eta);
    let sample: Vec<u32> = (0..n as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut prediction = vec![base; n];
    let mut residuals: Vec<S> = y.iter().zip(&prediction).map(|(yi, pi)| *yi - *pi).collect();
    let mut trees: Vec<TreeNode<S>> = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let mut builder = TreeBuilder::new(&columns, &residuals, &tree_params, p);
        let tree = builder.fit(&sample, &mut rng);
        for i in 0..n {
            prediction[i] += eta * tree.predict(matrix.row(i));
            residuals[i] = y[i] - prediction[i];
        }
        trees.push(tree);
    }

    Ok(EnsembleModel {
        kind: ModelKind::GradientBoosting,
        feature_names: matrix.feature_names().to_vec(),
        params: ModelParams::GradientBoosting(params.clone()),
        seed: Some(seed),
        base_prediction: base,
        learning_rate: params.eta,
        trees,
        linear: None,
    })
}
