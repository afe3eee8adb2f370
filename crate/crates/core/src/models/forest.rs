//! Random forests: bootstrap-aggregated CART trees with per-split feature
//! subsets. Prediction is the unweighted mean over member trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Scalar;
use crate::seeding::derive_seed;
use crate::types::FeatureMatrix;

use super::tree::{prune_ccp, TreeBuilder, TreeNode};
use super::{EnsembleModel, ForestParams, ModelError, ModelKind, ModelParams};

/// Fits a random forest. Each tree grows on its own n-draw bootstrap (when
/// `bootstrap` is set) with a per-tree RNG seeded from `seed` and the tree
/// index, so results are independent of worker count and a shorter forest is
/// a prefix of a longer one under the same seed.
pub fn fit_random_forest<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    params: &ForestParams,
    seed: u64,
) -> Result<EnsembleModel<S>, ModelError> {
    if params.n_trees == 0 {
        return Err(ModelError::InvalidParams("n_trees must be at least 1".into()));
    }
    if let super::SplitFeatures::Fraction(f) = params.split_features {
        if !f.is_finite() || f <= 0.0 {
            return Err(ModelError::InvalidParams(
                "split feature fraction must be positive".into(),
            ));
        }
    }
    if matrix.n_rows() == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    if matrix.n_features() == 0 {
        return Err(ModelError::InvalidParams(
            "matrix has no feature columns".into(),
        ));
    }
    params.tree.validate()?;

    let n = matrix.n_rows();
    let p = matrix.n_features();
    let k = params.split_features.resolve(p);
    let columns: Vec<Vec<S>> = (0..p).map(|j| matrix.feature_column(j)).collect();
    let targets = matrix.targets();

    let trees: Vec<TreeNode<S>> = (0..params.n_trees)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "rf-tree", m as u64));
            let sample: Vec<u32> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            let mut builder = TreeBuilder::new(&columns, targets, &params.tree, k);
            let root = builder.fit(&sample, &mut rng);
            if params.tree.ccp_alpha > 0.0 {
                prune_ccp(root, params.tree.ccp_alpha, sample.len())
            } else {
                root
            }
        })
        .collect();

    Ok(EnsembleModel {
        kind: ModelKind::RandomForest,
        feature_names: matrix.feature_names().to_vec(),
        params: ModelParams::RandomForest(params.clone()),
        seed: Some(seed),
        base_prediction: S::zero(),
        learning_rate: 1.0,
        trees,
        linear: None,
    })
}
