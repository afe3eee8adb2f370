//! Stochastic hyperparameter search over a finite grid.
//!
//! Combinations are sampled without replacement from the mixed-radix product
//! space of the candidate lists, each trial is scored by mean k-fold MSE on
//! shared folds, and the lowest mean wins with ties going to the first
//! sampled trial. Everything derives from the search seed, so the trial log
//! is reproducible across runs and worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{fit_model, ForestParams, GbtParams, ModelParams, SplitFeatures, TreeParams};
use crate::scalar::{to_f64, Scalar};
use crate::seeding::derive_seed;
use crate::types::FeatureMatrix;

use super::metrics::mean_squared_error;
use super::split::kfold_indices;
use super::EvalError;

/// Candidate lists for random-forest tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<u32>>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub ccp_alpha: Vec<f64>,
}

impl Default for RfGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![25, 50, 100, 200],
            max_depth: vec![Some(5), Some(10), Some(20), Some(30), None],
            min_samples_split: vec![2, 50, 100, 200, 400],
            min_samples_leaf: vec![1, 50, 100, 200],
            ccp_alpha: vec![0.0, 1e-4, 1e-3],
        }
    }
}

/// Candidate lists for gradient-boosting tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbtGrid {
    pub eta: Vec<f64>,
    pub max_depth: Vec<Option<u32>>,
    pub min_child_weight: Vec<usize>,
    pub n_rounds: Vec<usize>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        Self {
            eta: vec![0.01, 0.05, 0.08, 0.1, 0.3],
            max_depth: vec![Some(3), Some(4), Some(6), Some(8), Some(10)],
            min_child_weight: vec![1, 3, 5, 7, 10],
            n_rounds: vec![50, 100, 200, 500],
        }
    }
}

/// Grid for one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ParamSpace {
    RandomForest(RfGrid),
    GradientBoosting(GbtGrid),
}

impl ParamSpace {
    /// Candidate-list sizes, least-significant dimension first.
    fn dims(&self) -> Vec<usize> {
        match self {
            ParamSpace::RandomForest(g) => vec![
                g.n_trees.len(),
                g.max_depth.len(),
                g.min_samples_split.len(),
                g.min_samples_leaf.len(),
                g.ccp_alpha.len(),
            ],
            ParamSpace::GradientBoosting(g) => vec![
                g.eta.len(),
                g.max_depth.len(),
                g.min_child_weight.len(),
                g.n_rounds.len(),
            ],
        }
    }

    /// Decodes a mixed-radix combination code into concrete parameters.
    fn decode(&self, mut code: u64) -> ModelParams {
        let mut digit = |size: usize| {
            let d = (code % size as u64) as usize;
            code /= size as u64;
            d
        };
        match self {
            ParamSpace::RandomForest(g) => {
                let n_trees = g.n_trees[digit(g.n_trees.len())];
                let max_depth = g.max_depth[digit(g.max_depth.len())];
                let min_samples_split = g.min_samples_split[digit(g.min_samples_split.len())];
                let min_samples_leaf = g.min_samples_leaf[digit(g.min_samples_leaf.len())];
                let ccp_alpha = g.ccp_alpha[digit(g.ccp_alpha.len())];
                ModelParams::RandomForest(ForestParams {
                    n_trees,
                    tree: TreeParams {
                        max_depth,
                        min_samples_split,
                        min_samples_leaf,
                        ccp_alpha,
                    },
                    split_features: SplitFeatures::ThirdCeil,
                    bootstrap: true,
                })
            }
            ParamSpace::GradientBoosting(g) => {
                let eta = g.eta[digit(g.eta.len())];
                let max_depth = g.max_depth[digit(g.max_depth.len())];
                let min_child_weight = g.min_child_weight[digit(g.min_child_weight.len())];
                let n_rounds = g.n_rounds[digit(g.n_rounds.len())];
                ModelParams::GradientBoosting(GbtParams {
                    eta,
                    max_depth,
                    min_child_weight,
                    n_rounds,
                })
            }
        }
    }
}

/// A search task: grid, iteration budget, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    #[serde(flatten)]
    pub space: ParamSpace,
    /// Number of combinations to try; clamped to the grid size because
    /// sampling is without replacement.
    pub n_iterations: usize,
    pub seed: u64,
}

impl SearchSpace {
    pub fn new(space: ParamSpace, n_iterations: usize, seed: u64) -> Self {
        Self {
            space,
            n_iterations,
            seed,
        }
    }
}

/// One scored combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: ModelParams,
    pub mean_cv_mse: f64,
    /// Population standard deviation over the fold MSEs.
    pub std_cv_mse: f64,
}

/// Outcome of a search: the winning parameters plus the full trial log in
/// sampling order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: ModelParams,
    pub best_trial: usize,
    pub trials: Vec<TrialRecord>,
}

/// Draws `n` distinct codes from `0..total`, seeded. Small spaces get an
/// exact partial Fisher-Yates; huge ones fall back to rejection sampling.
fn sample_codes(total: u64, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if total <= 4_000_000 {
        let mut pool: Vec<u64> = (0..total).collect();
        let len = pool.len();
        for i in 0..n.min(len) {
            let j = rng.gen_range(i..len);
            pool.swap(i, j);
        }
        pool.truncate(n);
        pool
    } else {
        let mut seen = std::collections::HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let code = rng.gen_range(0..total);
            if seen.insert(code) {
                out.push(code);
            }
        }
        out
    }
}

/// Runs a seeded random search over `space`, scoring each combination by
/// mean MSE over `k` shared hive-stratified folds of `rows`.
pub fn random_search_cv<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    rows: &[usize],
    search: &SearchSpace,
    k: usize,
) -> Result<SearchResult, EvalError> {
    let dims = search.space.dims();
    if dims.iter().any(|&d| d == 0) || search.n_iterations == 0 {
        return Err(EvalError::EmptySearchSpace);
    }
    let total: u64 = dims.iter().map(|&d| d as u64).product();
    let n_trials = search.n_iterations.min(total as usize);

    let folds = kfold_indices(matrix, rows, k, derive_seed(search.seed, "cv-folds", 0))?;
    let row_set: std::collections::HashSet<usize> = rows.iter().copied().collect();
    let splits: Vec<(FeatureMatrix<S>, FeatureMatrix<S>)> = folds
        .iter()
        .map(|fold| {
            let holdout: std::collections::HashSet<usize> = fold.iter().copied().collect();
            let train: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| row_set.contains(r) && !holdout.contains(r))
                .collect();
            (matrix.subset(&train), matrix.subset(fold))
        })
        .collect();

    let codes = sample_codes(total, n_trials, derive_seed(search.seed, "sampling", 0));
    let trials: Vec<TrialRecord> = codes
        .into_par_iter()
        .enumerate()
        .map(|(trial, code)| {
            let params = search.space.decode(code);
            let trial_seed = derive_seed(search.seed, "trial", trial as u64);
            let mut fold_mses = Vec::with_capacity(splits.len());
            for (fold_idx, (train, validate)) in splits.iter().enumerate() {
                let seed = derive_seed(trial_seed, "fold", fold_idx as u64);
                let model = fit_model(train, &params, seed)?;
                let predictions = model.predict(validate)?;
                fold_mses.push(to_f64(mean_squared_error(
                    validate.targets(),
                    &predictions,
                )?));
            }
            let kf = fold_mses.len() as f64;
            let mean = fold_mses.iter().sum::<f64>() / kf;
            let var = fold_mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / kf;
            Ok(TrialRecord {
                trial,
                params,
                mean_cv_mse: mean,
                std_cv_mse: var.sqrt(),
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let mut best_trial = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.mean_cv_mse < trials[best_trial].mean_cv_mse {
            best_trial = i;
        }
    }
    Ok(SearchResult {
        best_params: trials[best_trial].params.clone(),
        best_trial,
        trials,
    })
}
