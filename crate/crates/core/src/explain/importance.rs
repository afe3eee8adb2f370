//! Impurity and permutation feature importances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::evaluate::mean_squared_error;
use crate::models::{EnsembleModel, TreeNode};
use crate::scalar::{cast, Scalar};
use crate::seeding::derive_seed;
use crate::types::FeatureMatrix;

use super::{Explanation, ExplainError, ImportanceMethod};

/// Total SSE reduction attributed to each feature across an ensemble's
/// splits, averaged over trees and normalized to sum 1.
///
/// A node's stored `sse` values are sums over its training rows, so the
/// parent-minus-children reduction already carries the node-size weighting;
/// the per-sample scaling cancels in the normalization. A model whose trees
/// never split yields the all-zero vector.
pub fn impurity_importance<S: Scalar>(
    model: &EnsembleModel<S>,
) -> Result<Explanation<S>, ExplainError> {
    if !model.is_tree_based() {
        return Err(ExplainError::UnsupportedModel(model.kind));
    }
    let p = model.feature_names.len();
    let mut totals = vec![S::zero(); p];
    for tree in &model.trees {
        tree.visit(&mut |node| {
            if let TreeNode::Internal {
                feature,
                sse,
                left,
                right,
                ..
            } = node
            {
                totals[*feature] += *sse - left.sse() - right.sse();
            }
        });
    }
    let m = cast::<S>(model.trees.len() as f64);
    for t in totals.iter_mut() {
        *t /= m;
    }
    let sum: S = totals.iter().copied().sum();
    if sum > S::zero() {
        for t in totals.iter_mut() {
            *t /= sum;
        }
    }
    Ok(Explanation {
        method: ImportanceMethod::Impurity,
        feature_names: model.feature_names.clone(),
        scores: totals,
        std: None,
    })
}

/// Mean and standard deviation, over `n_repeats` seeded shuffles per
/// feature, of the MSE increase caused by permuting that feature's column.
///
/// A feature the model never reads leaves predictions bit-identical, so its
/// score is exactly zero. The spread is the population standard deviation.
pub fn permutation_importance<S: Scalar>(
    model: &EnsembleModel<S>,
    matrix: &FeatureMatrix<S>,
    n_repeats: usize,
    seed: u64,
) -> Result<Explanation<S>, ExplainError> {
    let baseline_predictions = model.predict(matrix)?;
    let baseline = mean_squared_error(matrix.targets(), &baseline_predictions)?;
    let n = matrix.n_rows();
    let p = matrix.n_features();

    let per_feature: Vec<(S, S)> = (0..p)
        .into_par_iter()
        .map(|j| {
            let feature_seed = derive_seed(seed, "permute-feature", j as u64);
            let column = matrix.feature_column(j);
            let mut increases = Vec::with_capacity(n_repeats);
            let mut shuffled = column.clone();
            let mut buf = vec![S::zero(); p];
            for repeat in 0..n_repeats {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(feature_seed, "repeat", repeat as u64));
                shuffled.copy_from_slice(&column);
                for i in (1..n).rev() {
                    let k = rng.gen_range(0..=i);
                    shuffled.swap(i, k);
                }
                let mut sse = S::zero();
                for i in 0..n {
                    buf.copy_from_slice(matrix.row(i));
                    buf[j] = shuffled[i];
                    let err = matrix.targets()[i] - model.raw_predict(&buf);
                    sse += err * err;
                }
                increases.push(sse / cast::<S>(n as f64) - baseline);
            }
            let reps = cast::<S>(n_repeats as f64);
            let mean: S = increases.iter().copied().sum::<S>() / reps;
            let var: S = increases
                .iter()
                .map(|x| (*x - mean) * (*x - mean))
                .sum::<S>()
                / reps;
            (mean, var.sqrt())
        })
        .collect();

    Ok(Explanation {
        method: ImportanceMethod::Permutation,
        feature_names: matrix.feature_names().to_vec(),
        scores: per_feature.iter().map(|(m, _)| *m).collect(),
        std: Some(per_feature.iter().map(|(_, s)| *s).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        fit_gradient_boosting, fit_linear_ols, fit_random_forest, fit_regression_tree,
        ForestParams, GbtParams, SplitFeatures, TreeParams,
    };
    use crate::types::{HiveId, RowMeta};
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn matrix_from(rows: &[Vec<f64>], y: &[f64], names: &[&str]) -> FeatureMatrix<f64> {
        let metas = (0..y.len())
            .map(|i| RowMeta {
                hive_id: HiveId::new("h"),
                date: NaiveDate::from_ymd_opt(2021, 5, 1).unwrap() + chrono::Days::new(i as u64),
            })
            .collect();
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        FeatureMatrix::new(
            names.iter().map(|s| s.to_string()).collect(),
            data,
            y.to_vec(),
            metas,
        )
        .unwrap()
    }

    fn planted_matrix(n: usize, seed: u64) -> FeatureMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 5.0 * r[0] + rng.gen_range(-0.1..0.1))
            .collect();
        matrix_from(&rows, &y, &["signal", "noise"])
    }

    #[test]
    fn stump_assigns_all_impurity_to_its_split_feature() {
        let m = matrix_from(
            &[
                vec![1.0, 9.0],
                vec![2.0, 8.0],
                vec![3.0, 7.0],
                vec![4.0, 6.0],
            ],
            &[0.0, 0.0, 10.0, 10.0],
            &["a", "b"],
        );
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(1),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let exp = impurity_importance(&model).unwrap();
        assert_relative_eq!(exp.scores[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(exp.scores[1], 0.0);
        assert_eq!(exp.ranking(), vec![0, 1]);
    }

    #[test]
    fn impurity_scores_sum_to_one_for_forests_and_boosters() {
        let m = planted_matrix(120, 3);
        let forest = fit_random_forest(
            &m,
            &ForestParams {
                n_trees: 5,
                tree: TreeParams {
                    max_depth: Some(3),
                    min_samples_split: 4,
                    min_samples_leaf: 2,
                    ccp_alpha: 0.0,
                },
                split_features: SplitFeatures::All,
                bootstrap: true,
            },
            7,
        )
        .unwrap();
        let gbt = fit_gradient_boosting(
            &m,
            &GbtParams {
                n_rounds: 10,
                ..GbtParams::default()
            },
            7,
        )
        .unwrap();
        for model in [forest, gbt] {
            let exp = impurity_importance(&model).unwrap();
            let total: f64 = exp.scores.iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
            assert!(
                exp.scores[0] > exp.scores[1],
                "planted signal must dominate: {:?}",
                exp.scores
            );
        }
    }

    #[test]
    fn linear_models_are_unsupported_for_impurity() {
        let m = planted_matrix(40, 5);
        let model = fit_linear_ols(&m).unwrap();
        assert!(matches!(
            impurity_importance(&model),
            Err(ExplainError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn unused_feature_has_exactly_zero_permutation_importance() {
        let m = planted_matrix(100, 11);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(2),
                ..TreeParams::default()
            },
        )
        .unwrap();
        // The tree splits only on the planted signal at this depth.
        let exp = permutation_importance(&model, &m, 5, 42).unwrap();
        assert!(exp.scores[0] > 0.5);
        assert_eq!(exp.scores[1], 0.0);
        assert_eq!(exp.std.as_ref().unwrap()[1], 0.0);
    }

    #[test]
    fn constant_model_has_all_zero_permutation_importance() {
        let m = planted_matrix(50, 13);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(0),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let exp = permutation_importance(&model, &m, 4, 1).unwrap();
        assert!(exp.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn permutation_importance_matches_a_direct_shuffle_estimate() {
        // With f(x) = x0 exactly and y = x0, the permuted MSE is
        // E[(x0 - shuffled x0)^2] = 2 * Var(x0).
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let m = matrix_from(&rows, &y, &["x0", "x1"]);
        let model = fit_linear_ols(&m).unwrap();

        let exp = permutation_importance(&model, &m, 10, 5).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        let expected = 2.0 * var;
        assert!(
            (exp.scores[0] - expected).abs() < 0.15 * expected,
            "got {}, expected about {expected}",
            exp.scores[0]
        );
        assert!(exp.scores[1].abs() < 1e-6);
    }

    #[test]
    fn permutation_importance_is_deterministic_per_seed() {
        let m = planted_matrix(60, 17);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let a = permutation_importance(&model, &m, 3, 9).unwrap();
        let b = permutation_importance(&model, &m, 3, 9).unwrap();
        assert_eq!(a, b);
        let c = permutation_importance(&model, &m, 3, 10).unwrap();
        assert_ne!(a.scores, c.scores);
    }
}
