//! Shapley values with an interventional value function.
//!
//! The value of a coalition is the mean model output over a background
//! sample with coalition features pinned to the explained row. Small feature
//! counts are solved exactly by enumerating all subsets with the Shapley
//! kernel weights `|S|! (K-|S|-1)! / K!`; larger ones use a seeded
//! permutation-walk estimator with antithetic ordering and background
//! cycling to cut Monte Carlo variance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{EnsembleModel, ModelError};
use crate::scalar::{cast, Scalar};
use crate::seeding::derive_seed;
use crate::types::FeatureMatrix;

use super::{Explanation, ExplainError, ImportanceMethod};

/// Controls for Shapley-value computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapConfig {
    /// Background rows drawn (without replacement) from a reference matrix.
    pub background_size: usize,
    /// Exact subset enumeration is used up to this many features.
    pub exact_max_features: usize,
    /// Permutation walks for the sampled estimator; 0 disables sampling, so
    /// wide matrices become an error instead.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            background_size: 100,
            exact_max_features: 15,
            mc_samples: 2048,
            seed: 0,
        }
    }
}

/// Shapley decomposition of one prediction: `f(x) = baseline + sum(phi)` up
/// to estimator error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRow<S> {
    pub phi: Vec<S>,
    /// Mean model output over the full background.
    pub baseline: S,
    /// Per-feature Monte Carlo standard error (sampled path only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<Vec<S>>,
}

/// Mean-|phi| summary over a set of explained rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary<S> {
    pub feature_names: Vec<String>,
    pub mean_abs_phi: Vec<S>,
    /// Feature indices by descending `mean_abs_phi`; ties keep the lower
    /// index first.
    pub ranking: Vec<usize>,
    pub baseline: S,
    pub rows: Vec<ShapRow<S>>,
}

impl<S: Scalar> ShapSummary<S> {
    /// Collapses the summary into the common importance shape.
    pub fn to_explanation(&self) -> Explanation<S> {
        Explanation {
            method: ImportanceMethod::ShapMeanAbs,
            feature_names: self.feature_names.clone(),
            scores: self.mean_abs_phi.clone(),
            std: None,
        }
    }
}

/// Draws `size` rows without replacement (all rows when `size >= n`),
/// deterministically under `seed`, preserving row order.
pub fn sample_background<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    size: usize,
    seed: u64,
) -> FeatureMatrix<S> {
    let n = matrix.n_rows();
    if size >= n {
        return matrix.subset(&(0..n).collect::<Vec<_>>());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "shap-background", 0));
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..size].to_vec();
    chosen.sort_unstable();
    matrix.subset(&chosen)
}

fn mean_background_output<S: Scalar>(model: &EnsembleModel<S>, background: &FeatureMatrix<S>) -> S {
    let mut acc = S::zero();
    for r in 0..background.n_rows() {
        acc += model.raw_predict(background.row(r));
    }
    acc / cast::<S>(background.n_rows() as f64)
}

fn exact_shap<S: Scalar>(
    model: &EnsembleModel<S>,
    x: &[S],
    background: &FeatureMatrix<S>,
) -> ShapRow<S> {
    let k = x.len();
    let b = background.n_rows();
    let n_masks = 1usize << k;

    let mut v = vec![S::zero(); n_masks];
    let mut buf = vec![S::zero(); k];
    for (mask, slot) in v.iter_mut().enumerate() {
        let mut acc = S::zero();
        for r in 0..b {
            buf.copy_from_slice(background.row(r));
            let mut bits = mask;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                buf[j] = x[j];
                bits &= bits - 1;
            }
            acc += model.raw_predict(&buf);
        }
        *slot = acc / cast::<S>(b as f64);
    }

    let mut factorial = vec![1.0f64; k + 1];
    for i in 1..=k {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let weights: Vec<S> = (0..k)
        .map(|s| cast::<S>(factorial[s] * factorial[k - s - 1] / factorial[k]))
        .collect();

    let mut phi = vec![S::zero(); k];
    for mask in 0..n_masks {
        let s = (mask as u64).count_ones() as usize;
        if s == k {
            continue;
        }
        let w = weights[s];
        for (i, phi_i) in phi.iter_mut().enumerate() {
            if mask & (1 << i) == 0 {
                *phi_i += w * (v[mask | (1 << i)] - v[mask]);
            }
        }
    }

    ShapRow {
        phi,
        baseline: v[0],
        std_err: None,
    }
}

fn sampled_shap<S: Scalar>(
    model: &EnsembleModel<S>,
    x: &[S],
    background: &FeatureMatrix<S>,
    mc_samples: usize,
    seed: u64,
) -> ShapRow<S> {
    let k = x.len();
    let b = background.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "shap-perms", 0));

    let mut sum = vec![S::zero(); k];
    let mut sumsq = vec![S::zero(); k];
    let mut order: Vec<usize> = (0..k).collect();
    let mut buf = vec![S::zero(); k];
    let mut walk = |order: &[usize], bg_row: &[S], sum: &mut [S], sumsq: &mut [S]| {
        buf.copy_from_slice(bg_row);
        let mut prev = model.raw_predict(&buf);
        for &j in order {
            buf[j] = x[j];
            let cur = model.raw_predict(&buf);
            let delta = cur - prev;
            sum[j] += delta;
            sumsq[j] += delta * delta;
            prev = cur;
        }
    };

    let mut done = 0usize;
    let mut cursor = 0usize;
    while done < mc_samples {
        for i in (1..k).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        walk(&order, background.row(cursor % b), &mut sum, &mut sumsq);
        done += 1;
        cursor += 1;
        if done < mc_samples {
            // Antithetic pass: the reversed order on the next background row.
            order.reverse();
            walk(&order, background.row(cursor % b), &mut sum, &mut sumsq);
            done += 1;
            cursor += 1;
        }
    }

    let n = cast::<S>(mc_samples as f64);
    let phi: Vec<S> = sum.iter().map(|s| *s / n).collect();
    let std_err: Vec<S> = sumsq
        .iter()
        .zip(&phi)
        .map(|(sq, mean)| ((*sq / n - *mean * *mean).max(S::zero()) / n).sqrt())
        .collect();

    ShapRow {
        phi,
        baseline: mean_background_output(model, background),
        std_err: Some(std_err),
    }
}

/// Shapley values for one row. Chooses the exact path when the feature count
/// allows it, otherwise the sampled estimator.
pub fn shap_values<S: Scalar>(
    model: &EnsembleModel<S>,
    x: &[S],
    background: &FeatureMatrix<S>,
    config: &ShapConfig,
) -> Result<ShapRow<S>, ExplainError> {
    let k = model.feature_names.len();
    if x.len() != k {
        return Err(ExplainError::RowLength {
            expected: k,
            got: x.len(),
        });
    }
    if background.n_rows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    if background.feature_names() != &model.feature_names[..] {
        return Err(ExplainError::Model(ModelError::FeatureNamesMismatch));
    }
    if k <= config.exact_max_features {
        Ok(exact_shap(model, x, background))
    } else if config.mc_samples > 0 {
        Ok(sampled_shap(model, x, background, config.mc_samples, config.seed))
    } else {
        Err(ExplainError::TooManyFeatures {
            k,
            max: config.exact_max_features,
        })
    }
}

/// Explains every row of `rows`, ranking features by mean |phi|.
///
/// Sampled rows get independent seeds derived from `config.seed` and the row
/// index, so the summary is reproducible and order-independent.
pub fn shap_global_summary<S: Scalar>(
    model: &EnsembleModel<S>,
    rows: &FeatureMatrix<S>,
    background: &FeatureMatrix<S>,
    config: &ShapConfig,
) -> Result<ShapSummary<S>, ExplainError> {
    if rows.n_rows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    let explained: Vec<ShapRow<S>> = (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let row_config = ShapConfig {
                seed: derive_seed(config.seed, "shap-row", i as u64),
                ..*config
            };
            shap_values(model, rows.row(i), background, &row_config)
        })
        .collect::<Result<_, _>>()?;

    let k = model.feature_names.len();
    let n = cast::<S>(explained.len() as f64);
    let mut mean_abs = vec![S::zero(); k];
    for row in &explained {
        for (m, p) in mean_abs.iter_mut().zip(&row.phi) {
            *m += p.abs();
        }
    }
    for m in mean_abs.iter_mut() {
        *m /= n;
    }
    let mut ranking: Vec<usize> = (0..k).collect();
    ranking.sort_by(|&a, &b| {
        mean_abs[b]
            .partial_cmp(&mean_abs[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });

    Ok(ShapSummary {
        feature_names: model.feature_names.clone(),
        mean_abs_phi: mean_abs,
        ranking,
        baseline: explained[0].baseline,
        rows: explained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        fit_linear_ols, fit_regression_tree, ModelKind, ModelParams, TreeNode, TreeParams,
    };
    use crate::types::{HiveId, RowMeta};
    use approx::assert_relative_eq;

    fn matrix_from(rows: &[Vec<f64>], y: &[f64], names: &[&str]) -> FeatureMatrix<f64> {
        let metas = (0..y.len())
            .map(|i| RowMeta {
                hive_id: HiveId::new("h"),
                date: chrono::NaiveDate::from_ymd_opt(2021, 6, 1).unwrap()
                    + chrono::Days::new(i as u64),
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

    fn random_matrix(n: usize, p: usize, seed: u64) -> FeatureMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0].max(0.0) * 4.0 - r[1.min(p - 1)] + rng.gen_range(-0.2..0.2))
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        matrix_from(&rows, &y, &name_refs)
    }

    #[test]
    fn constant_model_gets_zero_phi_and_its_constant_as_baseline() {
        let m = random_matrix(30, 3, 1);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(0),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let bg = sample_background(&m, 10, 0);
        let row = shap_values(&model, m.row(0), &bg, &ShapConfig::default()).unwrap();
        assert!(row.phi.iter().all(|&p| p == 0.0));
        assert_relative_eq!(
            row.baseline,
            model.predict_row(m.row(0)).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_feature_model_shifts_by_the_background_mean() {
        // f(x) = x0 exactly (noiseless OLS fit).
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.25 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let m = matrix_from(&rows, &y, &["x0"]);
        let model = fit_linear_ols(&m).unwrap();
        let bg = sample_background(&m, 8, 3);
        let bg_mean = (0..bg.n_rows()).map(|r| bg.row(r)[0]).sum::<f64>() / bg.n_rows() as f64;

        let x = [1.75];
        let row = shap_values(&model, &x, &bg, &ShapConfig::default()).unwrap();
        assert_relative_eq!(row.phi[0], x[0] - bg_mean, epsilon = 1e-10);
        assert_relative_eq!(row.baseline, bg_mean, epsilon = 1e-10);
    }

    #[test]
    fn additive_linear_model_decomposes_per_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let beta = [2.0, -1.5, 0.5];
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + r.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>())
            .collect();
        let m = matrix_from(&rows, &y, &["a", "b", "c"]);
        let model = fit_linear_ols(&m).unwrap();
        let bg = sample_background(&m, 25, 5);

        let x = m.row(7);
        let row = shap_values(&model, x, &bg, &ShapConfig::default()).unwrap();
        for j in 0..3 {
            let bg_mean =
                (0..bg.n_rows()).map(|r| bg.row(r)[j]).sum::<f64>() / bg.n_rows() as f64;
            assert_relative_eq!(row.phi[j], beta[j] * (x[j] - bg_mean), epsilon = 1e-9);
        }
    }

    /// Forest of two stumps splitting on duplicated columns; symmetric in
    /// (x0, x1) by construction.
    fn symmetric_fixture() -> EnsembleModel<f64> {
        let stump = |feature: usize| TreeNode::Internal {
            feature,
            threshold: 2.5,
            n: 4,
            c: 5.0,
            sse: 100.0,
            left: Box::new(TreeNode::Leaf {
                n: 2,
                c: 0.0,
                sse: 0.0,
            }),
            right: Box::new(TreeNode::Leaf {
                n: 2,
                c: 10.0,
                sse: 0.0,
            }),
        };
        EnsembleModel {
            kind: ModelKind::RandomForest,
            feature_names: vec!["dup_a".into(), "dup_b".into()],
            params: ModelParams::Linear,
            seed: None,
            base_prediction: 0.0,
            learning_rate: 1.0,
            trees: vec![stump(0), stump(1)],
            linear: None,
        }
    }

    #[test]
    fn duplicated_columns_with_a_symmetric_model_share_phi() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.6, i as f64 * 0.6]).collect();
        let y = vec![0.0; 10];
        let m = matrix_from(&rows, &y, &["dup_a", "dup_b"]);
        let model = symmetric_fixture();
        let bg = sample_background(&m, 10, 0);
        for i in 0..m.n_rows() {
            let row = shap_values(&model, m.row(i), &bg, &ShapConfig::default()).unwrap();
            assert!(
                (row.phi[0] - row.phi[1]).abs() <= 1e-10,
                "asymmetric phi {:?}",
                row.phi
            );
        }
    }

    #[test]
    fn efficiency_holds_on_the_exact_path() {
        let m = random_matrix(60, 5, 2);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(4),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let bg = sample_background(&m, 30, 1);
        for i in 0..10 {
            let x = m.row(i);
            let row = shap_values(&model, x, &bg, &ShapConfig::default()).unwrap();
            let total: f64 = row.phi.iter().sum();
            let f = model.predict_row(x).unwrap();
            assert!(
                (total - (f - row.baseline)).abs() <= 1e-8,
                "efficiency violated: {total} vs {}",
                f - row.baseline
            );
        }
    }

    #[test]
    fn sampled_estimator_approaches_the_exact_values() {
        let m = random_matrix(80, 6, 4);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let bg = sample_background(&m, 16, 2);
        let x = m.row(3);
        let exact = shap_values(&model, x, &bg, &ShapConfig::default()).unwrap();
        let sampled_config = ShapConfig {
            exact_max_features: 0,
            mc_samples: 1 << 14,
            seed: 11,
            ..ShapConfig::default()
        };
        let sampled = shap_values(&model, x, &bg, &sampled_config).unwrap();
        for (e, s) in exact.phi.iter().zip(&sampled.phi) {
            assert!(
                (e - s).abs() < 2e-2,
                "sampled phi {s} too far from exact {e}"
            );
        }
        assert_relative_eq!(exact.baseline, sampled.baseline, epsilon = 1e-12);
        assert!(sampled.std_err.is_some());
    }

    #[test]
    fn wide_rows_without_sampling_budget_are_rejected() {
        let m = random_matrix(20, 4, 6);
        let model = fit_linear_ols(&m).unwrap();
        let bg = sample_background(&m, 5, 0);
        let config = ShapConfig {
            exact_max_features: 3,
            mc_samples: 0,
            ..ShapConfig::default()
        };
        assert!(matches!(
            shap_values(&model, m.row(0), &bg, &config),
            Err(ExplainError::TooManyFeatures { k: 4, max: 3 })
        ));
    }

    #[test]
    fn summary_ranks_by_mean_abs_phi_with_index_tie_breaks() {
        let m = random_matrix(40, 3, 8);
        let model = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(0),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let bg = sample_background(&m, 10, 0);
        let summary = shap_global_summary(&model, &m, &bg, &ShapConfig::default()).unwrap();
        // Constant model: all-zero phi, so ranking falls back to index order.
        assert_eq!(summary.ranking, vec![0, 1, 2]);
        assert!(summary.mean_abs_phi.iter().all(|&v| v == 0.0));

        let strong = fit_regression_tree(
            &m,
            &TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let summary = shap_global_summary(&strong, &m, &bg, &ShapConfig::default()).unwrap();
        assert_eq!(summary.rows.len(), m.n_rows());
        assert_eq!(summary.ranking[0], 0, "planted signal must rank first");
        let explanation = summary.to_explanation();
        assert_eq!(explanation.ranking()[0], 0);
    }

    #[test]
    fn background_sampling_is_deterministic_and_clamped() {
        let m = random_matrix(12, 2, 3);
        let a = sample_background(&m, 5, 7);
        let b = sample_background(&m, 5, 7);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.n_rows(), 5);
        let all = sample_background(&m, 50, 7);
        assert_eq!(all.n_rows(), 12);
    }
}
