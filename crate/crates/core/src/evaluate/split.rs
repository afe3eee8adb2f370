//! Chronological train/test splitting and hive-stratified k-fold assignment.

use std::collections::BTreeMap;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::seeding::derive_seed;
use crate::types::{FeatureMatrix, HiveId};

use super::EvalError;

/// Row indices of a chronological split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Groups row indices by hive, each group ordered by date (ties keep matrix
/// order). BTreeMap keeps hive iteration order independent of row layout.
fn rows_by_hive<S: Scalar>(matrix: &FeatureMatrix<S>) -> BTreeMap<HiveId, Vec<usize>> {
    let mut groups: BTreeMap<HiveId, Vec<usize>> = BTreeMap::new();
    for (i, meta) in matrix.meta().iter().enumerate() {
        groups.entry(meta.hive_id.clone()).or_default().push(i);
    }
    for rows in groups.values_mut() {
        rows.sort_by_key(|&i| (matrix.meta()[i].date, i));
    }
    groups
}

/// Splits each hive's history chronologically: the first
/// `ceil(train_frac * n)` rows train, the rest test. When the ceiling would
/// leave a multi-row hive without test rows, one row is held back so every
/// hive with at least two rows appears in both sets. Single-row hives go to
/// the training set with a warning.
pub fn split_train_test_by_history<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    train_frac: f64,
) -> Result<TrainTestSplit, EvalError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(EvalError::InvalidTrainFraction);
    }
    if matrix.n_rows() == 0 {
        return Err(EvalError::TooFewRows {
            required: 1,
            got: 0,
        });
    }
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (hive_id, rows) in rows_by_hive(matrix) {
        if rows.len() == 1 {
            warn!("hive {hive_id} has a single feature row; assigning it to the training set");
            train_rows.push(rows[0]);
            continue;
        }
        let n_train = ((train_frac * rows.len() as f64).ceil() as usize).min(rows.len() - 1);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(TrainTestSplit {
        train_rows,
        test_rows,
    })
}

/// Partitions `rows` into `k` disjoint, exhaustive folds, stratified by hive:
/// each hive's rows are dealt round-robin onto the folds in chronological
/// order from a seeded starting fold, so every fold sees every hive where
/// possible. Identical seeds give identical folds.
pub fn kfold_indices<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    rows: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewRowsForFolds { n: rows.len(), k });
    }
    if rows.len() < k {
        return Err(EvalError::TooFewRowsForFolds { n: rows.len(), k });
    }
    for &r in rows {
        if r >= matrix.n_rows() {
            return Err(EvalError::RowOutOfRange(r));
        }
    }

    let mut groups: BTreeMap<HiveId, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        groups
            .entry(matrix.meta()[r].hive_id.clone())
            .or_default()
            .push(r);
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (hive_index, (_, mut hive_rows)) in groups.into_iter().enumerate() {
        hive_rows.sort_by_key(|&i| (matrix.meta()[i].date, i));
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, "fold-offset", hive_index as u64));
        let offset = rng.gen_range(0..k);
        for (i, row) in hive_rows.into_iter().enumerate() {
            folds[(offset + i) % k].push(row);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{HiveId, RowMeta};
    use chrono::NaiveDate;
    use std::collections::HashSet;

    /// One-feature matrix with the given number of consecutive daily rows per
    /// hive, in interleaved insertion order to exercise the grouping.
    fn panel_matrix(hive_sizes: &[(&str, usize)]) -> FeatureMatrix<f64> {
        let mut metas = Vec::new();
        let mut data = Vec::new();
        let mut targets = Vec::new();
        let d0 = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        let max = hive_sizes.iter().map(|(_, n)| *n).max().unwrap();
        for day in 0..max {
            for (hive, n) in hive_sizes {
                if day < *n {
                    metas.push(RowMeta {
                        hive_id: HiveId::new(*hive),
                        date: d0 + chrono::Days::new(day as u64),
                    });
                    data.push(day as f64);
                    targets.push(day as f64 * 0.1);
                }
            }
        }
        FeatureMatrix::new(vec!["x".into()], data, targets, metas).unwrap()
    }

    #[test]
    fn eighty_twenty_examples() {
        let m = panel_matrix(&[("a", 10), ("b", 5)]);
        let split = split_train_test_by_history(&m, 0.8).unwrap();
        let count = |rows: &[usize], hive: &str| {
            rows.iter()
                .filter(|&&r| m.meta()[r].hive_id.as_str() == hive)
                .count()
        };
        assert_eq!(count(&split.train_rows, "a"), 8);
        assert_eq!(count(&split.test_rows, "a"), 2);
        assert_eq!(count(&split.train_rows, "b"), 4);
        assert_eq!(count(&split.test_rows, "b"), 1);
    }

    #[test]
    fn split_is_a_partition_respecting_chronology() {
        let m = panel_matrix(&[("a", 13), ("b", 7), ("c", 29)]);
        let split = split_train_test_by_history(&m, 0.8).unwrap();
        let train: HashSet<_> = split.train_rows.iter().copied().collect();
        let test: HashSet<_> = split.test_rows.iter().copied().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), m.n_rows());
        for hive in ["a", "b", "c"] {
            let latest_train = split
                .train_rows
                .iter()
                .filter(|&&r| m.meta()[r].hive_id.as_str() == hive)
                .map(|&r| m.meta()[r].date)
                .max()
                .unwrap();
            let earliest_test = split
                .test_rows
                .iter()
                .filter(|&&r| m.meta()[r].hive_id.as_str() == hive)
                .map(|&r| m.meta()[r].date)
                .min()
                .unwrap();
            assert!(latest_train < earliest_test);
        }
    }

    #[test]
    fn tiny_hives_still_reach_both_sets_when_possible() {
        // ceil(0.8 * 2) = 2 would starve the test set; one row is held back.
        let m = panel_matrix(&[("a", 2), ("b", 3)]);
        let split = split_train_test_by_history(&m, 0.8).unwrap();
        for hive in ["a", "b"] {
            for rows in [&split.train_rows, &split.test_rows] {
                assert!(
                    rows.iter()
                        .any(|&r| m.meta()[r].hive_id.as_str() == hive),
                    "hive {hive} missing from one side"
                );
            }
        }
    }

    #[test]
    fn single_row_hives_train_only() {
        let m = panel_matrix(&[("solo", 1), ("b", 5)]);
        let split = split_train_test_by_history(&m, 0.8).unwrap();
        assert!(split
            .train_rows
            .iter()
            .any(|&r| m.meta()[r].hive_id.as_str() == "solo"));
        assert!(!split
            .test_rows
            .iter()
            .any(|&r| m.meta()[r].hive_id.as_str() == "solo"));
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let m = panel_matrix(&[("a", 4)]);
        assert!(matches!(
            split_train_test_by_history(&m, 1.0),
            Err(EvalError::InvalidTrainFraction)
        ));
        assert!(matches!(
            split_train_test_by_history(&m, 0.0),
            Err(EvalError::InvalidTrainFraction)
        ));
    }

    #[test]
    fn folds_partition_the_rows() {
        let m = panel_matrix(&[("a", 10), ("b", 10)]);
        let rows: Vec<usize> = (0..m.n_rows()).collect();
        let folds = kfold_indices(&m, &rows, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = HashSet::new();
        for fold in &folds {
            assert_eq!(fold.len(), 4);
            for &r in fold {
                assert!(seen.insert(r), "row {r} appears in two folds");
            }
        }
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn folds_are_stratified_by_hive() {
        let m = panel_matrix(&[("a", 10), ("b", 10)]);
        let rows: Vec<usize> = (0..m.n_rows()).collect();
        let folds = kfold_indices(&m, &rows, 5, 3).unwrap();
        for fold in &folds {
            for hive in ["a", "b"] {
                let n = fold
                    .iter()
                    .filter(|&&r| m.meta()[r].hive_id.as_str() == hive)
                    .count();
                assert_eq!(n, 2, "hive {hive} unevenly dealt");
            }
        }
    }

    #[test]
    fn folds_are_deterministic_per_seed() {
        let m = panel_matrix(&[("a", 17), ("b", 9)]);
        let rows: Vec<usize> = (0..m.n_rows()).collect();
        assert_eq!(
            kfold_indices(&m, &rows, 5, 11).unwrap(),
            kfold_indices(&m, &rows, 5, 11).unwrap()
        );
        assert_ne!(
            kfold_indices(&m, &rows, 5, 11).unwrap(),
            kfold_indices(&m, &rows, 5, 12).unwrap()
        );
    }

    #[test]
    fn too_few_rows_for_folds_is_an_error() {
        let m = panel_matrix(&[("a", 3)]);
        let rows: Vec<usize> = (0..3).collect();
        assert!(matches!(
            kfold_indices(&m, &rows, 5, 0),
            Err(EvalError::TooFewRowsForFolds { n: 3, k: 5 })
        ));
    }
}
