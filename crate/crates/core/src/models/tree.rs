//! Greedy CART regression trees.
//!
//! Splits minimize the summed squared error of the two children over every
//! candidate feature and every midpoint between consecutive distinct sorted
//! feature values. Rows with `x[feature] <= threshold` go left. Ties break
//! toward the lowest feature index, then the smallest threshold.
//!
//! The builder presorts one row-index list per feature and stably partitions
//! those lists at each split, so a full level costs O(p * n) regardless of
//! depth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{cast, to_f64, Scalar};
use crate::types::FeatureMatrix;

use super::{EnsembleModel, ModelError, ModelKind, ModelParams, TreeParams};

/// A fitted tree node.
///
/// Every node stores its training-sample count `n`, mean target `c`, and
/// within-node squared error `sse`; internal nodes add the split and
/// children. The serialized field names are the compact `j`/`s` forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode<S: Scalar> {
    Internal {
        #[serde(rename = "j")]
        feature: usize,
        #[serde(rename = "s")]
        threshold: S,
        n: usize,
        c: S,
        sse: S,
        left: Box<TreeNode<S>>,
        right: Box<TreeNode<S>>,
    },
    Leaf {
        n: usize,
        c: S,
        sse: S,
    },
}

impl<S: Scalar> TreeNode<S> {
    /// Routes a row to its leaf and returns the leaf constant.
    pub fn predict(&self, x: &[S]) -> S {
        match self {
            TreeNode::Leaf { c, .. } => *c,
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Training-sample count at this node.
    pub fn n(&self) -> usize {
        match self {
            TreeNode::Leaf { n, .. } | TreeNode::Internal { n, .. } => *n,
        }
    }

    /// Mean training target at this node (the leaf constant).
    pub fn c(&self) -> S {
        match self {
            TreeNode::Leaf { c, .. } | TreeNode::Internal { c, .. } => *c,
        }
    }

    /// Within-node squared error around the node mean.
    pub fn sse(&self) -> S {
        match self {
            TreeNode::Leaf { sse, .. } | TreeNode::Internal { sse, .. } => *sse,
        }
    }

    /// Pre-order traversal over all nodes.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode<S>)) {
        f(self);
        if let TreeNode::Internal { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

/// The winning split of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate<S> {
    pub feature: usize,
    pub threshold: S,
    pub n_left: usize,
    pub n_right: usize,
    pub sse_left: S,
    pub sse_right: S,
}

fn sample_stats<S: Scalar>(ys: &[S], sample: &[u32]) -> (S, S) {
    let mut sum = S::zero();
    let mut sq = S::zero();
    for &r in sample {
        let y = ys[r as usize];
        sum += y;
        sq += y * y;
    }
    (sum, sq)
}

/// Best boundary on one feature over a value-sorted sample, or `None` when
/// every value is equal. `order` holds row indices ascending by `col` value.
fn scan_sorted_feature<S: Scalar>(
    col: &[S],
    ys: &[S],
    order: &[u32],
    total_sum: S,
    total_sq: S,
) -> Option<(S, usize, S, S)> {
    let n = order.len();
    let mut best: Option<(S, usize, S, S)> = None;
    let mut best_score = S::infinity();
    let mut left_sum = S::zero();
    let mut left_sq = S::zero();
    for i in 0..n.saturating_sub(1) {
        let row = order[i] as usize;
        let y = ys[row];
        left_sum += y;
        left_sq += y * y;
        let lo = col[row];
        let hi = col[order[i + 1] as usize];
        if hi <= lo {
            continue;
        }
        let nl = cast::<S>((i + 1) as f64);
        let nr = cast::<S>((n - i - 1) as f64);
        let right_sum = total_sum - left_sum;
        let sse_l = left_sq - left_sum * left_sum / nl;
        let sse_r = (total_sq - left_sq) - right_sum * right_sum / nr;
        let score = sse_l + sse_r;
        if score < best_score {
            let mut s = (lo + hi) * cast::<S>(0.5);
            // Midpoint rounding can land on `hi`; pin to `lo` so `x <= s`
            // selects exactly the scanned prefix.
            if s >= hi {
                s = lo;
            }
            best_score = score;
            best = Some((s, i + 1, sse_l, sse_r));
        }
    }
    best
}

/// Best split over presorted per-feature index lists. Candidates must be in
/// ascending feature order for the tie rule. Requires a strict SSE
/// improvement over the unsplit node.
fn best_split_sorted<S: Scalar>(
    columns: &[Vec<S>],
    ys: &[S],
    lists: &[Vec<u32>],
    candidates: &[usize],
    total_sum: S,
    total_sq: S,
) -> Option<SplitCandidate<S>> {
    let n = lists[candidates[0]].len();
    let parent_sse = total_sq - total_sum * total_sum / cast::<S>(n as f64);
    let mut best: Option<SplitCandidate<S>> = None;
    let mut best_score = S::infinity();
    for &j in candidates {
        if let Some((threshold, n_left, sse_left, sse_right)) =
            scan_sorted_feature(&columns[j], ys, &lists[j], total_sum, total_sq)
        {
            let score = sse_left + sse_right;
            if score < best_score {
                best_score = score;
                best = Some(SplitCandidate {
                    feature: j,
                    threshold,
                    n_left,
                    n_right: n - n_left,
                    sse_left,
                    sse_right,
                });
            }
        }
    }
    if best_score < parent_sse {
        best
    } else {
        None
    }
}

/// Exhaustive best split over the given rows and candidate features.
///
/// Returns `None` when fewer than 2 rows are given, when all candidate
/// features are constant over the rows, or when no split strictly reduces
/// the summed squared error. Duplicate candidates are tolerated.
pub fn best_split<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    rows: &[usize],
    features: &[usize],
) -> Option<SplitCandidate<S>> {
    if rows.len() < 2 || features.is_empty() {
        return None;
    }
    let ys = matrix.targets();
    let sample: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
    let (total_sum, total_sq) = sample_stats(ys, &sample);
    let mut candidates = features.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    let columns: Vec<Vec<S>> = (0..matrix.n_features())
        .map(|j| matrix.feature_column(j))
        .collect();
    let lists: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut order = sample.clone();
            order.sort_by(|&a, &b| {
                col[a as usize]
                    .partial_cmp(&col[b as usize])
                    .expect("matrix values are finite")
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();
    best_split_sorted(&columns, ys, &lists, &candidates, total_sum, total_sq)
}

/// Recursive grower shared by the tree, forest, and boosting fitters.
pub(super) struct TreeBuilder<'a, S: Scalar> {
    columns: &'a [Vec<S>],
    targets: &'a [S],
    params: &'a TreeParams,
    /// Candidate features per split; equal to the feature count for a
    /// deterministic full scan (no randomness consumed).
    k_features: usize,
    side: Vec<bool>,
    feature_pool: Vec<usize>,
}

impl<'a, S: Scalar> TreeBuilder<'a, S> {
    pub(super) fn new(
        columns: &'a [Vec<S>],
        targets: &'a [S],
        params: &'a TreeParams,
        k_features: usize,
    ) -> Self {
        Self {
            columns,
            targets,
            params,
            k_features,
            side: vec![false; targets.len()],
            feature_pool: (0..columns.len()).collect(),
        }
    }

    /// Grows a tree on `sample` (row indices, duplicates = bootstrap
    /// multiplicity). RNG is consumed only when `k_features < p`, in
    /// pre-order node order.
    pub(super) fn fit(&mut self, sample: &[u32], rng: &mut ChaCha8Rng) -> TreeNode<S> {
        let lists: Vec<Vec<u32>> = self
            .columns
            .iter()
            .map(|col| {
                let mut order = sample.to_vec();
                order.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("matrix values are finite")
                        .then(a.cmp(&b))
                });
                order
            })
            .collect();
        self.grow(lists, 0, rng)
    }

    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: u32, rng: &mut ChaCha8Rng) -> TreeNode<S> {
        let n = lists[0].len();
        let (sum, sq) = sample_stats(self.targets, &lists[0]);
        let nf = cast::<S>(n as f64);
        let c = sum / nf;
        let sse = (sq - sum * sum / nf).max(S::zero());

        if n < self.params.min_samples_split {
            return TreeNode::Leaf { n, c, sse };
        }
        if let Some(limit) = self.params.max_depth {
            if depth >= limit {
                return TreeNode::Leaf { n, c, sse };
            }
        }
        let first_y = self.targets[lists[0][0] as usize];
        if lists[0]
            .iter()
            .all(|&r| self.targets[r as usize] == first_y)
        {
            return TreeNode::Leaf { n, c, sse };
        }

        let p = self.columns.len();
        let candidates: Vec<usize> = if self.k_features >= p {
            (0..p).collect()
        } else {
            for i in 0..self.k_features {
                let j = rng.gen_range(i..p);
                self.feature_pool.swap(i, j);
            }
            let mut chosen = self.feature_pool[..self.k_features].to_vec();
            chosen.sort_unstable();
            chosen
        };

        let Some(split) = best_split_sorted(self.columns, self.targets, &lists, &candidates, sum, sq)
        else {
            return TreeNode::Leaf { n, c, sse };
        };
        if split.n_left < self.params.min_samples_leaf
            || split.n_right < self.params.min_samples_leaf
        {
            return TreeNode::Leaf { n, c, sse };
        }

        let col = &self.columns[split.feature];
        for &r in &lists[split.feature] {
            self.side[r as usize] = col[r as usize] <= split.threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in &lists {
            let mut l = Vec::with_capacity(split.n_left);
            let mut r_list = Vec::with_capacity(split.n_right);
            for &r in list {
                if self.side[r as usize] {
                    l.push(r);
                } else {
                    r_list.push(r);
                }
            }
            left_lists.push(l);
            right_lists.push(r_list);
        }
        drop(lists);

        let left = self.grow(left_lists, depth + 1, rng);
        let right = self.grow(right_lists, depth + 1, rng);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            n,
            c,
            sse,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn subtree_leaf_risk<S: Scalar>(node: &TreeNode<S>) -> (f64, usize) {
    match node {
        TreeNode::Leaf { sse, .. } => (to_f64(*sse), 1),
        TreeNode::Internal { left, right, .. } => {
            let (ls, ln) = subtree_leaf_risk(left);
            let (rs, rn) = subtree_leaf_risk(right);
            (ls + rs, ln + rn)
        }
    }
}

fn find_weakest<S: Scalar>(
    node: &TreeNode<S>,
    n_train: f64,
    id: &mut usize,
    weakest: &mut Option<(f64, usize)>,
) {
    let my_id = *id;
    *id += 1;
    if let TreeNode::Internal {
        sse, left, right, ..
    } = node
    {
        let (leaf_sse, leaves) = subtree_leaf_risk(node);
        let g = (to_f64(*sse) - leaf_sse) / n_train / (leaves as f64 - 1.0);
        if weakest.map_or(true, |(best, _)| g < best) {
            *weakest = Some((g, my_id));
        }
        find_weakest(left, n_train, id, weakest);
        find_weakest(right, n_train, id, weakest);
    }
}

fn collapse<S: Scalar>(node: &mut TreeNode<S>, target: usize, id: &mut usize) -> bool {
    let my_id = *id;
    *id += 1;
    if !matches!(node, TreeNode::Internal { .. }) {
        return false;
    }
    if my_id == target {
        let (n, c, sse) = (node.n(), node.c(), node.sse());
        *node = TreeNode::Leaf { n, c, sse };
        return true;
    }
    if let TreeNode::Internal { left, right, .. } = node {
        if collapse(left, target, id) {
            return true;
        }
        return collapse(right, target, id);
    }
    false
}

/// Minimal cost-complexity (weakest-link) pruning.
///
/// Risk is on the per-sample scale `R(t) = sse / n_train`, so `alpha` is
/// comparable across dataset sizes. Repeatedly collapses the internal node
/// with the smallest `g = (R(t) - R(subtree)) / (subtree leaves - 1)` while
/// `g <= alpha`; ties collapse the earliest node in pre-order first.
pub(super) fn prune_ccp<S: Scalar>(
    mut root: TreeNode<S>,
    alpha: f64,
    n_train: usize,
) -> TreeNode<S> {
    if alpha <= 0.0 {
        return root;
    }
    let n_train = n_train as f64;
    loop {
        let mut weakest = None;
        let mut id = 0usize;
        find_weakest(&root, n_train, &mut id, &mut weakest);
        match weakest {
            Some((g, node_id)) if g <= alpha => {
                let mut id = 0usize;
                collapse(&mut root, node_id, &mut id);
            }
            _ => return root,
        }
    }
}

/// Fits a single CART regression tree on all rows of `matrix`.
pub fn fit_regression_tree<S: Scalar>(
    matrix: &FeatureMatrix<S>,
    params: &TreeParams,
) -> Result<EnsembleModel<S>, ModelError> {
    params.validate()?;
    if matrix.n_rows() == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    if matrix.n_features() == 0 {
        return Err(ModelError::InvalidParams(
            "matrix has no feature columns".into(),
        ));
    }
    let columns: Vec<Vec<S>> = (0..matrix.n_features())
        .map(|j| matrix.feature_column(j))
        .collect();
    let sample: Vec<u32> = (0..matrix.n_rows() as u32).collect();
    // Full feature scan: the RNG is never consumed.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut builder = TreeBuilder::new(&columns, matrix.targets(), params, matrix.n_features());
    let mut root = builder.fit(&sample, &mut rng);
    if params.ccp_alpha > 0.0 {
        root = prune_ccp(root, params.ccp_alpha, sample.len());
    }
    Ok(EnsembleModel {
        kind: ModelKind::Tree,
        feature_names: matrix.feature_names().to_vec(),
        params: ModelParams::Tree(params.clone()),
        seed: None,
        base_prediction: S::zero(),
        learning_rate: 1.0,
        trees: vec![root],
        linear: None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::matrix_from;
    use super::*;
    use approx::assert_relative_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn depth_params(max_depth: Option<u32>) -> TreeParams {
        TreeParams {
            max_depth,
            ..TreeParams::default()
        }
    }

    #[test]
    fn four_point_stump_recovers_the_planted_split() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 0.0, 10.0, 10.0]);
        let split = best_split(&m, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(split.feature, 0);
        assert_relative_eq!(split.threshold, 2.5);
        assert_relative_eq!(split.sse_left + split.sse_right, 0.0);

        let model = fit_regression_tree(&m, &depth_params(Some(1))).unwrap();
        assert_relative_eq!(model.predict_row(&[1.5]).unwrap(), 0.0);
        assert_relative_eq!(model.predict_row(&[3.7]).unwrap(), 10.0);
        assert_eq!(model.trees[0].n_leaves(), 2);
    }

    #[test]
    fn max_depth_zero_gives_global_mean_leaf() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 0.0, 10.0, 10.0]);
        let model = fit_regression_tree(&m, &depth_params(Some(0))).unwrap();
        assert_eq!(model.trees[0].n_leaves(), 1);
        assert_relative_eq!(model.predict_row(&[100.0]).unwrap(), 5.0);
    }

    #[test]
    fn equal_sse_ties_choose_the_smallest_threshold() {
        // Splitting {0|10,0} and {0,10|0} both leave SSE 50.
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0]], &[0.0, 10.0, 0.0]);
        let split = best_split(&m, &[0, 1, 2], &[0]).unwrap();
        assert_relative_eq!(split.threshold, 1.5);
        assert_relative_eq!(split.sse_left + split.sse_right, 50.0);
    }

    #[test]
    fn equal_sse_ties_choose_the_lowest_feature() {
        // Feature 1 mirrors feature 0, so every split score is duplicated.
        let m = matrix_from(
            &[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0], &[4.0, 4.0]],
            &[0.0, 0.0, 10.0, 10.0],
        );
        let split = best_split(&m, &[0, 1, 2, 3], &[1, 0]).unwrap();
        assert_eq!(split.feature, 0);
    }

    #[test]
    fn constant_targets_yield_no_split_and_a_single_leaf() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0]], &[4.0, 4.0, 4.0]);
        assert!(best_split(&m, &[0, 1, 2], &[0]).is_none());
        let model = fit_regression_tree(&m, &TreeParams::default()).unwrap();
        assert_eq!(model.trees[0].n_leaves(), 1);
    }

    #[test]
    fn constant_features_yield_no_split() {
        let m = matrix_from(&[&[7.0], &[7.0], &[7.0]], &[1.0, 2.0, 3.0]);
        assert!(best_split(&m, &[0, 1, 2], &[0]).is_none());
    }

    #[test]
    fn boundary_value_routes_left() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 0.0, 10.0, 10.0]);
        let model = fit_regression_tree(&m, &depth_params(Some(1))).unwrap();
        assert_relative_eq!(model.predict_row(&[2.5]).unwrap(), 0.0);
        assert_relative_eq!(model.predict_row(&[2.5000001]).unwrap(), 10.0);
    }

    #[test]
    fn min_samples_leaf_vetoes_the_best_split_rather_than_retrying() {
        // The unconstrained best split isolates the single 100; with
        // min_samples_leaf = 2 the node becomes a leaf even though a worse
        // admissible split exists.
        let m = matrix_from(&[&[0.0], &[1.0], &[2.0], &[3.0]], &[0.0, 0.0, 0.0, 100.0]);
        let params = TreeParams {
            min_samples_leaf: 2,
            ..TreeParams::default()
        };
        let model = fit_regression_tree(&m, &params).unwrap();
        assert_eq!(model.trees[0].n_leaves(), 1);
        assert_relative_eq!(model.predict_row(&[0.0]).unwrap(), 25.0);
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 0.0, 10.0, 10.0]);
        let params = TreeParams {
            min_samples_split: 5,
            ..TreeParams::default()
        };
        let model = fit_regression_tree(&m, &params).unwrap();
        assert_eq!(model.trees[0].n_leaves(), 1);
    }

    #[test]
    fn leaves_predict_routed_target_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0].signum() * 3.0 + r[1] + rng.gen_range(-0.5..0.5))
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix_from(&refs, &y);
        let model = fit_regression_tree(&m, &depth_params(Some(4))).unwrap();

        fn leaf_ptr<'a>(node: &'a TreeNode<f64>, x: &[f64]) -> *const TreeNode<f64> {
            match node {
                TreeNode::Leaf { .. } => node as *const _,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if x[*feature] <= *threshold {
                        leaf_ptr(left, x)
                    } else {
                        leaf_ptr(right, x)
                    }
                }
            }
        }

        let mut routed: HashMap<usize, Vec<f64>> = HashMap::new();
        for (r, yi) in rows.iter().zip(&y) {
            routed
                .entry(leaf_ptr(&model.trees[0], r) as usize)
                .or_default()
                .push(*yi);
        }
        let mut checked = 0;
        model.trees[0].visit(&mut |node| {
            if let TreeNode::Leaf { n, c, .. } = node {
                let ys = &routed[&(node as *const _ as usize)];
                assert_eq!(*n, ys.len());
                let mean = ys.iter().sum::<f64>() / ys.len() as f64;
                assert_relative_eq!(*c, mean, epsilon = 1e-9);
                checked += 1;
            }
        });
        assert!(checked >= 4);
    }

    #[test]
    fn row_order_does_not_change_the_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| (4.0 * r[0]).floor() + r[1]).collect();

        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix_from(&refs, &y);
        let tree_a = fit_regression_tree(&m, &depth_params(Some(3))).unwrap();

        let mut perm: Vec<usize> = (0..rows.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled_rows: Vec<&[f64]> = perm.iter().map(|&i| rows[i].as_slice()).collect();
        let shuffled_y: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let m2 = matrix_from(&shuffled_rows, &shuffled_y);
        let tree_b = fit_regression_tree(&m2, &depth_params(Some(3))).unwrap();

        assert_eq!(tree_a.trees[0], tree_b.trees[0]);
    }

    #[test]
    fn ccp_pruning_collapses_weak_splits_first() {
        // Depth-2 tree: child splits each reduce SSE by 0.5 over 4 samples
        // (g = 0.125); the root split is far stronger.
        let m = matrix_from(
            &[&[1.0], &[2.0], &[3.0], &[4.0]],
            &[0.0, 1.0, 10.0, 11.0],
        );
        let full = fit_regression_tree(&m, &TreeParams::default()).unwrap();
        assert_eq!(full.trees[0].n_leaves(), 4);

        let light = TreeParams {
            ccp_alpha: 0.2,
            ..TreeParams::default()
        };
        let pruned = fit_regression_tree(&m, &light).unwrap();
        assert_eq!(pruned.trees[0].n_leaves(), 2);
        assert_relative_eq!(pruned.predict_row(&[1.0]).unwrap(), 0.5);
        assert_relative_eq!(pruned.predict_row(&[4.0]).unwrap(), 10.5);

        let heavy = TreeParams {
            ccp_alpha: 30.0,
            ..TreeParams::default()
        };
        let stumpless = fit_regression_tree(&m, &heavy).unwrap();
        assert_eq!(stumpless.trees[0].n_leaves(), 1);
        assert_relative_eq!(stumpless.predict_row(&[1.0]).unwrap(), 5.5);
    }

    #[test]
    fn ccp_alpha_zero_prunes_nothing() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 1.0, 10.0, 11.0]);
        let a = fit_regression_tree(&m, &TreeParams::default()).unwrap();
        let b = fit_regression_tree(
            &m,
            &TreeParams {
                ccp_alpha: 0.0,
                ..TreeParams::default()
            },
        )
        .unwrap();
        assert_eq!(a.trees[0], b.trees[0]);
    }

    #[test]
    fn serialized_nodes_use_the_compact_field_names() {
        let m = matrix_from(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0.0, 0.0, 10.0, 10.0]);
        let model = fit_regression_tree(&m, &depth_params(Some(1))).unwrap();
        let json = serde_json::to_value(&model.trees[0]).unwrap();
        assert_eq!(json["j"], 0);
        assert_eq!(json["s"], 2.5);
        assert!(json["left"].is_object());
        assert!(json["right"].is_object());
        assert_eq!(json["n"], 4);
        let left = &json["left"];
        assert_eq!(left["c"], 0.0);
        assert_eq!(left["n"], 2);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let m = matrix_from(&[&[1.0]], &[1.0]);
        let empty = m.subset(&[]);
        assert!(matches!(
            fit_regression_tree(&empty, &TreeParams::default()),
            Err(ModelError::EmptyMatrix)
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let m = matrix_from(&[&[1.0], &[2.0]], &[0.0, 1.0]);
        for params in [
            TreeParams {
                min_samples_leaf: 0,
                ..TreeParams::default()
            },
            TreeParams {
                min_samples_split: 1,
                ..TreeParams::default()
            },
            TreeParams {
                ccp_alpha: -0.5,
                ..TreeParams::default()
            },
        ] {
            assert!(matches!(
                fit_regression_tree(&m, &params),
                Err(ModelError::InvalidParams(_))
            ));
        }
    }
}
