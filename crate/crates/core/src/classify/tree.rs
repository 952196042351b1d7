//! Greedy CART decision tree for binary targets, Gini criterion.
//!
//! Split quality is compared in exact integer arithmetic (cross-multiplied
//! count fractions), so the deterministic tie-break — lowest feature index,
//! then lowest threshold — is independent of floating-point summation order
//! and an exhaustive-enumeration oracle reproduces the tree node for node.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 16, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Training samples per class at this leaf.
        counts: [u64; 2],
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> u8 {
        match self {
            TreeNode::Leaf { counts } => u8::from(counts[1] > counts[0]),
            TreeNode::Internal { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub params: TreeParams,
    /// Set when training saw a single class; the tree is a constant leaf.
    pub degenerate: bool,
}

impl TreeModel {
    pub fn predict(&self, row: &[f64]) -> u8 {
        self.root.predict(row)
    }
}

/// Child-purity score of a split as an exact fraction: maximizing
/// (l0^2+l1^2)/nl + (r0^2+r1^2)/nr minimizes weighted Gini impurity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    pub fn of(left: [u64; 2], right: [u64; 2]) -> SplitScore {
        let nl = (left[0] + left[1]) as u128;
        let nr = (right[0] + right[1]) as u128;
        let a = (left[0] as u128).pow(2) + (left[1] as u128).pow(2);
        let b = (right[0] as u128).pow(2) + (right[1] as u128).pow(2);
        SplitScore { num: a * nr + b * nl, den: nl * nr }
    }

    pub fn better_than(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub score: SplitScore,
}

/// Best (feature, threshold) over the given candidate features, thresholds
/// at midpoints of consecutive distinct sorted values. First candidate in
/// (feature asc, threshold asc) order wins exact score ties.
pub fn best_gini_split(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let mut best: Option<SplitChoice> = None;
    for &f in features {
        let mut col: Vec<(f64, u8)> = idx.iter().map(|&i| (x[i][f], y[i])).collect();
        col.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total = class_counts(col.iter().map(|&(_, yi)| yi));
        let mut left = [0u64; 2];
        for i in 1..col.len() {
            left[col[i - 1].1 as usize] += 1;
            if col[i].0 == col[i - 1].0 {
                continue;
            }
            if i < min_samples_leaf || col.len() - i < min_samples_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = SplitScore::of(left, right);
            let threshold = (col[i - 1].0 + col[i].0) / 2.0;
            let replace = match &best {
                None => true,
                Some(b) => score.better_than(&b.score),
            };
            if replace {
                best = Some(SplitChoice { feature: f, threshold, score });
            }
        }
    }
    best
}

fn class_counts(ys: impl Iterator<Item = u8>) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for y in ys {
        counts[y as usize] += 1;
    }
    counts
}

/// Per-node feature selector; `None` means all features at every node.
pub(crate) enum FeaturePick<'a> {
    All(usize),
    Sampled { rng: &'a mut rand_chacha::ChaCha8Rng, k: usize, n_features: usize },
}

impl FeaturePick<'_> {
    fn pick(&mut self) -> Vec<usize> {
        match self {
            FeaturePick::All(n) => (0..*n).collect(),
            FeaturePick::Sampled { rng, k, n_features } => {
                // partial Fisher-Yates, then sorted so the tie-break stays
                // "lowest feature index" within the sample
                let mut pool: Vec<usize> = (0..*n_features).collect();
                let k = (*k).min(*n_features);
                for i in 0..k {
                    let j = rng.gen_range(i..pool.len());
                    pool.swap(i, j);
                }
                let mut picked = pool[..k].to_vec();
                picked.sort_unstable();
                picked
            }
        }
    }
}

pub(crate) fn build_node(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    depth: usize,
    params: &TreeParams,
    picker: &mut FeaturePick<'_>,
) -> TreeNode {
    let counts = class_counts(idx.iter().map(|&i| y[i]));
    let pure = counts[0] == 0 || counts[1] == 0;
    if pure || depth >= params.max_depth || idx.len() < 2 * params.min_samples_leaf.max(1) {
        return TreeNode::Leaf { counts };
    }
    let features = picker.pick();
    let Some(choice) = best_gini_split(x, y, idx, &features, params.min_samples_leaf) else {
        return TreeNode::Leaf { counts };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[i][choice.feature] <= choice.threshold);
    TreeNode::Internal {
        feature: choice.feature,
        threshold: choice.threshold,
        left: Box::new(build_node(x, y, &left_idx, depth + 1, params, picker)),
        right: Box::new(build_node(x, y, &right_idx, depth + 1, params, picker)),
    }
}

/// Trains a CART tree. A single-class target yields a flagged constant
/// leaf rather than an error.
pub fn train_tree(x: &[Vec<f64>], y: &[u8], params: &TreeParams) -> TreeModel {
    assert_eq!(x.len(), y.len());
    let idx: Vec<usize> = (0..x.len()).collect();
    let n_features = x.first().map_or(0, |r| r.len());
    let counts = class_counts(y.iter().copied());
    let degenerate = counts[0] == 0 || counts[1] == 0;
    let mut picker = FeaturePick::All(n_features);
    let root = build_node(x, y, &idx, 0, params, &mut picker);
    TreeModel { root, params: *params, degenerate }
}
