//! Bagged random forest over the CART trees: seeded bootstrap resamples,
//! per-node random feature subsets, majority-vote prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{build_node, FeaturePick, TreeNode, TreeParams};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features sampled per node; ceil(sqrt(36)) = 6 by default.
    pub feature_subsample: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            feature_subsample: 6,
            bootstrap: true,
            seed: 0,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub params: ForestParams,
    pub degenerate: bool,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> u8 {
        let votes: usize = self.trees.iter().map(|t| t.predict(row) as usize).sum();
        u8::from(2 * votes > self.trees.len())
    }
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Trains the forest. Each tree draws a seeded bootstrap resample and a
/// fresh per-node feature subset; tree t depends only on (seed, t), so the
/// model is identical across runs and thread schedules.
pub fn train_forest(x: &[Vec<f64>], y: &[u8], params: &ForestParams) -> ForestModel {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let n_features = x.first().map_or(0, |r| r.len());
    let degenerate = !y.contains(&0) || !y.contains(&1);
    let trees = par::map_range(params.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(params.seed, t));
        let idx: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut picker = if params.feature_subsample >= n_features {
            FeaturePick::All(n_features)
        } else {
            FeaturePick::Sampled { rng: &mut rng, k: params.feature_subsample, n_features }
        };
        build_node(x, y, &idx, 0, &params.tree, &mut picker)
    });
    ForestModel { trees, params: *params, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tree::train_tree;

    fn toy() -> (Vec<Vec<f64>>, Vec<u8>) {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let base = if i < 30 { 0.0 } else { 4.0 };
                (0..6).map(|_| base + rng.gen_range(-1.0..1.0)).collect()
            })
            .collect();
        let y: Vec<u8> = (0..60).map(|i| u8::from(i >= 30)).collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let (x, y) = toy();
        let params = ForestParams {
            n_trees: 1,
            feature_subsample: 6,
            bootstrap: false,
            seed: 9,
            tree: TreeParams::default(),
        };
        let forest = train_forest(&x, &y, &params);
        let tree = train_tree(&x, &y, &TreeParams::default());
        for row in &x {
            assert_eq!(forest.predict(row), tree.predict(row));
        }
        assert_eq!(forest.trees[0], tree.root);
    }

    #[test]
    fn same_seed_same_model() {
        let (x, y) = toy();
        let params = ForestParams { n_trees: 16, seed: 77, ..Default::default() };
        let a = train_forest(&x, &y, &params);
        let b = train_forest(&x, &y, &params);
        assert_eq!(a, b);
        let c = train_forest(&x, &y, &ForestParams { seed: 78, ..params });
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn separable_data_perfect_training_accuracy() {
        let (x, y) = toy();
        let params = ForestParams { n_trees: 25, seed: 5, ..Default::default() };
        let forest = train_forest(&x, &y, &params);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(row, want)| forest.predict(row) == **want)
            .count();
        assert_eq!(correct, x.len());
    }
}
