//! Stagewise additive logistic boosting with second-order split gains:
//! round t fits a depth-limited regression tree to gradients g = p - y and
//! hessians h = p(1-p); split gain is
//! (G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)) / 2 and leaf weight
//! -G/(H+l) with l2 penalty l.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl Default for BoostedParams {
    fn default() -> Self {
        BoostedParams { rounds: 200, max_depth: 6, learning_rate: 0.1, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf {
        weight: f64,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
}

impl RegNode {
    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            RegNode::Leaf { weight } => *weight,
            RegNode::Internal { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.score(row)
                } else {
                    right.score(row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub trees: Vec<RegNode>,
    pub params: BoostedParams,
    pub degenerate: bool,
}

impl BoostedModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.params.learning_rate * self.trees.iter().map(|t| t.score(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.predict_proba(row) > 0.5)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn half_objective(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Best split of `idx` by second-order gain; `None` when no candidate has
/// strictly positive gain. First candidate in (feature asc, threshold asc)
/// order wins ties.
pub fn best_gain_split(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    idx: &[usize],
    lambda: f64,
) -> Option<GainChoice> {
    let n_features = x.first().map_or(0, |r| r.len());
    let g_total: f64 = idx.iter().map(|&i| grad[i]).sum();
    let h_total: f64 = idx.iter().map(|&i| hess[i]).sum();
    let parent = half_objective(g_total, h_total, lambda);
    let mut best: Option<GainChoice> = None;
    for f in 0..n_features {
        let mut col: Vec<(f64, f64, f64)> =
            idx.iter().map(|&i| (x[i][f], grad[i], hess[i])).collect();
        col.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut gl = 0.0;
        let mut hl = 0.0;
        for i in 1..col.len() {
            gl += col[i - 1].1;
            hl += col[i - 1].2;
            if col[i].0 == col[i - 1].0 {
                continue;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            let gain = 0.5
                * (half_objective(gl, hl, lambda) + half_objective(gr, hr, lambda) - parent);
            if gain > 0.0 && best.map_or(true, |b| gain > b.gain) {
                best = Some(GainChoice {
                    feature: f,
                    threshold: (col[i - 1].0 + col[i].0) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn build_reg_node(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    idx: &[usize],
    depth: usize,
    params: &BoostedParams,
) -> RegNode {
    let g: f64 = idx.iter().map(|&i| grad[i]).sum();
    let h: f64 = idx.iter().map(|&i| hess[i]).sum();
    if depth < params.max_depth {
        if let Some(choice) = best_gain_split(x, grad, hess, idx, params.lambda) {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x[i][choice.feature] <= choice.threshold);
            return RegNode::Internal {
                feature: choice.feature,
                threshold: choice.threshold,
                left: Box::new(build_reg_node(x, grad, hess, &left_idx, depth + 1, params)),
                right: Box::new(build_reg_node(x, grad, hess, &right_idx, depth + 1, params)),
            };
        }
    }
    RegNode::Leaf { weight: -g / (h + params.lambda) }
}

/// Trains the boosted ensemble from a zero initial raw score (p = 0.5).
pub fn train_boosted(x: &[Vec<f64>], y: &[u8], params: &BoostedParams) -> BoostedModel {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let degenerate = !y.contains(&0) || !y.contains(&1);
    let mut raw = vec![0.0f64; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let idx: Vec<usize> = (0..n).collect();
    for _ in 0..params.rounds {
        let mut grad = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad.push(p - y[i] as f64);
            hess.push(p * (1.0 - p));
        }
        let tree = build_reg_node(x, &grad, &hess, &idx, 0, params);
        for i in 0..n {
            raw[i] += params.learning_rate * tree.score(&x[i]);
        }
        trees.push(tree);
    }
    BoostedModel { trees, params: *params, degenerate }
}

/// Mean logistic loss of the model's raw scores on a dataset.
pub fn logistic_loss(model: &BoostedModel, x: &[Vec<f64>], y: &[u8]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z = model.raw_score(row);
            // log(1 + exp(-z*sign)) in a numerically safe form
            let m = if yi == 1 { -z } else { z };
            if m > 0.0 {
                m + (1.0 + (-m).exp()).ln()
            } else {
                (1.0 + m.exp()).ln()
            }
        })
        .sum::<f64>()
        / x.len() as f64
}
