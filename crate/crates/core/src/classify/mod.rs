//! Tree-based classifiers (CART tree, bagged forest, gradient boosting)
//! with a one-vs-rest multi-label wrapper, evaluation reports, and
//! schema-versioned model persistence.

pub mod boosted;
pub mod forest;
pub mod metrics;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use boosted::{train_boosted, BoostedModel, BoostedParams};
pub use forest::{train_forest, ForestModel, ForestParams};
pub use metrics::{evaluate, EvalReport};
pub use tree::{train_tree, TreeModel, TreeParams};

use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLearner {
    Tree,
    Forest,
    Boosted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelParams {
    pub base: BaseLearner,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub boosted: BoostedParams,
}

impl MultiLabelParams {
    pub fn with_base(base: BaseLearner) -> MultiLabelParams {
        MultiLabelParams {
            base,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            boosted: BoostedParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinaryModel {
    Tree(TreeModel),
    Forest(ForestModel),
    Boosted(BoostedModel),
    /// Trained with zero positives for its class; always predicts negative.
    ConstantNegative,
}

impl BinaryModel {
    pub fn predict(&self, row: &[f64]) -> bool {
        match self {
            BinaryModel::Tree(m) => m.predict(row) == 1,
            BinaryModel::Forest(m) => m.predict(row) == 1,
            BinaryModel::Boosted(m) => m.predict_proba(row) > 0.5,
            BinaryModel::ConstantNegative => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub models: Vec<BinaryModel>,
    /// Classes that had no positive training rows.
    pub empty_classes: Vec<usize>,
}

impl MultiLabelModel {
    pub fn n_classes(&self) -> usize {
        self.models.len()
    }

    /// Union of the per-class positive decisions.
    pub fn predict(&self, row: &[f64]) -> u32 {
        self.models
            .iter()
            .enumerate()
            .filter(|(_, m)| m.predict(row))
            .fold(0u32, |mask, (c, _)| mask | (1 << c))
    }
}

/// One-vs-rest training: one independent binary model per class. Forest
/// seeds are diversified per class so the ensembles are not clones.
pub fn train_multilabel(
    x: &[Vec<f64>],
    masks: &[u32],
    n_classes: usize,
    params: &MultiLabelParams,
) -> MultiLabelModel {
    assert_eq!(x.len(), masks.len());
    let models = par::map_range(n_classes, |c| {
        let y: Vec<u8> = masks.iter().map(|m| ((m >> c) & 1) as u8).collect();
        if !y.contains(&1) {
            return BinaryModel::ConstantNegative;
        }
        match params.base {
            BaseLearner::Tree => BinaryModel::Tree(train_tree(x, &y, &params.tree)),
            BaseLearner::Forest => {
                let forest_params = ForestParams {
                    seed: params.forest.seed.wrapping_add(c as u64),
                    ..params.forest
                };
                BinaryModel::Forest(train_forest(x, &y, &forest_params))
            }
            BaseLearner::Boosted => BinaryModel::Boosted(train_boosted(x, &y, &params.boosted)),
        }
    });
    let empty_classes = models
        .iter()
        .enumerate()
        .filter(|(_, m)| matches!(m, BinaryModel::ConstantNegative))
        .map(|(c, _)| c)
        .collect();
    MultiLabelModel { models, empty_classes }
}

const MODEL_SCHEMA: &str = "rtheta-model v1";

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    model: MultiLabelModel,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model schema mismatch: {0}")]
    SchemaMismatch(String),
}

pub fn save_model(model: &MultiLabelModel, path: &Path) -> Result<(), ModelIoError> {
    let file = ModelFile { schema: MODEL_SCHEMA.to_string(), model: model.clone() };
    std::fs::write(path, serde_json::to_string(&file).expect("model serializes"))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MultiLabelModel, ModelIoError> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| ModelIoError::SchemaMismatch(e.to_string()))?;
    if file.schema != MODEL_SCHEMA {
        return Err(ModelIoError::SchemaMismatch(file.schema));
    }
    Ok(file.model)
}
