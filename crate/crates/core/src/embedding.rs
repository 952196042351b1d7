//! Conversion of a program's profile records into the fixed 36-long
//! embedding vector: for each of the nine metrics in canonical order, the
//! four quadruple slots (feature_type, feature_config, intercept, r_val).

use serde::{Deserialize, Serialize};

use crate::fitter::{aggregate_repeats, select_best, Sample};
use crate::harness::{MetricName, ProfileRecord};

pub const SLOT_NAMES: [&str; 4] = ["feature_type", "feature_config", "intercept", "r_val"];
pub const EMBEDDING_LEN: usize = 36;

/// FEATURE_TYPE value written for metrics with too little data to fit
/// (imputation mode only); the other three slots are 0.
pub const MISSING_SENTINEL: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeEmbedding {
    pub program_id: String,
    /// Always exactly 36 values, in [`headers`] order.
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EmbeddingError {
    #[error("no records supplied")]
    EmptyInput,
    #[error("records span multiple programs: {0} and {1}")]
    MixedPrograms(String, String),
    #[error("metric {metric} has only {distinct} distinct usable sizes (3 required)")]
    InsufficientData { metric: MetricName, distinct: usize },
    #[error("expected 36 values, got {0}")]
    BadLength(usize),
}

/// Column names for the 36 slots: `<metric>.<slot>` in canonical order.
pub fn headers() -> Vec<String> {
    let mut out = Vec::with_capacity(EMBEDDING_LEN);
    for metric in MetricName::ALL {
        for slot in SLOT_NAMES {
            out.push(format!("{metric}.{slot}"));
        }
    }
    out
}

/// Fits every metric series of one program and assembles the embedding.
///
/// Null metric readings are skipped, repeats at the same size are
/// median-aggregated. A metric with fewer than 3 distinct usable sizes
/// either receives the sentinel quadruple (-1, 0, 0, 0) when `impute` is
/// on, or fails the whole embedding in strict mode.
pub fn build_embedding(
    records: &[ProfileRecord],
    impute: bool,
) -> Result<CodeEmbedding, EmbeddingError> {
    if records.is_empty() {
        return Err(EmbeddingError::EmptyInput);
    }
    let program_id = records[0].program_id.clone();
    if let Some(other) = records.iter().find(|r| r.program_id != program_id) {
        return Err(EmbeddingError::MixedPrograms(
            program_id,
            other.program_id.clone(),
        ));
    }

    let mut values = Vec::with_capacity(EMBEDDING_LEN);
    for metric in MetricName::ALL {
        let samples: Vec<Sample> = records
            .iter()
            .filter_map(|r| {
                r.metrics
                    .get(&metric)
                    .copied()
                    .flatten()
                    .map(|v| Sample::new(r.size_n, v))
            })
            .collect();
        let series = aggregate_repeats(&samples);
        if series.len() < 3 {
            if impute {
                values.extend_from_slice(&[MISSING_SENTINEL, 0.0, 0.0, 0.0]);
                continue;
            }
            return Err(EmbeddingError::InsufficientData {
                metric,
                distinct: series.len(),
            });
        }
        let (quad, _) = select_best(&series).expect("series has >= 3 distinct sizes");
        values.push(quad.feature_type.ordinal() as f64);
        values.push(quad.feature_config);
        values.push(quad.intercept);
        values.push(quad.r_val);
    }
    Ok(CodeEmbedding { program_id, values })
}

/// Flattens an embedding into (headers, row values).
pub fn embedding_to_row(e: &CodeEmbedding) -> (Vec<String>, Vec<f64>) {
    (headers(), e.values.clone())
}

/// Rebuilds an embedding from a flat row, checking the length.
pub fn row_to_embedding(program_id: &str, row: &[f64]) -> Result<CodeEmbedding, EmbeddingError> {
    if row.len() != EMBEDDING_LEN {
        return Err(EmbeddingError::BadLength(row.len()));
    }
    Ok(CodeEmbedding {
        program_id: program_id.to_string(),
        values: row.to_vec(),
    })
}
