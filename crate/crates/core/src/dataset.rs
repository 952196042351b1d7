//! Labeled embedding datasets: label ingestion, stratified train/test
//! splitting, and schema-versioned text persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{headers, CodeEmbedding, EMBEDDING_LEN};

/// The 11 algorithm classes, order fixed.
pub const LABEL_CATALOG: [&str; 11] = [
    "strings",
    "implementation",
    "greedy",
    "brute force",
    "dp",
    "divide and conquer",
    "graphs",
    "binary search",
    "math",
    "sortings",
    "shortest paths",
];

/// Bitmask over [`LABEL_CATALOG`] (bit i = class i).
pub type LabelMask = u16;

pub fn label_index(name: &str) -> Option<usize> {
    LABEL_CATALOG.iter().position(|l| *l == name)
}

pub fn mask_of(names: &[&str]) -> LabelMask {
    names
        .iter()
        .filter_map(|n| label_index(n))
        .fold(0, |m, i| m | (1 << i))
}

pub fn mask_names(mask: LabelMask) -> Vec<&'static str> {
    LABEL_CATALOG
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, n)| *n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub program_id: String,
    pub problem_id: String,
    pub embedding: CodeEmbedding,
    pub labels: LabelMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Class index to preserve the positive/negative ratio for; `None`
    /// gives a plain seeded shuffle split.
    pub stratify_on: Option<usize>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.66, seed: 0, stratify_on: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("malformed label map file: {0}")]
    MalformedFile(String),
    #[error("need at least 10 rows to split, got {0}")]
    InsufficientRows(usize),
    #[error("train_fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("stratum for class {class} has only {rows} rows")]
    DegenerateStratum { class: usize, rows: usize },
    #[error("dataset schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Result of reading a problem -> labels map; labels outside the catalog
/// are dropped and counted, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelIngest {
    pub map: BTreeMap<String, LabelMask>,
    pub dropped: usize,
}

/// Reads a JSON document `{ "<problem_id>": ["label", ...], ... }`.
pub fn ingest_labels(path: &Path) -> Result<LabelIngest, DatasetError> {
    let text = fs::read_to_string(path)?;
    ingest_labels_str(&text)
}

pub fn ingest_labels_str(text: &str) -> Result<LabelIngest, DatasetError> {
    if text.trim().is_empty() {
        return Ok(LabelIngest { map: BTreeMap::new(), dropped: 0 });
    }
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(text).map_err(|e| DatasetError::MalformedFile(e.to_string()))?;
    let mut map = BTreeMap::new();
    let mut dropped = 0;
    for (problem, labels) in raw {
        let mut mask: LabelMask = 0;
        for label in &labels {
            match label_index(label) {
                Some(i) => mask |= 1 << i,
                None => dropped += 1,
            }
        }
        map.insert(problem, mask);
    }
    Ok(LabelIngest { map, dropped })
}

/// Deterministic seeded split into (train, test) index sets.
///
/// With `stratify_on`, positives and negatives of that class are shuffled
/// and cut separately so each side keeps the full set's ratio within one
/// row. The same spec always produces the identical partition.
pub fn split(rows: &[LabeledRow], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if rows.len() < 10 {
        return Err(DatasetError::InsufficientRows(rows.len()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(spec.train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let strata: Vec<Vec<usize>> = match spec.stratify_on {
        None => vec![(0..rows.len()).collect()],
        Some(class) => {
            let bit = 1u16 << class;
            let pos: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].labels & bit != 0).collect();
            let neg: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].labels & bit == 0).collect();
            for stratum in [&pos, &neg] {
                if stratum.len() < 2 {
                    return Err(DatasetError::DegenerateStratum {
                        class,
                        rows: stratum.len(),
                    });
                }
            }
            vec![pos, neg]
        }
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        let k = (spec.train_fraction * stratum.len() as f64).round() as usize;
        let k = k.min(stratum.len());
        train.extend_from_slice(&stratum[..k]);
        test.extend_from_slice(&stratum[k..]);
    }
    Ok((train, test))
}

const DATASET_SCHEMA: &str = "rtheta-dataset v1";

/// Writes the dataset as UTF-8 text: a schema line, a header row, then one
/// comma-separated row per program. f64 values round-trip exactly.
pub fn save_dataset(rows: &[LabeledRow], path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str(DATASET_SCHEMA);
    out.push('\n');
    out.push_str("program_id,problem_id,");
    out.push_str(&headers().join(","));
    out.push_str(",labels\n");
    for row in rows {
        out.push_str(&row.program_id);
        out.push(',');
        out.push_str(&row.problem_id);
        for v in &row.embedding.values {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push_str(&format!(",{}\n", row.labels));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledRow>, DatasetError> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut lines = text.lines();
    let schema = lines.next().unwrap_or("");
    if schema != DATASET_SCHEMA {
        return Err(DatasetError::SchemaMismatch(format!(
            "expected {DATASET_SCHEMA:?}, found {schema:?}"
        )));
    }
    let expected_header = format!("program_id,problem_id,{},labels", headers().join(","));
    let header = lines.next().unwrap_or("");
    if header != expected_header {
        return Err(DatasetError::SchemaMismatch("header row mismatch".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != EMBEDDING_LEN + 3 {
            return Err(DatasetError::SchemaMismatch(format!(
                "expected {} fields, got {}",
                EMBEDDING_LEN + 3,
                fields.len()
            )));
        }
        let values: Result<Vec<f64>, _> =
            fields[2..2 + EMBEDDING_LEN].iter().map(|f| f.parse::<f64>()).collect();
        let values = values
            .map_err(|e| DatasetError::SchemaMismatch(format!("bad value: {e}")))?;
        let labels: LabelMask = fields[EMBEDDING_LEN + 2]
            .parse()
            .map_err(|e| DatasetError::SchemaMismatch(format!("bad label mask: {e}")))?;
        rows.push(LabeledRow {
            program_id: fields[0].to_string(),
            problem_id: fields[1].to_string(),
            embedding: CodeEmbedding {
                program_id: fields[0].to_string(),
                values,
            },
            labels,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(program: &str, problem: &str, labels: LabelMask) -> LabeledRow {
        LabeledRow {
            program_id: program.into(),
            problem_id: problem.into(),
            embedding: CodeEmbedding {
                program_id: program.into(),
                values: (0..36).map(|i| i as f64 * 0.5).collect(),
            },
            labels,
        }
    }

    #[test]
    fn catalog_is_eleven_fixed_names() {
        assert_eq!(LABEL_CATALOG.len(), 11);
        assert_eq!(label_index("strings"), Some(0));
        assert_eq!(label_index("shortest paths"), Some(10));
        assert_eq!(label_index("geometry"), None);
    }

    #[test]
    fn ingest_maps_and_drops_unknowns() {
        let got = ingest_labels_str(r#"{"123A": ["math", "greedy"]}"#).unwrap();
        assert_eq!(got.map["123A"], mask_of(&["math", "greedy"]));
        assert_eq!(got.dropped, 0);

        let got = ingest_labels_str(r#"{"9B": ["geometry", "math"]}"#).unwrap();
        assert_eq!(got.map["9B"], mask_of(&["math"]));
        assert_eq!(got.dropped, 1);

        let got = ingest_labels_str("").unwrap();
        assert!(got.map.is_empty());

        assert!(matches!(
            ingest_labels_str("{not json"),
            Err(DatasetError::MalformedFile(_))
        ));
    }

    #[test]
    fn stratified_split_keeps_ratio() {
        let math_bit = label_index("math").unwrap();
        let rows: Vec<LabeledRow> = (0..100)
            .map(|i| {
                let labels = if i < 20 { 1 << math_bit } else { 0 };
                row(&format!("p{i}"), &format!("q{i}"), labels)
            })
            .collect();
        let spec = SplitSpec { train_fraction: 0.66, seed: 7, stratify_on: Some(math_bit) };
        let (train, test) = split(&rows, &spec).unwrap();
        assert_eq!(train.len() + test.len(), 100);
        assert_eq!(train.len(), 66);
        let pos = train.iter().filter(|&&i| rows[i].labels != 0).count();
        assert!(pos == 13 || pos == 14, "train positives {pos}");
    }

    #[test]
    fn split_is_deterministic() {
        let rows: Vec<LabeledRow> =
            (0..30).map(|i| row(&format!("p{i}"), "q", 0)).collect();
        let spec = SplitSpec { train_fraction: 0.66, seed: 42, stratify_on: None };
        assert_eq!(split(&rows, &spec).unwrap(), split(&rows, &spec).unwrap());
        let other = SplitSpec { seed: 43, ..spec };
        assert_ne!(split(&rows, &spec).unwrap(), split(&rows, &other).unwrap());
    }

    #[test]
    fn degenerate_stratum_detected() {
        let math_bit = label_index("math").unwrap();
        let mut rows: Vec<LabeledRow> =
            (0..12).map(|i| row(&format!("p{i}"), "q", 0)).collect();
        rows[0].labels = 1 << math_bit;
        let spec = SplitSpec { train_fraction: 0.66, seed: 0, stratify_on: Some(math_bit) };
        assert!(matches!(
            split(&rows, &spec),
            Err(DatasetError::DegenerateStratum { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let rows: Vec<LabeledRow> = (0..5)
            .map(|i| row(&format!("p{i}"), &format!("q{i}"), mask_of(&["dp", "graphs"])))
            .collect();
        save_dataset(&rows, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), rows);
    }

    #[test]
    fn short_row_is_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let rows = vec![row("p0", "q0", 3)];
        save_dataset(&rows, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        // drop the last column of the data row
        let truncated: Vec<String> = text
            .lines()
            .map(|l| {
                if l.starts_with("p0") {
                    l.rsplit_once(',').unwrap().0.to_string()
                } else {
                    l.to_string()
                }
            })
            .collect();
        fs::write(&path, truncated.join("\n")).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(DatasetError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        fs::write(&path, "").unwrap();
        assert_eq!(load_dataset(&path).unwrap(), vec![]);
    }

    proptest! {
        #[test]
        fn split_partitions_exactly(n in 10usize..200, seed in 0u64..1000) {
            let rows: Vec<LabeledRow> =
                (0..n).map(|i| row(&format!("p{i}"), "q", 0)).collect();
            let spec = SplitSpec { train_fraction: 0.66, seed, stratify_on: None };
            let (train, test) = split(&rows, &spec).unwrap();
            let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
            all.sort_unstable();
            let expect: Vec<usize> = (0..n).collect();
            prop_assert_eq!(all, expect);
            let want = (0.66 * n as f64).floor() as i64;
            prop_assert!((train.len() as i64 - want).abs() <= 1);
        }
    }
}
