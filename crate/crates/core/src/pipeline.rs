//! Pipeline wiring: profile -> embed -> dataset -> train/eval, driven by a
//! single configuration file with reproducible seeds. Every report embeds
//! the resolved configuration so a run can be chained or replayed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::classify::{
    evaluate, save_model, train_multilabel, BaseLearner, BoostedParams, EvalReport, ForestParams,
    MultiLabelParams, TreeParams,
};
use crate::dataset::{
    ingest_labels, label_index, load_dataset, save_dataset, split, DatasetError, LabeledRow,
    SplitSpec, LABEL_CATALOG,
};
use crate::embedding::{build_embedding, headers, CodeEmbedding, EmbeddingError, EMBEDDING_LEN};
use crate::harness::{
    run_suite, EventsMode, HarnessError, InputManifest, ProfileRecord, RecordStore, RunOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePaths {
    pub binaries_dir: PathBuf,
    pub manifests_dir: PathBuf,
    pub store: PathBuf,
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub dataset: PathBuf,
    pub models_dir: PathBuf,
    pub reports_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    /// One-vs-rest on a single catalog class (e.g. math vs non-math).
    Binary { class: String },
    /// Full 11-class multi-label task.
    Multilabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    /// Catalog class name to stratify on, if any.
    pub stratify_on: Option<String>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.66, seed: 0, stratify_on: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: PipelinePaths,
    pub events: EventsMode,
    /// Sentinel-impute metrics with too little data instead of failing.
    #[serde(default)]
    pub impute: bool,
    #[serde(default)]
    pub split: SplitConfig,
    pub task: Task,
    pub classifiers: Vec<BaseLearner>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub boosted: BoostedParams,
}

fn default_timeout_secs() -> u64 {
    60
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            timeout: Duration::from_secs(self.timeout_secs),
            ..RunOptions::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// CLI exit code: 1 usage, 2 environment, 3 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Harness(HarnessError::ProfilerUnavailable(_))
            | PipelineError::Harness(HarnessError::CompilerUnavailable(_)) => 2,
            _ => 3,
        }
    }
}

/// Profiles every program that has a manifest: binary at
/// `binaries_dir/<id>`, manifest at `manifests_dir/<id>.toml`. Runs are
/// strictly sequential across programs as well as within a suite. Returns
/// (program_id, records appended) pairs.
pub fn cmd_profile(config: &PipelineConfig) -> Result<Vec<(String, usize)>, PipelineError> {
    let mut manifest_paths: Vec<PathBuf> = fs::read_dir(&config.paths.manifests_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    manifest_paths.sort();
    let opts = config.run_options();
    let mut store = RecordStore::open(&config.paths.store)?;
    let mut out = Vec::new();
    for manifest_path in manifest_paths {
        let program_id = manifest_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let manifest = InputManifest::load(&manifest_path)?;
        let binary = config.paths.binaries_dir.join(&program_id);
        let records = run_suite(
            &binary,
            &manifest,
            &program_id,
            config.events,
            Some(&mut store),
            &opts,
        )?;
        out.push((program_id, records.len()));
    }
    Ok(out)
}

/// Outcome of one embed pass: fitted embeddings plus the programs skipped
/// in strict mode, with reasons.
#[derive(Debug)]
pub struct EmbedOutcome {
    pub embeddings: Vec<CodeEmbedding>,
    pub problem_of: BTreeMap<String, String>,
    pub skipped: Vec<(String, String)>,
}

/// Builds one embedding per program in the store and writes the embedding
/// table (first line headers, one row per program, program order sorted).
pub fn cmd_embed(config: &PipelineConfig) -> Result<EmbedOutcome, PipelineError> {
    let records = RecordStore::load(&config.paths.store)?;
    let mut by_program: BTreeMap<String, Vec<ProfileRecord>> = BTreeMap::new();
    let mut problem_of = BTreeMap::new();
    for r in records {
        problem_of.insert(r.program_id.clone(), r.problem_id.clone());
        by_program.entry(r.program_id.clone()).or_default().push(r);
    }
    let groups: Vec<(String, Vec<ProfileRecord>)> = by_program.into_iter().collect();
    let results = crate::par::map_slice(&groups, |(program, records)| {
        (program.clone(), build_embedding(records, config.impute))
    });

    let mut embeddings = Vec::new();
    let mut skipped = Vec::new();
    for (program, result) in results {
        match result {
            Ok(e) => embeddings.push(e),
            Err(err) => skipped.push((program, err.to_string())),
        }
    }
    write_embedding_table(&embeddings, &problem_of, &config.paths.embeddings)?;
    Ok(EmbedOutcome { embeddings, problem_of, skipped })
}

fn write_embedding_table(
    embeddings: &[CodeEmbedding],
    problem_of: &BTreeMap<String, String>,
    path: &Path,
) -> Result<(), PipelineError> {
    let mut out = String::new();
    out.push_str("program_id,problem_id,");
    out.push_str(&headers().join(","));
    out.push('\n');
    for e in embeddings {
        out.push_str(&e.program_id);
        out.push(',');
        out.push_str(problem_of.get(&e.program_id).map(String::as_str).unwrap_or(""));
        for v in &e.values {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_embedding_table(path: &Path) -> Result<Vec<(String, String, Vec<f64>)>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let expected = format!("program_id,problem_id,{}", headers().join(","));
    if lines.next() != Some(expected.as_str()) {
        return Err(PipelineError::Config("embedding table header mismatch".into()));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != EMBEDDING_LEN + 2 {
            return Err(PipelineError::Config(format!(
                "embedding row has {} fields",
                fields.len()
            )));
        }
        let values: Result<Vec<f64>, _> = fields[2..].iter().map(|f| f.parse()).collect();
        let values = values.map_err(|e| PipelineError::Config(format!("bad value: {e}")))?;
        rows.push((fields[0].to_string(), fields[1].to_string(), values));
    }
    Ok(rows)
}

/// Joins the embedding table with the problem -> labels map into the
/// labeled dataset file. Programs whose problem has no labels entry are
/// returned as skipped.
pub fn cmd_dataset(config: &PipelineConfig) -> Result<(usize, Vec<String>), PipelineError> {
    let table = read_embedding_table(&config.paths.embeddings)?;
    let ingest = ingest_labels(&config.paths.labels)?;
    let mut rows = Vec::new();
    let mut unlabeled = Vec::new();
    for (program_id, problem_id, values) in table {
        match ingest.map.get(&problem_id) {
            Some(&mask) => rows.push(LabeledRow {
                embedding: CodeEmbedding { program_id: program_id.clone(), values },
                program_id,
                problem_id,
                labels: mask,
            }),
            None => unlabeled.push(program_id),
        }
    }
    save_dataset(&rows, &config.paths.dataset)?;
    Ok((rows.len(), unlabeled))
}

/// A written evaluation report with full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: PipelineConfig,
    pub classifier: BaseLearner,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub report: EvalReport,
}

fn resolve_split_spec(config: &PipelineConfig) -> Result<SplitSpec, PipelineError> {
    let stratify_on = match &config.split.stratify_on {
        None => None,
        Some(name) => Some(
            label_index(name)
                .ok_or_else(|| PipelineError::Config(format!("unknown class {name:?}")))?,
        ),
    };
    Ok(SplitSpec {
        train_fraction: config.split.train_fraction,
        seed: config.split.seed,
        stratify_on,
    })
}

fn task_masks(config: &PipelineConfig, rows: &[LabeledRow]) -> Result<(Vec<u32>, Vec<String>), PipelineError> {
    match &config.task {
        Task::Binary { class } => {
            let idx = label_index(class)
                .ok_or_else(|| PipelineError::Config(format!("unknown class {class:?}")))?;
            let masks = rows
                .iter()
                .map(|r| if r.labels & (1 << idx) != 0 { 0b10 } else { 0b01 })
                .collect();
            Ok((masks, vec![format!("non-{class}"), class.clone()]))
        }
        Task::Multilabel => {
            let masks = rows.iter().map(|r| r.labels as u32).collect();
            let names = LABEL_CATALOG.iter().map(|s| s.to_string()).collect();
            Ok((masks, names))
        }
    }
}

/// Trains every configured classifier on the identical seeded split and
/// writes per-classifier model and report files (JSON plus a rendered
/// table). Returns the reports in classifier order.
pub fn cmd_train_eval(config: &PipelineConfig) -> Result<Vec<ReportFile>, PipelineError> {
    let rows = load_dataset(&config.paths.dataset)?;
    let spec = resolve_split_spec(config)?;
    let (train_idx, test_idx) = split(&rows, &spec)?;
    let (masks, class_names) = task_masks(config, &rows)?;
    let n_classes = class_names.len();

    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.embedding.values.clone()).collect();
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
    let train_masks: Vec<u32> = train_idx.iter().map(|&i| masks[i]).collect();
    let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| x[i].clone()).collect();
    let test_masks: Vec<u32> = test_idx.iter().map(|&i| masks[i]).collect();

    fs::create_dir_all(&config.paths.models_dir)?;
    fs::create_dir_all(&config.paths.reports_dir)?;

    let mut reports = Vec::new();
    for &classifier in &config.classifiers {
        let mut params = MultiLabelParams::with_base(classifier);
        params.tree = config.tree;
        params.forest = ForestParams { seed: config.seed, ..config.forest };
        params.boosted = config.boosted;
        let model = train_multilabel(&train_x, &train_masks, n_classes, &params);
        let pred: Vec<u32> = test_x.iter().map(|row| model.predict(row)).collect();
        let report = evaluate(&pred, &test_masks, &class_names);

        let tag = match classifier {
            BaseLearner::Tree => "tree",
            BaseLearner::Forest => "forest",
            BaseLearner::Boosted => "boosted",
        };
        save_model(&model, &config.paths.models_dir.join(format!("{tag}.json")))
            .map_err(|e| PipelineError::Config(e.to_string()))?;

        let file = ReportFile {
            config: config.clone(),
            classifier,
            train_ids: train_idx.iter().map(|&i| rows[i].program_id.clone()).collect(),
            test_ids: test_idx.iter().map(|&i| rows[i].program_id.clone()).collect(),
            report,
        };
        fs::write(
            config.paths.reports_dir.join(format!("report_{tag}.json")),
            serde_json::to_string_pretty(&file).expect("report serializes"),
        )?;
        fs::write(
            config.paths.reports_dir.join(format!("report_{tag}.txt")),
            format!("{}", file.report),
        )?;
        reports.push(file);
    }
    Ok(reports)
}
