//! Execution harness: runs target binaries against input suites under the
//! platform profiler (or a portable rusage-based fallback), parses counter
//! output, and persists one [`ProfileRecord`] per run to an append-only
//! line-delimited store.
//!
//! All profiled child processes of [`run_suite`] execute strictly
//! sequentially; overlapping children would corrupt counter comparability.

pub mod fallback;
pub mod perf;
pub mod workload;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Exit code recorded for runs killed by the per-run timeout. Real child
/// exits are non-negative; signal deaths are recorded as -(signal).
pub const TIMEOUT_EXIT_CODE: i32 = -124;

/// The nine profiled metrics, in canonical (alphabetical) order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum MetricName {
    #[serde(rename = "branch-misses")]
    BranchMisses,
    #[serde(rename = "branches")]
    Branches,
    #[serde(rename = "context-switches")]
    ContextSwitches,
    #[serde(rename = "cpu-migrations")]
    CpuMigrations,
    #[serde(rename = "cycles")]
    Cycles,
    #[serde(rename = "instructions")]
    Instructions,
    #[serde(rename = "page-faults")]
    PageFaults,
    #[serde(rename = "stalled-cycles-frontend")]
    StalledCyclesFrontend,
    #[serde(rename = "task-clock")]
    TaskClock,
}

impl MetricName {
    pub const ALL: [MetricName; 9] = [
        MetricName::BranchMisses,
        MetricName::Branches,
        MetricName::ContextSwitches,
        MetricName::CpuMigrations,
        MetricName::Cycles,
        MetricName::Instructions,
        MetricName::PageFaults,
        MetricName::StalledCyclesFrontend,
        MetricName::TaskClock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::BranchMisses => "branch-misses",
            MetricName::Branches => "branches",
            MetricName::ContextSwitches => "context-switches",
            MetricName::CpuMigrations => "cpu-migrations",
            MetricName::Cycles => "cycles",
            MetricName::Instructions => "instructions",
            MetricName::PageFaults => "page-faults",
            MetricName::StalledCyclesFrontend => "stalled-cycles-frontend",
            MetricName::TaskClock => "task-clock",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        MetricName::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Perf,
    Fallback,
}

/// One execution's readings for one (program, input) pair. Unsupported or
/// uncollected counters are explicit nulls, never zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub program_id: String,
    pub problem_id: String,
    pub input_id: String,
    pub size_n: u64,
    /// task-clock in milliseconds, all other metrics event counts.
    pub metrics: BTreeMap<MetricName, Option<f64>>,
    pub exit_code: i32,
    pub wall_seconds: f64,
    pub arch_tag: String,
    pub timestamp: DateTime<Utc>,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub input_id: String,
    pub path: PathBuf,
    pub size_n: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
}

fn default_repetitions() -> u32 {
    1
}

/// Input suite for one problem, stored as a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputManifest {
    pub problem_id: String,
    pub entries: Vec<ManifestEntry>,
}

impl InputManifest {
    pub fn load(path: &Path) -> Result<InputManifest, HarnessError> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = toml::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text)?;
        Ok(())
    }

    pub fn distinct_sizes(&self) -> usize {
        let set: std::collections::BTreeSet<u64> =
            self.entries.iter().map(|e| e.size_n).collect();
        set.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("profiler unavailable: {0}")]
    ProfilerUnavailable(String),
    #[error("unrecognized counter line: {line:?}")]
    Parse { line: String },
    #[error("failed to spawn child process: {0}")]
    Spawn(std::io::Error),
    #[error("compiler unavailable: {0}")]
    CompilerUnavailable(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-run settings shared by both samplers.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub timeout: Duration,
    /// Field separator for the profiler's machine-readable output.
    pub sep: char,
    pub arch_tag: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            timeout: Duration::from_secs(60),
            sep: ',',
            arch_tag: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Identity of the run being profiled, copied into the record.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub program_id: String,
    pub problem_id: String,
    pub input_id: String,
    pub size_n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventsMode {
    /// All nine events via the platform profiler.
    Perf,
    /// Portable subset (task-clock, context-switches, page-faults) via
    /// process accounting; hardware counters stay null.
    Fallback,
}

/// Append-only store of profile records, one JSON object per line.
pub struct RecordStore {
    file: fs::File,
    path: PathBuf,
}

impl RecordStore {
    pub fn open(path: &Path) -> Result<RecordStore, HarnessError> {
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordStore { file, path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &ProfileRecord) -> Result<(), HarnessError> {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(self.file, "{line}")?;
        self.file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vec<ProfileRecord>, HarnessError> {
        let file = fs::File::open(path)?;
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line)
                .map_err(|_| HarnessError::Parse { line: line.clone() })?;
            records.push(record);
        }
        Ok(records)
    }
}

/// Runs every (entry x repetition) of the manifest strictly sequentially,
/// appending each record to `store` as it completes. Individual run
/// failures become records with a non-zero exit code; only a
/// `ProfilerUnavailable` on the very first run aborts (before anything is
/// written). The record count always equals the sum of repetitions.
pub fn run_suite(
    binary: &Path,
    manifest: &InputManifest,
    program_id: &str,
    mode: EventsMode,
    mut store: Option<&mut RecordStore>,
    opts: &RunOptions,
) -> Result<Vec<ProfileRecord>, HarnessError> {
    let mut records = Vec::new();
    let mut first = true;
    // Repetition-major, alternating sweep direction: slow machine drift
    // (frequency ramps, background load) then cancels in the per-size
    // medians instead of showing up as a spurious trend over n.
    let max_reps = manifest.entries.iter().map(|e| e.repetitions.max(1)).max().unwrap_or(1);
    for rep in 0..max_reps {
        let mut ordered: Vec<&ManifestEntry> = manifest.entries.iter().collect();
        if rep % 2 == 1 {
            ordered.reverse();
        }
        for entry in ordered {
            if rep >= entry.repetitions.max(1) {
                continue;
            }
            let ctx = RunContext {
                program_id: program_id.to_string(),
                problem_id: manifest.problem_id.clone(),
                input_id: if entry.repetitions > 1 {
                    format!("{}#{}", entry.input_id, rep)
                } else {
                    entry.input_id.clone()
                },
                size_n: entry.size_n,
            };
            let result = match mode {
                EventsMode::Perf => {
                    perf::profile_run(binary, &entry.path, &ctx, &MetricName::ALL, opts)
                }
                EventsMode::Fallback => fallback::fallback_sample(binary, &entry.path, &ctx, opts),
            };
            let record = match result {
                Ok(r) => r,
                Err(e @ HarnessError::ProfilerUnavailable(_)) if first => return Err(e),
                Err(e) if first => return Err(e),
                // Later failures are isolated: synthesize a null record so
                // the count stays |entries x repetitions|.
                Err(_) => failure_record(&ctx, mode, opts),
            };
            first = false;
            if let Some(store) = store.as_deref_mut() {
                store.append(&record)?;
            }
            records.push(record);
        }
    }
    Ok(records)
}

fn failure_record(ctx: &RunContext, mode: EventsMode, opts: &RunOptions) -> ProfileRecord {
    let metrics = MetricName::ALL.iter().map(|m| (*m, None)).collect();
    ProfileRecord {
        program_id: ctx.program_id.clone(),
        problem_id: ctx.problem_id.clone(),
        input_id: ctx.input_id.clone(),
        size_n: ctx.size_n,
        metrics,
        exit_code: -1,
        wall_seconds: 0.0,
        arch_tag: opts.arch_tag.clone(),
        timestamp: Utc::now(),
        sampler: match mode {
            EventsMode::Perf => Sampler::Perf,
            EventsMode::Fallback => Sampler::Fallback,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_are_alphabetical_and_nine() {
        assert_eq!(MetricName::ALL.len(), 9);
        let names: Vec<&str> = MetricName::ALL.iter().map(|m| m.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names[0], "branch-misses");
        assert_eq!(names[8], "task-clock");
    }

    #[test]
    fn metric_name_round_trip() {
        for m in MetricName::ALL {
            assert_eq!(m.as_str().parse::<MetricName>(), Ok(m));
        }
        assert!("energy".parse::<MetricName>().is_err());
    }

    #[test]
    fn manifest_toml_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = InputManifest {
            problem_id: "p1".into(),
            entries: vec![ManifestEntry {
                input_id: "i0".into(),
                path: dir.path().join("i0.txt"),
                size_n: 100,
                repetitions: 2,
            }],
        };
        let path = dir.path().join("manifest.toml");
        m.save(&path).unwrap();
        assert_eq!(InputManifest::load(&path).unwrap(), m);
    }

    #[test]
    fn manifest_repetitions_default_to_one() {
        let m: InputManifest = toml::from_str(
            "problem_id = \"p\"\n[[entries]]\ninput_id = \"a\"\npath = \"a.txt\"\nsize_n = 5\n",
        )
        .unwrap();
        assert_eq!(m.entries[0].repetitions, 1);
    }

    #[test]
    fn store_round_trip_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let rec = ProfileRecord {
            program_id: "prog".into(),
            problem_id: "prob".into(),
            input_id: "i0".into(),
            size_n: 42,
            metrics: MetricName::ALL
                .iter()
                .map(|m| (*m, if *m == MetricName::TaskClock { Some(1.5) } else { None }))
                .collect(),
            exit_code: 0,
            wall_seconds: 0.01,
            arch_tag: "x86_64".into(),
            timestamp: Utc::now(),
            sampler: Sampler::Fallback,
        };
        {
            let mut store = RecordStore::open(&path).unwrap();
            store.append(&rec).unwrap();
        }
        {
            let mut store = RecordStore::open(&path).unwrap();
            store.append(&rec).unwrap();
        }
        let loaded = RecordStore::load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0], rec);
        assert_eq!(loaded[0].metrics[&MetricName::Cycles], None);
    }
}
