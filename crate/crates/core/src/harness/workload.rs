//! Synthetic workloads of known complexity class, used as a ground-truth
//! validation corpus. Each workload is a small generated C program that
//! reads n on standard input and spins through Theta(target) units of work
//! with data-dependent branching, plus an input manifest spanning at least
//! one decade of sizes.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{HarnessError, InputManifest, ManifestEntry};
use crate::complexity_model::FamilyKind;

/// Target complexity classes the generator can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadKind {
    Constant,
    Log,
    Linear,
    Quadratic,
    Cubic,
    Exponential,
    Factorial,
}

impl WorkloadKind {
    pub const ALL: [WorkloadKind; 7] = [
        WorkloadKind::Constant,
        WorkloadKind::Log,
        WorkloadKind::Linear,
        WorkloadKind::Quadratic,
        WorkloadKind::Cubic,
        WorkloadKind::Exponential,
        WorkloadKind::Factorial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadKind::Constant => "constant",
            WorkloadKind::Log => "log",
            WorkloadKind::Linear => "linear",
            WorkloadKind::Quadratic => "quadratic",
            WorkloadKind::Cubic => "cubic",
            WorkloadKind::Exponential => "exponential",
            WorkloadKind::Factorial => "factorial",
        }
    }

    pub fn parse(s: &str) -> Option<WorkloadKind> {
        WorkloadKind::ALL.iter().find(|k| k.as_str() == s).copied()
    }

    /// The grid class a clean fit of this workload's work curve selects.
    pub fn expected_class(self) -> (FamilyKind, f64) {
        match self {
            WorkloadKind::Constant => (FamilyKind::LogPolynomial, 0.0),
            WorkloadKind::Log => (FamilyKind::LogPolynomial, 1.0),
            WorkloadKind::Linear => (FamilyKind::Polynomial, 1.0),
            WorkloadKind::Quadratic => (FamilyKind::Polynomial, 2.0),
            WorkloadKind::Cubic => (FamilyKind::Polynomial, 3.0),
            WorkloadKind::Exponential => (FamilyKind::Power, 2.0),
            WorkloadKind::Factorial => (FamilyKind::Factorial, 1.0),
        }
    }

    /// Input sizes: at least 10, spanning at least one decade, kept small
    /// enough that the largest run stays well under a second at scale ~8.
    pub fn sizes(self) -> Vec<u64> {
        match self {
            WorkloadKind::Constant => (1..=10).map(|k| k * 1000).collect(),
            // log2 n from 8 to 52: over a narrow exponent span log2(n)
            // and loglog-cubed curves are near-proportional under noise
            WorkloadKind::Log => {
                [8u32, 12, 16, 20, 24, 28, 32, 36, 40, 44].iter().map(|&e| 1u64 << e).collect()
            }
            // nearly two decades: over a single decade log2^10(n) tracks n
            // too closely for the fitter to separate them under noise
            WorkloadKind::Linear => (0..=10)
                .map(|k| (20_000.0 * 10f64.powf(k as f64 / 6.0)) as u64)
                .collect(),
            WorkloadKind::Quadratic => (1..=10).map(|k| k * 300).collect(),
            WorkloadKind::Cubic => (1..=10).map(|k| k * 30).collect(),
            WorkloadKind::Exponential => (1..=12).map(|k| k * 2).collect(),
            WorkloadKind::Factorial => (1..=12).collect(),
        }
    }

    /// C expression computing the work-unit count for input n at a given
    /// scale multiplier. The baselines put a scale-8 run in the tens of
    /// milliseconds at the calibrated ~2 ns/unit.
    fn units_expr(self) -> &'static str {
        match self {
            WorkloadKind::Constant => "2500000ULL * SCALE",
            WorkloadKind::Log => "(uint64_t)(log2((double)n) * 250000.0 * (double)SCALE)",
            WorkloadKind::Linear => "18ULL * SCALE * n",
            WorkloadKind::Quadratic => "SCALE * n * n / 2ULL",
            WorkloadKind::Cubic => "SCALE * n * n * n / 8ULL",
            WorkloadKind::Exponential => "SCALE * (((uint64_t)1) << n) / 4ULL",
            WorkloadKind::Factorial => "SCALE * gamma_n(n) / 8ULL",
        }
    }
}

/// A complexity target plus a positive work multiplier; varying the scale
/// across program variants varies the leading constant of the work curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticWorkloadSpec {
    pub kind: WorkloadKind,
    pub scale: u64,
    /// Measurement repetitions per input size; the fitter takes the median,
    /// which tames scheduling noise in the low-count series.
    pub repetitions: u32,
}

#[derive(Debug, Clone)]
pub struct GeneratedWorkload {
    pub binary: PathBuf,
    pub manifest: InputManifest,
    pub manifest_path: PathBuf,
}

fn source_for(spec: &SyntheticWorkloadSpec) -> String {
    format!(
        r#"#include <stdio.h>
#include <stdint.h>
#include <math.h>

#define SCALE {scale}ULL

static uint64_t gamma_n(uint64_t n) {{
    uint64_t acc = 1;
    for (uint64_t k = 2; k < n; k++) acc *= k;
    return acc;
}}

int main(void) {{
    unsigned long long n_in;
    if (scanf("%llu", &n_in) != 1) return 2;
    uint64_t n = (uint64_t)n_in;
    (void)gamma_n;
    uint64_t units = {units};
    volatile uint64_t sink = 0;
    uint64_t s = 0x9e3779b97f4a7c15ULL ^ n, acc = 0;
    for (uint64_t i = 0; i < units; i++) {{
        s ^= s << 13; s ^= s >> 7; s ^= s << 17;
        if (s & 1) acc += s; else acc ^= s >> 3;
    }}
    sink = acc;
    return (int)(sink & 0);
}}
"#,
        scale = spec.scale.max(1),
        units = spec.kind.units_expr(),
    )
}

/// Emits, compiles and stages one synthetic workload under `out_dir`:
/// the compiled binary, one input file per size, and the manifest (TOML).
pub fn generate_synthetic_workload(
    spec: &SyntheticWorkloadSpec,
    out_dir: &Path,
) -> Result<GeneratedWorkload, HarnessError> {
    let name = format!("{}_s{}", spec.kind.as_str(), spec.scale);
    let work_dir = out_dir.join(&name);
    std::fs::create_dir_all(&work_dir)?;

    let src_path = work_dir.join("workload.c");
    std::fs::write(&src_path, source_for(spec))?;
    let binary = work_dir.join("workload");
    let output = Command::new("cc")
        .arg("-O2")
        .arg("-o")
        .arg(&binary)
        .arg(&src_path)
        .arg("-lm")
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                HarnessError::CompilerUnavailable("cc not found on PATH".into())
            } else {
                HarnessError::Spawn(e)
            }
        })?;
    if !output.status.success() {
        return Err(HarnessError::CompilerUnavailable(
            String::from_utf8_lossy(&output.stderr).into_owned(),
        ));
    }

    let mut entries = Vec::new();
    for size in spec.kind.sizes() {
        let input_path = work_dir.join(format!("n_{size}.txt"));
        std::fs::write(&input_path, format!("{size}\n"))?;
        entries.push(ManifestEntry {
            input_id: format!("n_{size}"),
            path: input_path,
            size_n: size,
            repetitions: spec.repetitions.max(1),
        });
    }
    let manifest = InputManifest { problem_id: name, entries };
    let manifest_path = work_dir.join("manifest.toml");
    manifest.save(&manifest_path)?;

    Ok(GeneratedWorkload { binary, manifest, manifest_path })
}
