//! Command-line front end for the runtime-complexity embedding pipeline.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 environment error
//! (profiler or compiler unavailable), 3 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rtheta::harness::workload::{generate_synthetic_workload, SyntheticWorkloadSpec, WorkloadKind};
use rtheta::pipeline::{
    cmd_dataset, cmd_embed, cmd_profile, cmd_train_eval, PipelineConfig, PipelineError,
};

#[derive(Parser)]
#[command(name = "rtheta", about = "Profile programs, fit runtime-complexity embeddings, and train classifiers on them.")]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true, default_value = "pipeline.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate compiled synthetic workloads plus input manifests.
    Synth {
        /// Workload families to generate (default: all).
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        /// Scale multipliers; each (kind, scale) pair becomes one program.
        #[arg(long, value_delimiter = ',', default_values_t = vec![3u64, 4, 5, 6, 8, 10, 12, 16])]
        scales: Vec<u64>,
        /// Measurement repetitions per input size (median-aggregated).
        #[arg(long, default_value_t = 3)]
        reps: u32,
    },
    /// Run every manifested program and append records to the store.
    Profile,
    /// Fit embeddings from the store and write the embedding table.
    Embed,
    /// Join embeddings with problem labels into the training dataset.
    Dataset,
    /// Train the configured classifiers and write models plus reports.
    Train,
    /// Profile, embed, join, train, and evaluate in one pass.
    Run,
}

fn synth(config: &PipelineConfig, kinds: &[String], scales: &[u64], reps: u32) -> Result<(), PipelineError> {
    let kinds: Vec<WorkloadKind> = if kinds.is_empty() {
        WorkloadKind::ALL.to_vec()
    } else {
        kinds
            .iter()
            .map(|k| {
                WorkloadKind::parse(k)
                    .ok_or_else(|| PipelineError::Config(format!("unknown workload kind {k:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    std::fs::create_dir_all(&config.paths.binaries_dir)?;
    std::fs::create_dir_all(&config.paths.manifests_dir)?;
    let scratch = config.paths.binaries_dir.join(".build");
    for &kind in &kinds {
        for &scale in scales {
            let spec = SyntheticWorkloadSpec { kind, scale, repetitions: reps };
            let generated = generate_synthetic_workload(&spec, &scratch)?;
            let name = format!("{}_s{scale}", kind.as_str());
            std::fs::copy(&generated.binary, config.paths.binaries_dir.join(&name))?;
            generated
                .manifest
                .save(&config.paths.manifests_dir.join(format!("{name}.toml")))?;
            println!("built {name} ({} inputs)", generated.manifest.entries.len());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let config = PipelineConfig::load(&cli.config)?;
    match &cli.command {
        Command::Synth { kinds, scales, reps } => synth(&config, kinds, scales, *reps)?,
        Command::Profile => profile(&config)?,
        Command::Embed => embed(&config)?,
        Command::Dataset => dataset(&config)?,
        Command::Train => train(&config)?,
        Command::Run => {
            profile(&config)?;
            embed(&config)?;
            dataset(&config)?;
            train(&config)?;
        }
    }
    Ok(())
}

fn profile(config: &PipelineConfig) -> Result<(), PipelineError> {
    for (program, count) in cmd_profile(config)? {
        println!("profiled {program}: {count} records");
    }
    Ok(())
}

fn embed(config: &PipelineConfig) -> Result<(), PipelineError> {
    let outcome = cmd_embed(config)?;
    println!(
        "embedded {} programs -> {}",
        outcome.embeddings.len(),
        config.paths.embeddings.display()
    );
    for (program, reason) in &outcome.skipped {
        eprintln!("skipped {program}: {reason}");
    }
    Ok(())
}

fn dataset(config: &PipelineConfig) -> Result<(), PipelineError> {
    let (kept, unlabeled) = cmd_dataset(config)?;
    println!("dataset: {kept} labeled rows -> {}", config.paths.dataset.display());
    for program in &unlabeled {
        eprintln!("no labels for problem of {program}; row dropped");
    }
    Ok(())
}

fn train(config: &PipelineConfig) -> Result<(), PipelineError> {
    for report in cmd_train_eval(config)? {
        println!(
            "== {:?}: train {} / test {} ==",
            report.classifier,
            report.train_ids.len(),
            report.test_ids.len()
        );
        print!("{}", report.report);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
