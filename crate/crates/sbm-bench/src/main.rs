use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use sbm_bench::config::ExperimentConfig;
use sbm_bench::presets::{builtin_presets, PresetKind};
use sbm_bench::runner::run_experiment;
use sbm_bench::tables::{emit_tables, read_results_csv};

#[derive(Parser)]
#[command(name = "sbm-bench", about = "Spectral blockmodel clustering benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and emit tables.
    Run {
        /// Path to the plain-text config.
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Worker threads (defaults to the available cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the ASE/EM convergence tolerance.
        #[arg(long)]
        tol_ase: Option<f64>,
        /// Override the LSE convergence tolerance.
        #[arg(long)]
        tol_lse: Option<f64>,
        /// Override the iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Exit nonzero if any replication was resampled, any engine failed,
        /// or any run hit the iteration cap.
        #[arg(long)]
        strict: bool,
    },
    /// List the built-in model presets.
    Presets,
    /// Rebuild the delta tables from an existing results directory.
    Table {
        /// Directory containing a previously emitted results.csv.
        results_dir: PathBuf,
    },
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            reps,
            jobs,
            tol_ase,
            tol_lse,
            max_iter,
            strict,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text).map_err(|e| anyhow::anyhow!(e))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = reps {
                cfg.replications = r;
            }
            if let Some(t) = tol_ase {
                cfg.tol_ase = t;
            }
            if let Some(t) = tol_lse {
                cfg.tol_lse = t;
            }
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build_global()
                    .context("configuring worker pool")?;
            }
            let (results, log) = run_experiment(&cfg)?;
            let outdir = PathBuf::from(&cfg.output);
            let written = emit_tables(&results, &text, cfg.seed, &log, &outdir)?;
            for name in &written {
                println!("{}", outdir.join(name).display());
            }
            if log.flagged() {
                eprintln!(
                    "flagged: {} resamples, {} engine failures, {} nonconverged runs",
                    log.resamples, log.engine_failures, log.nonconverged
                );
            }
            Ok(strict && log.flagged())
        }
        Command::Presets => {
            for preset in builtin_presets() {
                match preset.kind {
                    PresetKind::Mixture { x, pi } => {
                        println!(
                            "{:<12} mixture  K={} d={} pi={:?}",
                            preset.name,
                            x.nrows(),
                            x.ncols(),
                            pi.to_vec()
                        );
                    }
                    PresetKind::Sbm {
                        b,
                        pi,
                        fixed_labels,
                        ..
                    } => {
                        println!(
                            "{:<12} sbm      K={} pi={:?} fixed_labels={}",
                            preset.name,
                            b.nrows(),
                            pi.to_vec(),
                            fixed_labels
                        );
                    }
                }
            }
            Ok(false)
        }
        Command::Table { results_dir } => {
            let results = read_results_csv(&results_dir.join("results.csv"))?;
            let seed = results.first().map(|r| r.seed).unwrap_or(0);
            let written = emit_tables(
                &results,
                "rebuilt from results.csv",
                seed,
                &Default::default(),
                &results_dir,
            )?;
            for name in &written {
                println!("{}", results_dir.join(name).display());
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(flagged_strict) => {
            if flagged_strict {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
