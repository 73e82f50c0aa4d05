use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mitten_cli::config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mitten", about = "Tensor-network noise mitigation benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured experiment end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's `output`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Continue from existing middle-out checkpoints.
        #[arg(long)]
        resume: bool,
        /// Worker threads (defaults to the config's `workers`).
        #[arg(long)]
        workers: Option<usize>,
        /// Replace the sampling seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Run the oracle validation suites; exits nonzero on any failure.
    Validate {
        /// Directory for the pass/fail report CSV.
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Emit the full QCRB saturation residual table.
    Qcrb {
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// Surrogate-column diagnostics from a checkpointed step.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        step: usize,
        #[arg(long)]
        observable: String,
        /// Bond cap of the checkpointed run (defaults to the first config entry).
        #[arg(long)]
        chi: Option<usize>,
    },
    /// Write explicit calibrated noise rates for the configured targets.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, output, resume, workers, seed_override } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seeds.sampling = seed;
            }
            let out_dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let threads = workers.unwrap_or(cfg.workers);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .context("building worker pool")?;
            let outcome = pool.install(|| mitten_cli::runner::run(&cfg, &out_dir, resume))?;
            println!("wrote {}", outcome.manifest_file.display());
            for f in outcome.result_files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Validate { output } => {
            let (results, all_pass) = mitten_cli::validate::validate()?;
            for r in &results {
                println!(
                    "{:<40} residual {:>12.3e}  threshold {:>8.1e}  {}",
                    r.name,
                    r.residual,
                    r.threshold,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            let path = mitten_cli::validate::write_report(&output, &results)?;
            println!("wrote {}", path.display());
            if !all_pass {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::Qcrb { output } => {
            let (path, all_pass) = mitten_cli::validate::qcrb_table(&output)?;
            println!("wrote {}", path.display());
            if !all_pass {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::Diagnose { config, output, step, observable, chi } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let chi = chi.unwrap_or(cfg.chi_max[0]);
            let outcome = mitten_cli::diagnose::diagnose(&cfg, &out_dir, chi, step, &observable)?;
            println!(
                "step {step} chi {chi} {observable}: diagonal {}, max off-diagonal {}, ratio {}",
                outcome.diagonal,
                outcome.max_off_diagonal,
                outcome
                    .dominance_ratio
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "-".into())
            );
            for f in outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Calibrate { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let path = mitten_cli::calibrate::calibrate(&cfg, &out_dir)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
