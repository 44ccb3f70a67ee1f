//! Command-line front end: `swf run`, `swf list`, `swf verify`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swflow::experiment::{self, ExperimentError};

#[derive(Parser)]
#[command(name = "swf", version, about = "Sliced-Wasserstein flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file, a manifest.json from an earlier run, or a built-in scenario.
    Run {
        config: String,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Master seed, overriding the one in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed-order reductions for byte-identical reruns.
        #[arg(long)]
        deterministic: bool,
    },
    /// List the built-in scenarios.
    List,
    /// Check the outputs of a run against its scenario's criteria.
    Verify { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8, ExperimentError> {
    match command {
        Command::List => {
            for e in experiment::catalogue() {
                println!("{:<22} {}", e.name, e.description);
            }
            Ok(0)
        }
        Command::Run {
            config,
            out,
            seed,
            deterministic,
        } => {
            let mut cfg = experiment::load_config(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s)?;
            }
            if deterministic {
                cfg = cfg.with_deterministic()?;
            }
            let report = experiment::run_experiment(&cfg, &out)?;
            println!(
                "{}: {} in {:.2}s, wrote {} to {}",
                report.manifest.scenario.as_deref().unwrap_or("experiment"),
                report.manifest.outcome,
                report.manifest.duration_seconds,
                report.manifest.files.join(", "),
                out.display()
            );
            Ok(0)
        }
        Command::Verify { dir } => {
            let report = experiment::verify(&dir)?;
            print!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}
