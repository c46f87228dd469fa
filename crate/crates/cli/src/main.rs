use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skinfem_cli::{run, ExperimentConfig, StudyKind};

/// Runs a skinfem study described by a configuration file.
#[derive(Debug, Parser)]
#[command(name = "skinfem", version)]
struct Args {
    /// Study configuration (key = value lines under [section] headers).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the study kind of the configuration file.
    #[arg(long)]
    study: Option<StudyKind>,
    /// Overrides the output directory of the configuration file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for element assembly (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Reserved; every study is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match ExperimentConfig::parse(&text, args.study, args.out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cfg) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
