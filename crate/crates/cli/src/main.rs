//! Thin executable wrapper: read the configuration, apply flag overrides,
//! run the pipeline, write the report where the configuration says.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use thinbend_cli::{parse_config, run_pipeline, Mode};

#[derive(Parser)]
#[command(
    name = "thinbend",
    about = "Construct interbreeding lattices, bend them, and certify the exact claims"
)]
struct Args {
    /// Path to the JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured mode (validate, build, certify, enumerate).
    #[arg(long)]
    mode: Option<String>,
    /// Override the configured maximum word length for word-level probes.
    #[arg(long)]
    max_word_length: Option<usize>,
    /// Override the configured report path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress the summary line on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let bytes = match std::fs::read(&args.config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match parse_config(&bytes) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Some(name) = &args.mode {
        match Mode::parse(name) {
            Some(mode) => config.mode = mode,
            None => {
                eprintln!("unknown mode \"{name}\" (expected validate, build, certify, or enumerate)");
                return ExitCode::from(1);
            }
        }
    }
    if let Some(length) = args.max_word_length {
        if length == 0 {
            eprintln!("--max-word-length must be at least 1");
            return ExitCode::from(1);
        }
        config.max_word_length = length;
    }
    if let Some(path) = args.output {
        config.output = path;
    }

    let outcome = run_pipeline(&config);
    match &outcome.report {
        Some(report) => {
            if let Err(e) = std::fs::write(&config.output, report) {
                eprintln!("cannot write {}: {e}", config.output.display());
                return ExitCode::from(1);
            }
            if !args.quiet {
                println!("{}", outcome.summary);
            }
        }
        None => eprintln!("{}", outcome.summary),
    }
    ExitCode::from(outcome.exit_code as u8)
}
