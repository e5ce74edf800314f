use std::path::PathBuf;
use std::process::ExitCode;

use biphoton::cli::{run, RunConfig, EXIT_INVALID, EXIT_IO};
use clap::Parser;

/// Regenerate band, Chern, finite-array, DOS and interface data.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// bands | chern | finite | dos | interface | critical-phase
    experiment: String,
    /// Flat key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_IO, format!("{}: {e}", args.config.display())),
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    match args.experiment.parse() {
        Ok(e) => config.experiment = Some(e),
        Err(e) => return fail(EXIT_INVALID, e),
    }
    if let Some(o) = args.out {
        config.out = o;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    match run(&config) {
        Ok(outcome) => {
            for f in outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.code, e),
    }
}
