//! `inflap <action> --config <path> [--out <dir>] [--h <spacing>] [--seed <int>]`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, Action};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] inflap::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Parser, Debug)]
#[command(name = "inflap", version, about = "Inhomogeneous infinity-Laplace Dirichlet problems on grids")]
struct Args {
    action: Action,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Grid spacing; overrides `h` in the config.
    #[arg(long)]
    h: Option<f64>,
    /// Seed for randomised checks; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text, args.config.parent())?;
    if let Some(a) = cfg.action {
        if a != args.action {
            return Err(CliError::Config(format!("config action {a:?} disagrees with command line {:?}", args.action)));
        }
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    run::run(&cfg, args.action, &args.out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("inflap: {e}");
            ExitCode::from(run::EXIT_ERROR as u8)
        }
    }
}
