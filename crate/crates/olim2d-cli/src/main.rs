//! `olim2d` — command-line front end for the quasi-potential solver.
//!
//! Configuration is flat `key=value` text with dotted sections (see
//! `config.rs`); every flag overrides the corresponding config key, and
//! `OLIM2D_OUTPUT_DIR` overrides the output directory last.

mod config;
mod error;
mod manifest;
mod runs;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{KeyValues, RunConfig, OUTPUT_DIR_ENV};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "olim2d", version, about = "Quasi-potential solver for 2D SDEs")]
struct Cli {
    /// Config file of key=value lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a single config key, e.g. --set solver.n=512. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Model name (shorthand for --set model.name=...).
    #[arg(long, global = true)]
    model: Option<String>,

    /// Square mesh size (shorthand for --set solver.n=...).
    #[arg(short = 'n', long, global = true)]
    n: Option<usize>,

    /// Update factor K (shorthand for --set solver.k=...).
    #[arg(short = 'k', long, global = true)]
    k: Option<usize>,

    /// Output directory (shorthand for --set output.dir=...).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the quasi-potential and write the requested artifacts.
    Solve,
    /// Convergence study over mesh sizes and diffusion parameters.
    Sweep,
    /// Solve, then trace the minimum action path from the saddle.
    Map,
    /// Solve, then estimate the expected transition time.
    Rate,
    /// Dump the Lambda Phage operator binding table.
    ExportTables,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut kv = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config file {}: {e}", path.display()))
            })?;
            KeyValues::parse_text(&text)?
        }
        None => KeyValues::default(),
    };
    if let Some(model) = &cli.model {
        kv.set("model.name", model);
    }
    if let Some(n) = cli.n {
        kv.set("solver.n", n);
    }
    if let Some(k) = cli.k {
        kv.set("solver.k", k);
    }
    if let Some(dir) = &cli.output_dir {
        kv.set("output.dir", dir.display());
    }
    for pair in &cli.set {
        kv.set_pair(pair)?;
    }
    // The binding table does not depend on a model choice.
    if matches!(cli.command, Command::ExportTables) {
        kv.set_default("model.name", "lambda-phage");
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        kv.set("output.dir", dir);
    }
    RunConfig::from_kv(kv)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::Solve => runs::run_single(&cfg),
        Command::Sweep => sweep::run_sweep(&cfg),
        Command::Map => runs::run_map(&cfg),
        Command::Rate => runs::run_rate(&cfg),
        Command::ExportTables => runs::run_export_tables(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
