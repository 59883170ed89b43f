//! `oamturb` command-line front end.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, DecayTableArgs, Overrides};
use config::LoadedConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "oamturb", version, about = "Entanglement decay of OAM qubits through a turbulent phase screen")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; falls back to `[output] dir`, then $OAMTURB_OUT.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Concurrence against scintillation strength, per scenario and q.
    Sweep,
    /// Generate phase screens and check their structure function.
    Screens,
    /// Closed-form decay distances in km.
    DecayTable(DecayFlags),
    /// Joint OAM detection probabilities over l in -q_max..q_max.
    Crosstalk,
}

#[derive(Debug, Args)]
struct DecayFlags {
    #[arg(long)]
    waist_m: Option<f64>,
    #[arg(long)]
    wavelength_m: Option<f64>,
    #[arg(long)]
    cn2_m_neg2_3: Option<f64>,
    /// Comma-separated OAM values.
    #[arg(long, value_delimiter = ',')]
    l: Option<Vec<u32>>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let loaded = match &cli.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::defaults(),
    };
    let ctx = Context { loaded, overrides: Overrides { seed: cli.seed, workers: cli.workers, out: cli.out } };
    match cli.command {
        Command::Sweep => commands::cmd_sweep(&ctx),
        Command::Screens => commands::cmd_screens(&ctx),
        Command::Crosstalk => commands::cmd_crosstalk(&ctx),
        Command::DecayTable(flags) => {
            let c = &ctx.loaded.config;
            commands::cmd_decay_table(&DecayTableArgs {
                waist_m: flags.waist_m.unwrap_or(c.beam.waist_m),
                wavelength_m: flags.wavelength_m.unwrap_or(c.beam.wavelength_m),
                cn2_m_neg2_3: flags.cn2_m_neg2_3.unwrap_or(c.decay_table.cn2_m_neg2_3),
                l: flags.l.unwrap_or_else(|| c.decay_table.l.clone()),
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
