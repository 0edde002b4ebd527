use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use fmagg_cli::config::Config;
use fmagg_cli::{papr, selftest, sweep};
use std::path::PathBuf;

/// Frequency-modulation aggregation simulator for federated edge learning.
#[derive(Parser)]
#[command(name = "fmagg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Sweep configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write one metrics row per round.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output CSV path (defaults to the config's sweep.output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent sweep cells.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Report per-transport PAPR over the trained parameter powers.
    Papr {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the invariant suite; nonzero exit on any violation.
    Selftest,
}

fn load_config(common: &CommonOpts) -> Result<Config> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.sweep.seeds = vec![seed];
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep {
            common,
            out,
            threads,
        } => {
            let cfg = load_config(&common)?;
            let rows = sweep::run_sweep(&cfg, threads)?;
            let output = out.unwrap_or_else(|| PathBuf::from(&cfg.sweep.output));
            sweep::write_outputs(&cfg, &rows, &output)?;
            eprintln!(
                "wrote {} rows to {} (+ config echo)",
                rows.len(),
                output.display()
            );
        }
        Command::Papr { common } => {
            let cfg = load_config(&common)?;
            let reports = papr::report(&cfg)?;
            print!("{}", papr::render(&reports));
        }
        Command::Selftest => {
            let failures = selftest::run();
            if !failures.is_empty() {
                bail!("{} selftest check(s) failed: {}", failures.len(), failures.join(", "));
            }
            println!("all selftest checks passed");
        }
    }
    Ok(())
}
