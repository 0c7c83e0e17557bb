//! `ncvx`: batch experiments on the hard instance families.
//!
//! Exit codes: 0 on success, 1 when a check or run fails, 2 on usage or
//! configuration errors.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::{parse_seeds, usage, ExperimentConfig, UsageError};

#[derive(Parser)]
#[command(name = "ncvx", version, about = "Stochastic first-order experiments on hard instance families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML, or JSON by extension or leading `{`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: `out` in the config, else ./out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seeds overriding the config: comma-separated `n` or `a..b`.
    #[arg(long, global = true, value_parser = seed_list)]
    seeds: Option<SeedList>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the certified class inequalities of a family or counterexample.
    Verify,
    /// SGD on one family member over the horizon and seed grid.
    RunSgd,
    /// Dichotomic search on a 1-D objective.
    RunBisect,
    /// Gap against horizon, with a log-log SVG and fitted slope.
    RateSweep,
    /// Identification game against a family.
    Game,
    /// Optimal Δ* and explicit lower bound per horizon.
    LowerBound,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let Some(path) = &cli.config else {
        return usage("--config is required");
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(SeedList(s)) = cli.seeds {
        cfg.seeds = s;
    }
    let workers = cli.workers.or(cfg.workers);
    if workers == Some(0) {
        return usage("--workers must be positive");
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx { hash: cfg.hash(), cfg, out };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build()?;
    pool.install(|| match cli.command {
        Command::Verify => commands::verify(&ctx),
        Command::RunSgd => commands::run_sgd_cmd(&ctx),
        Command::RunBisect => commands::run_bisect_cmd(&ctx),
        Command::RateSweep => commands::rate_sweep(&ctx),
        Command::Game => commands::game(&ctx),
        Command::LowerBound => commands::lower_bound(&ctx),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
