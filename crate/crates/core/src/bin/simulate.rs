//! Experiment runner CLI.
//!
//! Precedence: built-in defaults, then the config file, then flags.

use clap::Parser;
use memesim::config::Config;
use memesim::runner::{self, RunOptions};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    about = "Run seeded batches of the gene/meme co-evolution world and write CSV metrics"
)]
struct Cli {
    /// Config file (`key = value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base seed; run i uses base_seed + i.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of runs in the batch.
    #[arg(long)]
    runs: Option<u64>,

    /// Days per run.
    #[arg(long)]
    days: Option<u64>,

    /// Engine mode: basic, breeders, lamarck or socializers.
    #[arg(long)]
    mode: Option<String>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Write each run's generated network as run_<i>_network.txt.
    #[arg(long)]
    dump_network: bool,

    /// Write per-agent snapshot rows every N days.
    #[arg(long, value_name = "N")]
    snapshot_every: Option<u64>,
}

fn main() {
    if let Err(message) = run(Cli::parse()) {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| e.to_string())?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.runs = runs;
    }
    if let Some(days) = cli.days {
        cfg.max_days = days;
    }
    if let Some(mode) = &cli.mode {
        cfg.mode = mode.parse().map_err(|e: String| e)?;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let opts = RunOptions {
        snapshot_every: cli.snapshot_every,
        dump_network: cli.dump_network,
    };
    let batch = runner::run_batch(&cfg, opts).map_err(|e| e.to_string())?;
    runner::emit_batch(&batch, &cfg, &cli.out).map_err(|e| e.to_string())?;

    let collapsed = batch
        .runs
        .iter()
        .filter(|r| r.collapse_day.is_some())
        .count();
    println!(
        "{} runs ({} mode, {} days max) -> {} | collapsed {} | collapse_fraction {:.6}",
        cfg.runs,
        cfg.mode,
        cfg.max_days,
        cli.out.display(),
        collapsed,
        batch.collapse_fraction
    );
    Ok(())
}
