//! `dbar` — config-driven experiment runner.
//!
//! Exit codes: 0 = all assertions of the run hold; 1 = assertion
//! violations (reports still written); 2 = configuration or solver error
//! (no partial outputs for malformed configs).

mod config;
mod experiments;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "dbar", version, about = "Transport-entropy experiments on lattice measures")]
struct Args {
    /// Path to the experiment config (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Output directory for summary.json and CSV reports
    #[arg(long)]
    out: PathBuf,

    /// Replace the config's master seed
    #[arg(long)]
    seed_override: Option<u64>,

    /// Worker threads for independent instances (per-instance solves stay
    /// single-threaded)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> anyhow::Result<bool> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", args.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed_override {
        config.override_seed(seed);
    }
    if args.jobs == 0 {
        anyhow::bail!("--jobs must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build_global()
        .ok(); // a pre-existing pool only affects scheduling, not results

    // config validated: outputs may be created from here on
    fs::create_dir_all(&args.out)?;
    let outcome = experiments::run(&config, &args.out)?;
    println!(
        "{}: {} (summary: {})",
        config.kind(),
        if outcome.pass { "pass" } else { "ASSERTION VIOLATIONS" },
        args.out.join("summary.json").display()
    );
    Ok(outcome.pass)
}
