use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use specrec_core::channel::FamilyKind;
use specrec_cli::campaign::{run_campaign, run_validation, RunOptions};
use specrec_cli::config::{Campaign, ExperimentConfig, Format, SchemeKind};
use specrec_cli::output::emit_results;

#[derive(Parser)]
#[command(name = "specrec", version, about = "Recommendation-assisted spectrum access experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the branching policy with the cross-entropy search.
    SolveMdp(Common),
    /// Train a tabular Q-learning policy on the exact chain.
    TrainQ(Common),
    /// Simulate one or more schemes.
    Simulate(Common),
    /// Simulate every scheme across dynamic factors and seeds.
    Sweep(Common),
    /// Heterogeneous-channel weight search and comparison.
    Hetero(Common),
    /// Run the built-in consistency checks.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dynamic factors (comma separated or repeated).
    #[arg(long = "epsilon", value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long = "scheme", value_enum, value_delimiter = ',')]
    schemes: Vec<SchemeKind>,
    /// Seeds (comma separated or repeated).
    #[arg(long = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    family: Option<FamilyKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the per-slot trace of the first simulated run as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Campaign, Common) {
        match self {
            Command::SolveMdp(c) => (Campaign::SolveMdp, c),
            Command::TrainQ(c) => (Campaign::TrainQ, c),
            Command::Simulate(c) => (Campaign::Simulate, c),
            Command::Sweep(c) => (Campaign::Sweep, c),
            Command::Hetero(c) => (Campaign::Hetero, c),
            Command::Validate(c) => (Campaign::Validate, c),
        }
    }
}

fn build_config(campaign: Campaign, args: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.campaign = Some(campaign);
    if !args.epsilons.is_empty() {
        cfg.epsilons = Some(args.epsilons.clone());
    }
    if !args.schemes.is_empty() {
        cfg.schemes = Some(args.schemes.clone());
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if let Some(f) = args.family {
        cfg.family = f;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SPECREC_THREADS") {
        let n: usize = v.parse().with_context(|| format!("SPECREC_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Returns `Ok(false)` when validation checks fail.
fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let (campaign, args) = cli.command.split();
    let cfg = build_config(campaign, &args)?;
    if campaign == Campaign::Validate {
        let checks = run_validation(&cfg)?;
        let report = match cfg.format {
            Format::Json => serde_json::to_string_pretty(&checks)? + "\n",
            Format::Csv => checks
                .iter()
                .map(|c| format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
                .collect(),
        };
        match &cfg.out {
            Some(path) => std::fs::write(path, &report).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{report}"),
        }
        return Ok(checks.iter().all(|c| c.pass));
    }
    let rows = run_campaign(&cfg, &RunOptions { trace_out: args.trace.clone() })?;
    emit_results(&rows, cfg.format, cfg.out.as_deref())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
