use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use motgnn::data::SynthConfig;
use motgnn::model::Baseline;
use motgnn_cli::commands::{cmd_baseline, cmd_experiment, cmd_explain, cmd_synth};
use motgnn_cli::config::{DataSource, RunConfig};

#[derive(Parser)]
#[command(name = "motgnn", version, about = "Tree-derived graph networks for multi-omics classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (synth: generator seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for repeats
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Biomarkers listed per modality
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Gbt,
    Dfn,
}

#[derive(Subcommand)]
enum Command {
    /// Write a planted-signal synthetic dataset
    Synth(Common),
    /// Run the repeated-split experiment
    Experiment(Common),
    /// Run a baseline on the experiment's split sequence
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        which: Which,
    },
    /// Rankings and graph importance from a checkpoint
    Explain {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 30)]
        top_k: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve(c: &Common) -> Result<RunConfig> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    base.with_overrides(c.seed, c.jobs, c.out.clone(), c.top_k)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let cfg = match &c.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            let (synth, seed) = match cfg.data {
                DataSource::Synth { config, seed } => (config, seed),
                DataSource::Files { .. } => (SynthConfig::default(), 42),
            };
            let out = c.out.or(cfg.out).ok_or_else(|| anyhow::anyhow!("synth needs --out"))?;
            for p in cmd_synth(&synth, c.seed.unwrap_or(seed), &out)? {
                log::info!("wrote {}", p.display());
            }
        }
        Command::Experiment(c) => {
            let path = cmd_experiment(&resolve(&c)?)?;
            log::info!("wrote {}", path.display());
        }
        Command::Baseline { common, which } => {
            let which = match which {
                Which::Gbt => Baseline::Gbt,
                Which::Dfn => Baseline::Dfn,
            };
            let path = cmd_baseline(&resolve(&common)?, which)?;
            log::info!("wrote {}", path.display());
        }
        Command::Explain { checkpoint, top_k, out } => {
            anyhow::ensure!(top_k >= 1, "--top-k must be at least 1");
            cmd_explain(&checkpoint, top_k, &out)?;
        }
    }
    Ok(())
}

/// First paragraph of a clap message, flattened onto one line.
fn usage_line(rendered: &str) -> String {
    let head = rendered.split("\n\n").next().unwrap_or(rendered);
    let flat: Vec<&str> = head.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    flat.join(" ").trim_start_matches("error: ").to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {}", usage_line(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
