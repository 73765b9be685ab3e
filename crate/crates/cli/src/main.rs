//! Command-line driver: one subcommand per experiment kind, plus the
//! acceptance suite.
//!
//! Each subcommand reads a flat key-value config (see `configs/` in the
//! repository root for examples), overrides its experiment kind, and
//! writes CSV results, a JSON summary, and a manifest under the output
//! directory. `CATMAP_QE_THREADS` caps the worker pool.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use catmap_qe::harness::{run, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "catmap-qe", version, about = "Quantized cat-map laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to a flat key-value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record unit failures in the manifest and continue.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenphases and residuals of the quantized map.
    Spectrum(CommonArgs),
    /// Quantum variance of an observable over the eigenbasis.
    Variance(CommonArgs),
    /// Eigensection masses over a log-good ball cover.
    Mass(CommonArgs),
    /// Zero sets: counts, ball discrepancies, pairings, potentials.
    Zeros(CommonArgs),
    /// Egorov remainder norms over the level grid.
    Egorov(CommonArgs),
    /// Bergman kernel diagnostics and decay fits.
    Kernel(CommonArgs),
    /// Classical correlation decay, exact and quadrature.
    Correlations(CommonArgs),
    /// Log-good cover construction and verification.
    Cover(CommonArgs),
    /// Run the acceptance suite and write its verdicts.
    Accept(CommonArgs),
}

fn load_config(args: &CommonArgs, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::parse(&text).context("parsing config")?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (args, kind) = match &cli.command {
        Command::Spectrum(a) => (a, ExperimentKind::Spectrum),
        Command::Variance(a) => (a, ExperimentKind::Variance),
        Command::Mass(a) => (a, ExperimentKind::Mass),
        Command::Zeros(a) => (a, ExperimentKind::Zeros),
        Command::Egorov(a) => (a, ExperimentKind::Egorov),
        Command::Kernel(a) => (a, ExperimentKind::Kernel),
        Command::Correlations(a) => (a, ExperimentKind::Correlations),
        Command::Cover(a) => (a, ExperimentKind::Cover),
        Command::Accept(a) => (a, ExperimentKind::Accept),
    };
    let cfg = load_config(args, kind)?;
    let out = run(&cfg, args.out.as_deref(), args.keep_going)
        .with_context(|| format!("running {}", kind.as_str()))?;
    for f in &out.result_files {
        println!("wrote {}", f.display());
    }
    println!("manifest: {}", out.out_dir.join("manifest.json").display());
    Ok(())
}
