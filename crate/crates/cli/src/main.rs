//! `gasket`: batch front end for the induction, cocycle, pressure, spectrum
//! and surface-tracing tools.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use failure::Failure;
use output::Output;

#[derive(Parser)]
#[command(name = "gasket", version, about = "Rauzy gasket induction, cocycle spectra and surface sections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bits of precision for rays and induction.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Largest step count kept in the truncated shift.
    #[arg(long, global = true)]
    nmax: Option<u32>,
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Trace arclength per direction.
    #[arg(long, global = true)]
    length: Option<f64>,
    /// Plane level `x₂ = s`, as a decimal or fraction.
    #[arg(long, global = true)]
    level: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Render the gasket by induction depth.
    Gasket,
    /// Algebraic certificates for the loop products.
    Certify,
    /// Lyapunov spectrum of the Gibbs-sampled cocycle.
    Spectrum,
    /// Pressure curve and its root.
    Pressure,
    /// Trace plane sections of the periodic surface.
    Trace,
    /// Spectrum plus traces, comparing the two rates.
    Pipeline,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.precision {
        cfg.precision = v;
    }
    if let Some(v) = cli.nmax {
        cfg.nmax = v;
    }
    if let Some(v) = cli.depth {
        cfg.depth = v;
    }
    if let Some(v) = cli.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = cli.length {
        cfg.length = v;
    }
    if let Some(v) = &cli.level {
        cfg.level = Some(v.clone());
    }
    cfg.out = Some(cli.out.clone());
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    let mut out = Output::new(&cli.out)?;
    match cli.command {
        Command::Gasket => commands::gasket(&cfg, &mut out),
        Command::Certify => commands::certify(&cfg, &mut out),
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Pressure => commands::pressure(&cfg, &mut out),
        Command::Trace => commands::trace_cmd(&cfg, &mut out),
        Command::Pipeline => commands::pipeline(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code as u8)
        }
    }
}
