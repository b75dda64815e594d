//! Batch front end: `dpnls <command>` with a TOML config, `--set`
//! overrides and plot-ready CSV output.
//!
//! Exit codes: 0 success, 1 an acceptance criterion failed, 2 input or
//! configuration error (including errors raised by the numerics).

pub mod commands;
pub mod config;
pub mod suite;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{RunConfig, OUTPUT_DIR_ENV, REFERENCE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("missing fixture {}", .0.display())]
    MissingFixture(PathBuf),

    #[error(transparent)]
    Core(#[from] dpnls_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CRITERION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpnls", version, about = "Double-pole NLS solitons, long-time asymptotics and scattering")]
pub struct Cli {
    /// TOML run configuration (see `dpnls defaults`)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; beats DPNLS_OUTPUT_DIR and the config file
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Profile CSV (x, re q, im q) as the data source
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,

    /// Scattering document as the data source
    #[arg(long, global = true)]
    pub scattering: Option<PathBuf>,

    /// Override a config key, e.g. --set grid.x_points=801
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// -v info, -vv debug
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Forward scattering of a profile: zeros, norming data, r(z)
    Scatter,
    /// Soliton field over an (x, t) grid
    Soliton,
    /// Long-time asymptotic formula over a cone
    Asymptote,
    /// Split-step evolution of the initial data
    Evolve,
    /// Error of a saved field against a reference
    Compare,
    /// Run the acceptance suite
    Verify {
        /// criterion ids to run (repeatable); "5" selects 5a..5d
        #[arg(long)]
        only: Vec<String>,
        /// fixture directory
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Print the annotated default configuration
    Defaults,
}

/// Config file, then `--set`, then the dedicated flags; the output directory
/// comes from --output-dir, else DPNLS_OUTPUT_DIR, else the config.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(p) = &cli.profile {
        cfg.source.profile = Some(p.clone());
    }
    if let Some(p) = &cli.scattering {
        cfg.source.scattering = Some(p.clone());
    }
    if let Command::Verify { only, fixtures } = &cli.command {
        if !only.is_empty() {
            cfg.verify.only = only.clone();
        }
        if let Some(f) = fixtures {
            cfg.verify.fixtures = f.clone();
        }
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    } else if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

/// Runs one command and returns the exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    if matches!(cli.command, Command::Defaults) {
        print!("{REFERENCE}");
        return Ok(EXIT_OK);
    }
    let cfg = resolve_config(cli)?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    match &cli.command {
        Command::Scatter => {
            let data = commands::cmd_scatter(&cfg, &out)?;
            println!("{} discrete point(s), r on {} samples", data.discrete.len(), data.z_grid.len());
            for d in &data.discrete {
                println!("  z = {} order {}", d.z, d.order);
            }
        }
        Command::Soliton => {
            let rows = commands::cmd_soliton(&cfg, &out)?;
            println!("{} samples written", rows.len());
        }
        Command::Asymptote => {
            let values = commands::cmd_asymptote(&cfg, &out)?;
            println!("{} samples written", values.len());
        }
        Command::Evolve => {
            let field = commands::cmd_evolve(&cfg, &out)?;
            println!("{} slices written", field.t_samples.len());
        }
        Command::Compare => {
            for r in commands::cmd_compare(&cfg, &out)? {
                println!("t = {:<8} L-inf {:.3e}  L2 {:.3e}", r.t, r.linf, r.l2);
            }
        }
        Command::Verify { .. } => {
            let report = commands::cmd_verify(&cfg, &out)?;
            for c in &report.criteria {
                println!("{}", c.line());
            }
            if !report.all_pass {
                return Ok(EXIT_CRITERION);
            }
        }
        Command::Defaults => unreachable!(),
    }
    Ok(EXIT_OK)
}
