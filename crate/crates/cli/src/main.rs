//! `tandyn`: explore the maps `z -> lambda + m pi + z + tan z` from the
//! command line.
//!
//! Exit codes: 0 success (all verdicts pass), 1 a failed verdict or I/O
//! error, 2 bad usage or an unmet precondition.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tandyn_core::Alpha;

use crate::config::{parse_complex, CommonArgs, RunConfig};
use crate::error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "tandyn", version, about = "Wandering domains of lambda + m pi + z + tan z")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed points, critical points and critical values.
    Points {
        #[command(flatten)]
        common: CommonArgs,
        /// List lattice indices -K..=K.
        #[arg(long, default_value_t = 2)]
        k_max: i64,
        #[arg(long)]
        json: bool,
    },
    /// Iterate one seed and report its fate.
    Orbit {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed as "RE,IM".
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        /// Write the full trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Classify a grid and write a PPM image with a JSON sidecar.
    Render {
        #[command(flatten)]
        common: CommonArgs,
        /// Base name of the output files.
        #[arg(long, default_value = "render")]
        name: String,
        /// Also write a PGM map of lattice indices.
        #[arg(long)]
        kmap: bool,
    },
    /// Run theorem scenarios and write JSON reports.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Only this theorem (1 to 4).
        #[arg(long)]
        theorem: Option<u8>,
        /// JSON array of scenario specs instead of the defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Sweep parameters and tabulate the fate of the lower critical orbit.
    Atlas {
        #[command(flatten)]
        common: CommonArgs,
        /// Radii r of |2 + lambda^2| = r.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        /// Number of equally spaced arguments per radius.
        #[arg(long, default_value_t = 8)]
        args: usize,
        /// Rotation numbers "P/Q" or "golden".
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<String>,
        /// Write an N x N thumbnail per sample.
        #[arg(long, value_name = "N")]
        thumbnails: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let (text, ok) = match cli.command {
        Command::Points { common, k_max, json } => {
            if k_max < 0 {
                return Err(CliError::Usage("--k-max must be non-negative".into()));
            }
            (
                commands::cmd_points(&RunConfig::from_args(&common)?, k_max, json)?,
                true,
            )
        }
        Command::Orbit { common, z0, csv } => {
            let cfg = RunConfig::from_args(&common)?;
            (commands::cmd_orbit(&cfg, parse_complex(&z0)?, csv.as_deref())?, true)
        }
        Command::Render { common, name, kmap } => (
            commands::cmd_render(&RunConfig::from_args(&common)?, &name, kmap)?,
            true,
        ),
        Command::Verify { common, theorem, spec } => {
            let cfg = RunConfig::from_args(&common)?;
            let specs = commands::scenarios(&cfg, spec.as_deref(), theorem)?;
            commands::cmd_verify(&cfg, &specs)?
        }
        Command::Atlas {
            common,
            radii,
            args,
            alphas,
            thumbnails,
        } => {
            let cfg = RunConfig::from_args(&common)?;
            let alphas = alphas
                .iter()
                .map(|a| a.parse::<Alpha>())
                .collect::<tandyn_core::Result<Vec<_>>>()?;
            let samples = commands::atlas_samples(&radii, args, &alphas, cfg.m.unwrap_or(1))?;
            (commands::cmd_atlas(&cfg, &samples, thumbnails)?, true)
        }
    };
    print!("{text}");
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
