//! Experiment runner for the `incoherent` toolkit.
//!
//! Each subcommand reads a TOML experiment config (plus the gate spec or
//! ancilla files it names), computes one result table, and writes it as CSV
//! with a JSON metadata sidecar. Compute lives in the `incoherent` crate;
//! this crate owns all I/O.

pub mod commands;
pub mod config;
pub mod output;
pub mod specfile;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Context, InputError, Report};
use crate::config::{ExperimentConfig, Kind};
use crate::output::{render_csv, render_sidecar, sidecar_path, Provenance};

#[derive(Debug, Parser)]
#[command(
    name = "incoherent",
    version,
    about = "Coherent-to-incoherent error experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output CSV path; a `.meta.json` sidecar is written next to it.
    /// Without it the table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub shots: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-gate ensemble bounds and the circuit total.
    Bounds {
        /// Also estimate each gate's diamond distance (qubit gates only).
        #[arg(long)]
        measure_diamond: bool,
    },
    /// Error growth of the coherent, fixed-realization and resampled protocols.
    Toy,
    /// T gates by state injection with imperfect ancillas.
    Injection {
        /// Bound sweep along rays from the magic point: S_MIN S_MAX POINTS.
        #[arg(long, num_args = 3, value_names = ["S_MIN", "S_MAX", "POINTS"])]
        sweep: Option<Vec<String>>,
    },
    /// Averaged circuit expectations against the summed ensemble bound.
    Verify,
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Self::Bounds { .. } => Kind::Bounds,
            Self::Toy => Kind::ToyScaling,
            Self::Injection { .. } => Kind::Injection,
            Self::Verify => Kind::CircuitVerify,
        }
    }
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    BoundViolated = 1,
    InvalidInput = 2,
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub csv: String,
    pub report: Report,
    /// Where the CSV was written; `None` means the caller should print it.
    pub written_to: Option<PathBuf>,
}

fn parse_sweep(raw: &[String]) -> Result<(f64, f64, usize), InputError> {
    let bad = || {
        InputError(format!(
            "--sweep expects S_MIN S_MAX POINTS, got `{}`",
            raw.join(" ")
        ))
    };
    let s_min = raw[0].parse::<f64>().map_err(|_| bad())?;
    let s_max = raw[1].parse::<f64>().map_err(|_| bad())?;
    let points = raw[2].parse::<usize>().map_err(|_| bad())?;
    Ok((s_min, s_max, points))
}

/// Runs one command and writes its outputs.
pub fn run(cli: &Cli) -> Result<Outcome, InputError> {
    let kind = cli.command.kind();
    let (cfg, config_text) = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| InputError(e.to_string()))?,
        None if kind == Kind::ToyScaling => (ExperimentConfig::default(), String::new()),
        None => {
            return Err(InputError(format!(
                "`{0}` needs --config with a [{0}] section",
                kind.command()
            )))
        }
    };
    cfg.check_kind(kind)
        .map_err(|e| InputError(e.to_string()))?;

    let (measure_diamond, sweep) = match &cli.command {
        Command::Bounds { measure_diamond } => (*measure_diamond, None),
        Command::Injection { sweep: Some(raw) } => (false, Some(parse_sweep(raw)?)),
        _ => (false, None),
    };
    if cli.shots == Some(0) {
        return Err(InputError("--shots must be at least 1".into()));
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli.out.clone().or_else(|| cfg.out.clone());
    let ctx = Context {
        cfg,
        seed,
        shots: cli.shots,
        measure_diamond,
        sweep,
    };
    let report = match kind {
        Kind::Bounds => commands::bounds::run(&ctx)?,
        Kind::ToyScaling => commands::toy::run(&ctx)?,
        Kind::Injection => commands::injection::run(&ctx)?,
        Kind::CircuitVerify => commands::verify::run(&ctx)?,
    };

    let prov = Provenance::new(
        kind.command(),
        seed,
        &config_text,
        report.parameters.clone(),
        &report.inputs,
    );
    let csv = render_csv(&report.table, &prov);
    if let Some(path) = &out {
        let io = |e: std::io::Error| InputError(format!("cannot write {}: {e}", path.display()));
        std::fs::write(path, &csv).map_err(io)?;
        let meta = render_sidecar(
            &prov,
            path,
            report.table.rows.len(),
            report.checks,
            report.failed,
            report.invalid,
        );
        std::fs::write(sidecar_path(path), meta).map_err(io)?;
    }
    let status = if report.invalid > 0 {
        Status::InvalidInput
    } else if report.failed > 0 {
        Status::BoundViolated
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        csv,
        report,
        written_to: out,
    })
}
