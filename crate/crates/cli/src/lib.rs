//! Batch runner for the kakeya-lab experiments.
//!
//! Each subcommand reads an optional JSON config, runs one experiment and
//! writes `<out>/<name>.json` plus one or more CSV tables. The JSON summary is
//! also returned so callers (and the binary) can print it.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

pub mod commands;
pub mod config;
pub mod output;

#[derive(Debug, Parser)]
#[command(name = "ckl", version, about = "Curved Kakeya/Nikodym and oscillatory-integral experiments")]
pub struct Cli {
    /// JSON config file for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized suites and samplers (overrides the config's `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Builtin phase name, inline phase JSON, or a path to a phase JSON file.
    #[arg(long, global = true)]
    pub phase: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exponent table, nondegeneracy check and jet of a phase.
    PhaseInfo,
    /// Kakeya/Nikodym non-compression verdicts.
    HypothesisCheck,
    /// Lower bounds for the Kakeya maximal operator along a δ-ladder.
    MaximalNorm,
    /// Lower bounds for the Nikodym maximal operator along a δ-ladder.
    NikodymNorm,
    /// Sublevel-set measures under adversarial coefficients and κ fits.
    Sublevel,
    /// The compressed family: surface containment, Jacobian, norm ladder.
    Counterexample,
    /// Tubes of a family concentrated in a grain.
    GrainCount,
    /// Volume scaling of neighbourhoods of a variety.
    Wongkew,
    /// Norm scaling of the oscillatory operators along a λ-ladder.
    Oscillatory,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PhaseInfo => "phase-info",
            Command::HypothesisCheck => "hypothesis-check",
            Command::MaximalNorm => "maximal-norm",
            Command::NikodymNorm => "nikodym-norm",
            Command::Sublevel => "sublevel",
            Command::Counterexample => "counterexample",
            Command::GrainCount => "grain-count",
            Command::Wongkew => "wongkew",
            Command::Oscillatory => "oscillatory",
        }
    }

    pub const ALL: [Command; 9] = [
        Command::PhaseInfo,
        Command::HypothesisCheck,
        Command::MaximalNorm,
        Command::NikodymNorm,
        Command::Sublevel,
        Command::Counterexample,
        Command::GrainCount,
        Command::Wongkew,
        Command::Oscillatory,
    ];
}

/// What a finished run produced.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
    /// Some verdict came out Inconclusive.
    pub inconclusive: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.inconclusive {
            2
        } else {
            0
        }
    }
}

/// Resolved inputs shared by every subcommand.
pub struct Context {
    pub phase: Option<kakeya_lab::phase::PhaseSpec>,
    pub seed: Option<u64>,
    pub loaded: config::Loaded,
    pub out: output::Output,
}

pub const DEFAULT_OUT: &str = "ckl-out";

pub fn run(cli: &Cli) -> Result<Outcome> {
    let name = cli.command.name();
    let loaded = config::load(cli.config.as_deref(), name)?;
    let phase = match &cli.phase {
        Some(arg) => Some(config::phase_from_arg(arg)?),
        None => loaded.phase.clone(),
    };
    let seed = cli.seed.or(loaded.seed);
    let dir = cli.out.clone().or_else(|| loaded.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ctx = Context { phase, seed, out: output::Output::new(&dir)?, loaded };
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(1) => kakeya_lab::exec::sequential(|| commands::dispatch(cli.command, ctx)),
        Some(k) => with_pool(k, || commands::dispatch(cli.command, ctx)),
        None => commands::dispatch(cli.command, ctx),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Collapses an error chain onto one line.
pub fn one_line(err: &anyhow::Error) -> String {
    format!("{err:#}").split_whitespace().collect::<Vec<_>>().join(" ")
}
