//! Command-line driver: one subcommand per experiment, CSV or JSON-lines output.
//!
//! Exit codes: 0 success, 1 invalid input, 2 budget exceeded. Errors are
//! written to stderr as a single JSON object.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, DEFAULT_BUDGET};

pub use commands::execute;
pub use config::{parse_config, ConfigError, ExperimentConfig, Format, SearchKind};

/// Environment variable overriding the default budget.
pub const BUDGET_ENV: &str = "SELFSIM_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "selfsim", version, about = "Experiments on self-similar sets, sumsets, trees and entropy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcmd {
    /// Covering and entropy dimension estimates
    Dim,
    /// Separation Delta_n of cylinder positions
    Delta,
    /// Lift to a dyadic tree; level profile and U/V/W classification
    TreeProfile,
    /// Localized sumsets, small-sumset witness and sum growth
    Sumset,
    /// Exact cylinder recursion and convolution identity
    ConvolutionCheck,
    /// Fiber entropies, small-convolution witness, entropy uniformity
    FiberEntropy,
    /// Search for violations of the leaf-count product bound
    CounterexampleSearch,
    /// The A_n construction and its doubling
    GapDemo,
    /// List the preset catalog
    Presets,
}

impl Subcmd {
    pub fn name(self) -> &'static str {
        match self {
            Subcmd::Dim => "dim",
            Subcmd::Delta => "delta",
            Subcmd::TreeProfile => "tree-profile",
            Subcmd::Sumset => "sumset",
            Subcmd::ConvolutionCheck => "convolution-check",
            Subcmd::FiberEntropy => "fiber-entropy",
            Subcmd::CounterexampleSearch => "counterexample-search",
            Subcmd::GapDemo => "gap-demo",
            Subcmd::Presets => "presets",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    Dim(Flags),
    Delta(Flags),
    TreeProfile(Flags),
    Sumset(Flags),
    ConvolutionCheck(Flags),
    FiberEntropy(Flags),
    CounterexampleSearch(Flags),
    GapDemo(Flags),
    Presets(Flags),
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// Named IFS (see `presets`)
    #[arg(long)]
    preset: Option<String>,
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long = "m")]
    m: Option<usize>,
    #[arg(long = "k")]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Work limit (points, pairs or trees, depending on the command)
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(e) if e.is_budget() => 2,
            _ => 1,
        }
    }

    fn report(&self) -> ErrorReport {
        let (kind, field, line, column) = match self {
            CliError::Config(ConfigError::Parse { line, column, .. }) => ("parse", None, Some(*line), Some(*column)),
            CliError::Config(ConfigError::Validation { field, .. }) => ("validation", Some(field.clone()), None, None),
            CliError::Config(ConfigError::Io { .. }) => ("io", None, None, None),
            CliError::Usage(_) => ("usage", None, None, None),
            CliError::Compute(e) if e.is_budget() => ("budget_exceeded", None, None, None),
            CliError::Compute(_) => ("invalid_input", None, None, None),
        };
        ErrorReport { error: kind, message: self.to_string(), exit_code: self.exit_code(), field, line, column }
    }
}

#[derive(Serialize)]
struct ErrorReport {
    error: &'static str,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

fn merge(flags: Flags) -> Result<(ExperimentConfig, Option<usize>), CliError> {
    let mut cfg = match &flags.config {
        Some(c) => parse_config(c)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = flags.preset {
        if cfg.source_count() > 0 && cfg.preset.is_none() {
            return Err(ConfigError::validation("preset", "--preset conflicts with the input source in the config").into());
        }
        cfg.preset = Some(p);
    }
    macro_rules! over {
        ($($f:ident),*) => { $( if flags.$f.is_some() { cfg.$f = flags.$f; } )* };
    }
    over!(n, m, k, epsilon, delta, tau, c, seed, budget, format);
    if cfg.budget.is_none() {
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            let b = v.trim().parse::<u64>().map_err(|_| ConfigError::validation(BUDGET_ENV, format!("not an integer: {v}")))?;
            cfg.budget = Some(b);
        }
    }
    cfg.validate()?;
    if flags.jobs == Some(0) {
        return Err(ConfigError::validation("jobs", "must be at least 1").into());
    }
    Ok((cfg, flags.jobs))
}

/// The budget in effect: flag or config, then `SELFSIM_BUDGET`, then the default.
pub fn effective_budget(cfg: &ExperimentConfig) -> crate::Budget {
    crate::Budget(cfg.budget.unwrap_or(DEFAULT_BUDGET))
}

/// Parses `args` (including the program name), runs the command and writes its output.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.render().to_string();
            return fail(err, CliError::Usage(msg.trim().to_string()));
        }
    };
    let (cmd, flags) = match cli.command {
        Command::Dim(f) => (Subcmd::Dim, f),
        Command::Delta(f) => (Subcmd::Delta, f),
        Command::TreeProfile(f) => (Subcmd::TreeProfile, f),
        Command::Sumset(f) => (Subcmd::Sumset, f),
        Command::ConvolutionCheck(f) => (Subcmd::ConvolutionCheck, f),
        Command::FiberEntropy(f) => (Subcmd::FiberEntropy, f),
        Command::CounterexampleSearch(f) => (Subcmd::CounterexampleSearch, f),
        Command::GapDemo(f) => (Subcmd::GapDemo, f),
        Command::Presets(f) => (Subcmd::Presets, f),
    };
    let result = merge(flags).and_then(|(cfg, jobs)| {
        let go = || execute(cmd, &cfg);
        match jobs {
            Some(j) => rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?
                .install(go),
            None => go(),
        }
    });
    match result {
        Ok(text) => {
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => fail(err, e),
    }
}

fn fail(err: &mut impl Write, e: CliError) -> i32 {
    let code = e.exit_code();
    let _ = writeln!(err, "{}", serde_json::to_string(&e.report()).expect("error report serializes"));
    code
}
