use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ifs::Ifs;
use crate::measure::DiscreteMeasure;
use crate::rational::Rational;
use crate::tree::{ClassifyMode, LiftConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    #[default]
    Exhaustive,
    Random,
}

/// Everything a subcommand may read. At most one input source (`ifs`, `preset`,
/// `points`, `measure`) may be given; each subcommand checks the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ifs: Option<Ifs>,
    pub preset: Option<String>,
    /// Parameter of the `zero-one-three` preset.
    pub lambda: Option<Rational>,
    pub points: Option<Vec<Rational>>,
    pub measure: Option<DiscreteMeasure<f64>>,

    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub format: Option<Format>,

    /// Tree height for `tree-profile`.
    pub height: Option<usize>,
    pub lift: Option<LiftConvention>,
    pub classify: Option<ClassifyMode>,
    pub search: Option<SearchKind>,
    pub trials: Option<u64>,
    pub max_instances: Option<usize>,
    /// `Y = {k / 2^j}` for the sum-growth experiment.
    pub y_exponent: Option<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation { field: field.to_string(), message: message.into() }
    }
}

impl ExperimentConfig {
    pub fn source_count(&self) -> usize {
        [self.ifs.is_some(), self.preset.is_some(), self.points.is_some(), self.measure.is_some()]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        if self.source_count() > 1 {
            return Err(ConfigError::validation("source", "give at most one of ifs, preset, points, measure"));
        }
        if self.lambda.is_some() && self.preset.as_deref() != Some("zero-one-three") {
            return Err(ConfigError::validation("lambda", "only the zero-one-three preset takes lambda"));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta), ("tau", self.tau), ("c", self.c)] {
            if v.is_some_and(|x| x.is_nan()) {
                return Err(ConfigError::validation(name, "must be a number"));
            }
        }
        if self.epsilon.is_some_and(|e| e < 0.0) {
            return Err(ConfigError::validation("epsilon", "must be non-negative"));
        }
        Ok(())
    }
}

fn from_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Parse { line: inner.line(), column: inner.column(), message: inner.to_string() }
        } else {
            let field = if path == "." { "config".to_string() } else { path };
            ConfigError::Validation { field, message: strip_position(&inner.to_string()) }
        }
    })?;
    de.end().map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Reads a config from inline JSON (anything starting with `{`) or from a file path.
pub fn parse_config(input: &str) -> Result<ExperimentConfig, ConfigError> {
    if input.trim_start().starts_with('{') {
        return from_json(input);
    }
    let text = std::fs::read_to_string(Path::new(input))
        .map_err(|e| ConfigError::Io { path: input.to_string(), message: e.to_string() })?;
    from_json(&text)
}

impl From<ConfigError> for super::CliError {
    fn from(e: ConfigError) -> Self {
        super::CliError::Config(e)
    }
}
