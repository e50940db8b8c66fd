use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("porosity control {varpi} outside [0, 1]: {reason}")]
    PorosityControl { varpi: f64, reason: String },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("instability at step {step}, cell ({x}, {y}): {reason}")]
    Instability {
        step: u64,
        x: usize,
        y: usize,
        reason: String,
    },

    #[error("no steady state after {steps} steps (last residual {residual:.3e})")]
    NotConverged {
        steps: u64,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("discretization check failed: {0}")]
    Discretization(String),

    #[error("{}", format_config_errors(.0))]
    Config(Vec<ConfigError>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A single configuration problem, tied to the line it came from when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_config_errors(errors: &[ConfigError]) -> String {
    let lines: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
    format!("invalid configuration:\n  {}", lines.join("\n  "))
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
