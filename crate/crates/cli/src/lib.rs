//! Pipelines behind the `dmkrm` command-line tool. Each command resolves its
//! configuration, computes, and writes CSV/JSON/SVG artifacts plus a
//! `<command>.meta.json` sidecar holding the resolved configuration.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod selftest;
pub mod svg;

pub use commands::{run, RunReport};
pub use config::{parse_grid, Command, Format, Resolved, RunConfig, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dmkrm::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "pipeline",
            CliError::Io(_) => "io",
            CliError::Check(_) => "check",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self, command: Option<Command>) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind(),
            "command": command.map(Command::name),
            "message": self.to_string(),
        })
        .to_string()
    }
}
