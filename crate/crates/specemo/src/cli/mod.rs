//! Command-line layer: experiment configs, the content-digest
//! extraction cache, and the subcommand implementations. Exit codes:
//! 0 success, 1 usage or config error, 2 partial data failure,
//! 3 internal error.

mod cache;
mod commands;
mod config;

pub use cache::{ExtractCache, CACHE_ENV};
pub use commands::{
    cmd_cross, cmd_eval, cmd_extract, cmd_report, cmd_synth, cmd_train, ExtractSummary,
    RunArtifacts,
};
pub use config::{DatasetConfig, EvalConfig, ExperimentConfig, SCHEMA_VERSION};

use crate::audio::AudioError;
use crate::eval::EvalError;
use crate::heads::HeadError;
use crate::nncore::ContainerError;
use crate::raster::RasterError;
use crate::spectro::SpectroError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {key}: {detail}")]
    Config { key: String, detail: String },
    #[error("no report.json under {}", .0.display())]
    MissingReport(PathBuf),
    #[error("config digest mismatch: artifacts carry {found}, config hashes to {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Head(#[from] HeadError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Spectro(#[from] SpectroError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Exit code the binary reports for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. }
            | CliError::MissingReport(_)
            | CliError::DigestMismatch { .. } => 1,
            _ => 3,
        }
    }
}
