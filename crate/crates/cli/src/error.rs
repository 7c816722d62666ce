use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] qfill_core::data::DataError),
    #[error(transparent)]
    Synth(#[from] qfill_core::synth::SynthError),
    #[error(transparent)]
    Preprocess(#[from] qfill_core::preprocess::PreprocessError),
    #[error(transparent)]
    Pqfm(#[from] qfill_core::pqfm::PqfmError),
    #[error(transparent)]
    Cqem(#[from] qfill_core::cqem::CqemError),
    #[error(transparent)]
    Backtest(#[from] qfill_core::backtest::BacktestError),
    #[error("input {role} changed since the manifest was written: {path}")]
    InputChanged { role: String, path: PathBuf },
    #[error("output digests differ for: {}", .0.join(", "))]
    DigestMismatch(Vec<String>),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::ConfigParse { .. } => "ConfigParse",
            CliError::Io { .. } => "Io",
            CliError::Data(_) => "Data",
            CliError::Synth(_) => "Synth",
            CliError::Preprocess(_) => "Preprocess",
            CliError::Pqfm(_) => "Pqfm",
            CliError::Cqem(_) => "Cqem",
            CliError::Backtest(_) => "Backtest",
            CliError::InputChanged { .. } => "InputChanged",
            CliError::DigestMismatch(_) => "DigestMismatch",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::ConfigParse { .. } => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}
