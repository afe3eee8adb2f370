//! Pipeline errors and their machine-readable rendering.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Anything that can stop a subcommand. Every variant maps to a stable
/// `kind` string so scripts can branch on failures without parsing prose.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("failed to read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("refusing to overwrite existing artifact {path}")]
    ArtifactExists { path: PathBuf },
    #[error("command `{command}` already ran in this directory (manifest {path} exists)")]
    CommandAlreadyRan { command: String, path: PathBuf },
    #[error("invalid config {path}: {message}")]
    InvalidConfig { path: PathBuf, message: String },
    #[error("invalid JSON in {path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },
    #[error("invalid CSV in {path}: {message}")]
    MalformedCsv { path: PathBuf, message: String },
    #[error("{what} not found: expected {path} (run `{producer}` first or point the config at it)")]
    MissingArtifact { what: String, path: PathBuf, producer: String },
    #[error("no model selected: {0}")]
    NoModelSelected(String),
    #[error(transparent)]
    Panel(#[from] hivecast::PanelError),
    #[error(transparent)]
    Ingest(#[from] hivecast::ingest::IngestError),
    #[error(transparent)]
    Model(#[from] hivecast::models::ModelError),
    #[error(transparent)]
    Preprocess(#[from] hivecast::preprocess::PreprocessError),
    #[error(transparent)]
    Eval(#[from] hivecast::evaluate::EvalError),
    #[error(transparent)]
    Explain(#[from] hivecast::explain::ExplainError),
    #[error(transparent)]
    Synth(#[from] hivecast::synthgen::SynthError),
}

impl CliError {
    /// Stable identifier for scripting; one per failure family.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ReadFile { .. } => "read_file",
            CliError::WriteFile { .. } => "write_file",
            CliError::ArtifactExists { .. } => "artifact_exists",
            CliError::CommandAlreadyRan { .. } => "command_already_ran",
            CliError::InvalidConfig { .. } => "invalid_config",
            CliError::MalformedArtifact { .. } => "malformed_artifact",
            CliError::MalformedCsv { .. } => "malformed_csv",
            CliError::MissingArtifact { .. } => "missing_artifact",
            CliError::NoModelSelected(_) => "no_model_selected",
            CliError::Panel(_) => "panel",
            CliError::Ingest(_) => "ingest",
            CliError::Model(_) => "model",
            CliError::Preprocess(_) => "preprocess",
            CliError::Eval(_) => "evaluate",
            CliError::Explain(_) => "explain",
            CliError::Synth(_) => "synth",
        }
    }
}

/// The JSON document printed to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub error: ErrorBody<'a>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub kind: &'a str,
    pub message: String,
}

impl ErrorReport<'_> {
    pub fn from_error(err: &CliError) -> ErrorReport<'_> {
        ErrorReport { error: ErrorBody { kind: err.kind(), message: err.to_string() } }
    }
}
