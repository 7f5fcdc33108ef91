//! Command-line and HTTP front ends over a [`dml_core::Session`].
//!
//! Both front ends build their JSON payloads through the functions in this
//! module, so identical inputs give byte-identical output.

pub mod cli;
pub mod config;
pub mod service;

use dml_core::io::{parse_model, validate_structure, IoError, ValidationReport, Verdict};
use dml_core::query::{DiagnosticRequest, QueryError, Session, Task};
use dml_core::{load_model, EvidenceDocument, ModelGraph};
use serde::Serialize;
use thiserror::Error;

/// Pretty JSON followed by a newline.
pub fn render<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("payloads serialize");
    out.push('\n');
    out
}

/// Uniform error body: `{code, message, path?}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("request body is not valid JSON: {0}")]
    Body(String),
    #[error(transparent)]
    Model(#[from] IoError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("no model is loaded")]
    NoModel,
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl EngineError {
    pub fn body(&self) -> ErrorBody {
        let (code, path) = match self {
            EngineError::Io { path, .. } => ("IO_ERROR".to_string(), Some(path.clone())),
            EngineError::Body(_) => ("SYNTAX".to_string(), None),
            EngineError::Model(IoError::Parse(e)) => (
                e.issue.code.as_str().to_string(),
                Some(e.issue.path.clone()),
            ),
            EngineError::Model(IoError::Invalid(report)) => match report.issues.first() {
                Some(issue) => (issue.code.as_str().to_string(), Some(issue.path.clone())),
                None => ("VALIDATION_FAILED".to_string(), None),
            },
            EngineError::Model(IoError::NoGoal) => ("MISSING_GOAL".to_string(), None),
            EngineError::Query(e) => (e.code().to_string(), None),
            EngineError::NoModel => ("NO_MODEL".to_string(), None),
            EngineError::Config(_) => ("INVALID_CONFIG".to_string(), None),
        };
        ErrorBody {
            code,
            path,
            message: self.to_string(),
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Io { .. } | EngineError::Body(_) | EngineError::Config(_) => 1,
            EngineError::Model(IoError::Parse(_)) => 1,
            EngineError::Model(_) => 2,
            EngineError::Query(_) | EngineError::NoModel => 3,
        }
    }

    /// The validation report behind a model error, parse failures included.
    pub fn report(&self) -> Option<ValidationReport> {
        match self {
            EngineError::Model(IoError::Invalid(report)) => Some(report.clone()),
            EngineError::Model(IoError::Parse(e)) => Some(ValidationReport {
                verdict: Verdict::Fail,
                issues: vec![e.issue.clone()],
                warnings: Vec::new(),
            }),
            _ => None,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, EngineError> {
    std::fs::read_to_string(path).map_err(|e| EngineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Validation report for a document; parse failures are errors.
pub fn validate_text(text: &str) -> Result<ValidationReport, EngineError> {
    let model = parse_model(text).map_err(IoError::from)?;
    Ok(validate_structure(&model))
}

pub fn load_text(text: &str) -> Result<ModelGraph, EngineError> {
    Ok(load_model(text)?)
}

pub fn parse_evidence(text: &str) -> Result<EvidenceDocument, EngineError> {
    serde_json::from_str(text).map_err(|e| EngineError::Body(e.to_string()))
}

/// Body of `POST /propagate` and output of `up`.
pub fn upward_payload(session: &Session, threshold: Option<f64>) -> Result<String, EngineError> {
    let mut request = DiagnosticRequest::new(Task::UpwardReasoning);
    request.threshold = threshold;
    Ok(render(&session.upward_response(&request)?))
}

/// Body of `POST /pathsets` and output of `down`.
pub fn downward_payload(
    session: &Session,
    target: &str,
    raw: bool,
    limit: Option<usize>,
) -> Result<String, EngineError> {
    let mut request = DiagnosticRequest::new(Task::DownwardReasoning).target(target);
    request.raw = raw;
    request.limit = limit;
    Ok(render(&session.downward_response(&request)?))
}
