//! Model documents: strict parsing, structural validation, lowering to a
//! [`ModelGraph`](crate::model::ModelGraph), serialization and Cypher export.

mod cypher;
mod document;
mod lower;
mod serialize;
mod validate;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use cypher::{export_cypher, lint_cypher, LintIssue};
pub use document::{parse_model, Entry, HierarchicalModel, Link, ListKey, Relation};
pub use lower::to_graph;
pub use serialize::{serialize_graph, to_document_value};
pub use validate::{validate_structure, ValidationReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    Syntax,
    UnknownKey,
    TypeMismatch,
    InvalidGate,
    MissingField,
    EmptyName,
    GateMissing,
    LevelOrder,
    MisplacedField,
    EmptyChildren,
    DuplicateSibling,
    PriorSum,
    ProbabilityRange,
    DuplicateState,
    MissingStates,
    GivenStateIncomplete,
    GivenStateUnknown,
    NoSuccessModel,
    RefUnresolved,
    RefCycle,
    RefWithBody,
    ConflictingDefinition,
    NaDropped,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::Syntax => "SYNTAX",
            IssueCode::UnknownKey => "UNKNOWN_KEY",
            IssueCode::TypeMismatch => "TYPE_MISMATCH",
            IssueCode::InvalidGate => "INVALID_GATE",
            IssueCode::MissingField => "MISSING_FIELD",
            IssueCode::EmptyName => "EMPTY_NAME",
            IssueCode::GateMissing => "GATE_MISSING",
            IssueCode::LevelOrder => "LEVEL_ORDER",
            IssueCode::MisplacedField => "MISPLACED_FIELD",
            IssueCode::EmptyChildren => "EMPTY_CHILDREN",
            IssueCode::DuplicateSibling => "DUPLICATE_SIBLING",
            IssueCode::PriorSum => "PRIOR_SUM",
            IssueCode::ProbabilityRange => "PROBABILITY_RANGE",
            IssueCode::DuplicateState => "DUPLICATE_STATE",
            IssueCode::MissingStates => "MISSING_STATES",
            IssueCode::GivenStateIncomplete => "GIVEN_STATE_INCOMPLETE",
            IssueCode::GivenStateUnknown => "GIVEN_STATE_UNKNOWN",
            IssueCode::NoSuccessModel => "NO_SUCCESS_MODEL",
            IssueCode::RefUnresolved => "REF_UNRESOLVED",
            IssueCode::RefCycle => "REF_CYCLE",
            IssueCode::RefWithBody => "REF_WITH_BODY",
            IssueCode::ConflictingDefinition => "CONFLICTING_DEFINITION",
            IssueCode::NaDropped => "NA_DROPPED",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A problem located by a dotted path into the document, e.g.
/// `goal.achieved_by.functions[2].depends_on`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Issue {
            code,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.code, self.message)
        } else {
            write!(f, "{} at {}: {}", self.code, self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub issue: Issue,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{} (line {l}, column {c})", self.issue),
            _ => write!(f, "{}", self.issue),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("model failed validation with {} issue(s)", .0.issues.len())]
    Invalid(ValidationReport),
    #[error("graph has no unique goal")]
    NoGoal,
}

/// Parses, validates and lowers a document in one step.
pub fn load_model(text: &str) -> Result<crate::model::ModelGraph, IoError> {
    let model = parse_model(text)?;
    to_graph(&model)
}
