//! Deterministic diagnostic engine over hierarchical dependency models.
//!
//! A model links one goal through functions and subfunctions down to
//! components and their success conditions, with an AND or OR gate between
//! each tier. Evidence about component states propagates upward as success
//! probabilities; path-sets explain downward what keeps a node working.
//!
//! The numeric core is generic over [`Probability`], so the same code runs
//! in `f32`, `f64` or exact rationals. The aliases below fix `f64`.

pub mod io;
pub mod model;
pub mod pathsets;
pub mod probability;
pub mod propagation;
pub mod query;
pub mod synth;

pub use io::{load_model, IoError, Issue, IssueCode, ValidationReport};
pub use model::{
    EdgeKind, ElementCounts, GateKind, GraphBuilder, ModelGraph, NodeId, NodeKind, Violation,
};
pub use pathsets::{generate_pathsets, minimize, PathSet, PathSetCollection, PathSetError};
pub use probability::Probability;
pub use propagation::{
    propagate, EvidenceDocument, EvidenceError, EvidenceSet, PropagationConfig, PropagationError,
};
pub use query::{DiagnosticRequest, QueryError, Session, Task};

pub type Prob = f64;
pub type Propagation = propagation::PropagationResult<Prob>;
pub type NodeOutcome = propagation::NodeResult<Prob>;
