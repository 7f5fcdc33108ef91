//! Diagnostic sessions: a loaded model bound to evidence and configuration,
//! answering upward, downward and explanatory requests.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{Edge, ModelGraph, NodeId, NodeKind};
use crate::pathsets::{
    generate_pathsets, minimize, PathSetCollection, PathSetError, DEFAULT_PATHSET_LIMIT,
};
use crate::propagation::{
    propagate, EvidenceDocument, EvidenceError, EvidenceSet, PropagationConfig, PropagationError,
    PropagationResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    UpwardReasoning,
    DownwardReasoning,
    Explanatory,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::UpwardReasoning => "upward_reasoning",
            Task::DownwardReasoning => "downward_reasoning",
            Task::Explanatory => "explanatory",
        }
    }
}

/// A classified diagnostic question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRequest {
    pub task: Task,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub kind: Option<NodeKind>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub limit: Option<usize>,
    /// Return raw, unminimized path-sets.
    #[serde(default)]
    pub raw: bool,
    #[serde(default)]
    pub depth: Option<usize>,
}

impl DiagnosticRequest {
    pub fn new(task: Task) -> Self {
        DiagnosticRequest {
            task,
            target: None,
            kind: None,
            threshold: None,
            limit: None,
            raw: false,
            depth: None,
        }
    }

    pub fn target(mut self, name: impl Into<String>) -> Self {
        self.target = Some(name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("no node named {0:?}")]
    NotFound(String),
    #[error("{name:?} names several nodes ({kinds:?}); add a kind")]
    AmbiguousName { name: String, kinds: Vec<NodeKind> },
    #[error("request task {found:?} does not match {expected:?}")]
    WrongTask { expected: Task, found: Task },
    #[error("a target is required")]
    MissingTarget,
    #[error("threshold {0} outside [0,1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("{source} (revision {revision})")]
    Propagation {
        source: PropagationError,
        revision: u64,
    },
    #[error(transparent)]
    PathSets(#[from] PathSetError),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::NotFound(_) => "NOT_FOUND",
            QueryError::AmbiguousName { .. } => "AMBIGUOUS_NAME",
            QueryError::WrongTask { .. } => "WRONG_TASK",
            QueryError::MissingTarget => "MISSING_TARGET",
            QueryError::InvalidThreshold(_) => "INVALID_THRESHOLD",
            QueryError::Evidence(e) => e.code(),
            QueryError::Propagation { source, .. } => source.code(),
            QueryError::PathSets(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphNode {
    pub name: String,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<crate::model::StateSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_success: Option<f64>,
    #[serde(skip)]
    pub id: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphEdge {
    pub source: String,
    pub kind: crate::model::EdgeKind,
    pub target: String,
    #[serde(skip)]
    pub edge: Edge,
}

/// A bounded fragment of the model around a target node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgraph {
    pub root: String,
    pub depth: usize,
    pub nodes: Vec<SubgraphNode>,
    pub edges: Vec<SubgraphEdge>,
}

/// Loaded model plus evidence and configuration. Every mutation bumps the
/// revision; reads never do.
#[derive(Debug, Clone)]
pub struct Session {
    model: Arc<ModelGraph>,
    evidence: EvidenceSet,
    config: PropagationConfig,
    pathset_limit: usize,
    revision: u64,
}

impl Session {
    pub fn new(model: ModelGraph) -> Self {
        Session::with_config(model, PropagationConfig::default(), DEFAULT_PATHSET_LIMIT)
    }

    pub fn with_config(model: ModelGraph, config: PropagationConfig, pathset_limit: usize) -> Self {
        Session {
            model: Arc::new(model),
            evidence: EvidenceSet::new(),
            config,
            pathset_limit,
            revision: 0,
        }
    }

    pub fn model(&self) -> &ModelGraph {
        &self.model
    }

    pub fn evidence(&self) -> &EvidenceSet {
        &self.evidence
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.config
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Replaces the model; evidence is reset since it is keyed to the old graph.
    pub fn reload(&mut self, model: ModelGraph) -> u64 {
        self.model = Arc::new(model);
        self.evidence = EvidenceSet::new();
        self.bump()
    }

    fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    /// Merges per-component distributions into the session evidence.
    pub fn set_evidence(&mut self, updates: &EvidenceDocument) -> Result<u64, QueryError> {
        let parsed = EvidenceSet::from_document(&self.model, updates)?;
        self.evidence.merge(parsed);
        Ok(self.bump())
    }

    pub fn clear_evidence(&mut self) -> u64 {
        self.evidence = EvidenceSet::new();
        self.bump()
    }

    pub fn set_config(&mut self, config: PropagationConfig) -> Result<u64, QueryError> {
        if !crate::model::is_probability(config.threshold) {
            return Err(QueryError::InvalidThreshold(config.threshold));
        }
        self.config = config;
        Ok(self.bump())
    }

    pub fn pathset_limit(&self) -> usize {
        self.pathset_limit
    }

    /// Resolves a user-facing name, using `kind` to disambiguate.
    pub fn resolve(&self, name: &str, kind: Option<NodeKind>) -> Result<NodeId, QueryError> {
        let mut hits = self.model.lookup(name);
        if let Some(kind) = kind {
            hits.retain(|id| self.model.kind(*id) == kind);
        }
        match hits.as_slice() {
            [] => Err(QueryError::NotFound(name.to_string())),
            [one] => Ok(*one),
            many => Err(QueryError::AmbiguousName {
                name: name.to_string(),
                kinds: many.iter().map(|id| self.model.kind(*id)).collect(),
            }),
        }
    }

    fn expect_task(request: &DiagnosticRequest, expected: Task) -> Result<(), QueryError> {
        if request.task != expected {
            return Err(QueryError::WrongTask {
                expected,
                found: request.task,
            });
        }
        Ok(())
    }

    /// Propagates the session evidence upward.
    pub fn run_upward(
        &self,
        request: &DiagnosticRequest,
    ) -> Result<PropagationResult<f64>, QueryError> {
        Self::expect_task(request, Task::UpwardReasoning)?;
        if let Some(target) = &request.target {
            self.resolve(target, request.kind)?;
        }
        let mut config = self.config;
        if let Some(t) = request.threshold {
            if !crate::model::is_probability(t) {
                return Err(QueryError::InvalidThreshold(t));
            }
            config.threshold = t;
        }
        propagate(&self.model, &self.evidence, &config).map_err(|source| QueryError::Propagation {
            source,
            revision: self.revision,
        })
    }

    /// Minimal (or raw) success path-sets of the target.
    pub fn run_downward(
        &self,
        request: &DiagnosticRequest,
    ) -> Result<PathSetCollection, QueryError> {
        Self::expect_task(request, Task::DownwardReasoning)?;
        let target = request.target.as_deref().ok_or(QueryError::MissingTarget)?;
        let node = self.resolve(target, request.kind)?;
        let raw = generate_pathsets(
            &self.model,
            node,
            request.limit.unwrap_or(self.pathset_limit),
        )?;
        Ok(if request.raw { raw } else { minimize(&raw) })
    }

    pub fn run_explanatory(&self, request: &DiagnosticRequest) -> Result<Subgraph, QueryError> {
        Self::expect_task(request, Task::Explanatory)?;
        let target = request.target.as_deref().ok_or(QueryError::MissingTarget)?;
        self.retrieve_subgraph_of(
            self.resolve(target, request.kind)?,
            request.depth.unwrap_or(1),
        )
    }

    pub fn retrieve_subgraph(&self, target: &str, depth: usize) -> Result<Subgraph, QueryError> {
        self.retrieve_subgraph_of(self.resolve(target, None)?, depth)
    }

    /// The target, its parent (one hop up, through the parent's gate) and
    /// everything up to `depth` non-gate tiers below it, gates included.
    pub fn retrieve_subgraph_of(&self, root: NodeId, depth: usize) -> Result<Subgraph, QueryError> {
        let g = &self.model;
        let mut included = vec![false; g.nodes().len()];
        included[root.index()] = true;
        if depth > 0 {
            for &gate in g.predecessors(root) {
                included[gate.index()] = true;
                for &parent in g.predecessors(gate) {
                    included[parent.index()] = true;
                }
            }
            let mut frontier = vec![root];
            for _ in 0..depth {
                let mut next = Vec::new();
                for id in frontier {
                    for &gate in g.successors(id) {
                        included[gate.index()] = true;
                        for &child in g.successors(gate) {
                            if !included[child.index()] {
                                included[child.index()] = true;
                                next.push(child);
                            }
                        }
                    }
                }
                frontier = next;
            }
        }

        let probabilities = propagate::<f64>(g, &self.evidence, &self.config).ok();
        let nodes = g
            .nodes()
            .iter()
            .filter(|n| included[n.id.index()])
            .map(|n| SubgraphNode {
                id: n.id,
                name: g.qualified_name(n.id),
                kind: n.kind,
                states: n.component.as_ref().map(|d| d.states.clone()),
                p_success: probabilities.as_ref().and_then(|r| r.p_success(n.id)),
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .filter(|e| included[e.source.index()] && included[e.target.index()])
            .map(|e| SubgraphEdge {
                source: g.qualified_name(e.source),
                kind: e.kind,
                target: g.qualified_name(e.target),
                edge: *e,
            })
            .collect();
        Ok(Subgraph {
            root: g.qualified_name(root),
            depth,
            nodes,
            edges,
        })
    }

    /// Response envelope for an explanatory request.
    pub fn explanatory_response(&self, request: &DiagnosticRequest) -> Result<Value, QueryError> {
        let sub = self.run_explanatory(request)?;
        Ok(json!({
            "task": Task::Explanatory.as_str(),
            "target": request.target,
            "revision": self.revision,
            "root": sub.root,
            "depth": sub.depth,
            "nodes": sub.nodes,
            "edges": sub.edges,
        }))
    }

    /// Response envelope for an upward request.
    pub fn upward_response(&self, request: &DiagnosticRequest) -> Result<Value, QueryError> {
        let result = self.run_upward(request)?;
        Ok(json!({
            "task": Task::UpwardReasoning.as_str(),
            "target": request.target,
            "revision": self.revision,
            "threshold": result.threshold,
            "result": result.to_json(),
            "warnings": result.warnings,
        }))
    }

    /// Response envelope for a downward request.
    pub fn downward_response(&self, request: &DiagnosticRequest) -> Result<Value, QueryError> {
        let sets = self.run_downward(request)?;
        let mut body = sets.to_json(&self.model);
        let obj = body.as_object_mut().expect("path-set payload is an object");
        let mut out = serde_json::Map::new();
        out.insert("task".into(), json!(Task::DownwardReasoning.as_str()));
        out.insert("target".into(), json!(request.target));
        out.insert("revision".into(), json!(self.revision));
        out.append(obj);
        Ok(Value::Object(out))
    }
}
