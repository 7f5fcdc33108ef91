//! Success path-sets: sets of leaves whose joint success is sufficient for a
//! node's success.
//!
//! Generation descends from the target. A component contributes one set of
//! all its conditions under AND, or one singleton per condition under OR; a
//! component without conditions contributes itself. Above components, AND
//! takes the Cartesian product of the children's collections (unioning each
//! combination) and OR concatenates them. The raw result may contain
//! duplicates and supersets; [`minimize`] removes them by absorption.

use std::collections::BTreeSet;

use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{GateKind, GraphError, ModelGraph, NodeId, NodeKind};

pub const DEFAULT_PATHSET_LIMIT: usize = 10_000;

pub type PathSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathSetError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("{node} is a {kind} and has no path-sets of its own")]
    NotExpandable { node: NodeId, kind: NodeKind },
    #[error("path-set count {reached} exceeds the limit of {limit}")]
    Explosion { limit: usize, reached: u128 },
    #[error("limit must be positive")]
    ZeroLimit,
}

impl PathSetError {
    pub fn code(&self) -> &'static str {
        match self {
            PathSetError::UnknownNode(_) => "NOT_FOUND",
            PathSetError::NotExpandable { .. } => "LEAF_TARGET",
            PathSetError::Explosion { .. } => "PATHSET_EXPLOSION",
            PathSetError::ZeroLimit => "INVALID_LIMIT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSetCollection {
    pub source: NodeId,
    pub sets: Vec<PathSet>,
    pub minimized: bool,
}

impl PathSetCollection {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Wire form with `component/condition` qualified leaf names.
    pub fn to_json(&self, graph: &ModelGraph) -> Value {
        let sets: Vec<Vec<String>> = self
            .sets
            .iter()
            .map(|s| s.iter().map(|id| graph.qualified_name(*id)).collect())
            .collect();
        json!({
            "source": graph.qualified_name(self.source),
            "minimized": self.minimized,
            "count": self.sets.len(),
            "truncated": false,
            "pathsets": sets,
        })
    }
}

/// Raw path-sets of `node`, in generation order.
pub fn generate_pathsets(
    graph: &ModelGraph,
    node: NodeId,
    limit: usize,
) -> Result<PathSetCollection, PathSetError> {
    if limit == 0 {
        return Err(PathSetError::ZeroLimit);
    }
    let kind = graph
        .node(node)
        .map_err(|_| PathSetError::UnknownNode(node))?
        .kind;
    if kind.is_gate() || kind == NodeKind::SuccessCondition {
        return Err(PathSetError::NotExpandable { node, kind });
    }
    let sets = expand(graph, node, limit)?;
    Ok(PathSetCollection {
        source: node,
        sets,
        minimized: false,
    })
}

fn expand(graph: &ModelGraph, node: NodeId, limit: usize) -> Result<Vec<PathSet>, PathSetError> {
    let children = graph.children_of(node).map_err(|e| match e {
        GraphError::LeafQueried(n) => PathSetError::NotExpandable {
            node: n,
            kind: NodeKind::SuccessCondition,
        },
        _ => PathSetError::UnknownNode(node),
    })?;
    let Some((_, gate)) = children.gate.filter(|_| !children.nodes.is_empty()) else {
        return Ok(vec![PathSet::from([node])]);
    };

    if graph.kind(node) == NodeKind::Component {
        let conditions = children.nodes;
        return Ok(match gate {
            GateKind::And => vec![conditions.into_iter().collect()],
            GateKind::Or => conditions.into_iter().map(|c| PathSet::from([c])).collect(),
        });
    }

    let child_sets = children
        .nodes
        .iter()
        .map(|c| expand(graph, *c, limit))
        .collect::<Result<Vec<_>, _>>()?;

    match gate {
        GateKind::Or => {
            let total: u128 = child_sets.iter().map(|s| s.len() as u128).sum();
            check_limit(total, limit)?;
            Ok(child_sets.into_iter().flatten().collect())
        }
        GateKind::And => {
            let total = child_sets
                .iter()
                .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
                .unwrap_or(u128::MAX);
            check_limit(total, limit)?;
            let mut combined = vec![PathSet::new()];
            for sets in &child_sets {
                combined = combined
                    .iter()
                    .flat_map(|prefix| sets.iter().map(move |s| prefix.union(s).copied().collect()))
                    .collect();
            }
            Ok(combined)
        }
    }
}

fn check_limit(count: u128, limit: usize) -> Result<(), PathSetError> {
    if count > limit as u128 {
        Err(PathSetError::Explosion {
            limit,
            reached: count,
        })
    } else {
        Ok(())
    }
}

/// Removes duplicates and proper supersets; orders by size, then by the
/// sorted leaf ids.
pub fn minimize(collection: &PathSetCollection) -> PathSetCollection {
    let mut sets: Vec<PathSet> = collection.sets.clone();
    sets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    sets.dedup();
    let mut kept: Vec<PathSet> = Vec::with_capacity(sets.len());
    for set in sets {
        if !kept.iter().any(|k| k.is_subset(&set)) {
            kept.push(set);
        }
    }
    PathSetCollection {
        source: collection.source,
        sets: kept,
        minimized: true,
    }
}
