//! Typed graph representation of a master logic hierarchy.
//!
//! A [`ModelGraph`] holds five tiers of named nodes (goal, functions,
//! subfunctions, components, success conditions) with an AND/OR gate node
//! interposed between every parent and its children. Graphs are assembled
//! through [`GraphBuilder`], which performs no validation;
//! [`ModelGraph::check_invariants`] reports every structural rule that does
//! not hold.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance applied when checking that a distribution sums to one.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[cfg(test)]
    pub(crate) fn raw(index: u32) -> Self {
        NodeId(index)
    }

    fn from_index(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("graph exceeds u32 node ids"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Goal,
    Function,
    Subfunction,
    Component,
    SuccessCondition,
    AndGate,
    OrGate,
}

impl NodeKind {
    pub const ALL: [NodeKind; 7] = [
        NodeKind::Goal,
        NodeKind::Function,
        NodeKind::Subfunction,
        NodeKind::Component,
        NodeKind::SuccessCondition,
        NodeKind::AndGate,
        NodeKind::OrGate,
    ];

    pub fn is_gate(self) -> bool {
        matches!(self, NodeKind::AndGate | NodeKind::OrGate)
    }

    /// Depth of the tier below the goal; `None` for gates.
    pub fn tier(self) -> Option<u8> {
        match self {
            NodeKind::Goal => Some(0),
            NodeKind::Function => Some(1),
            NodeKind::Subfunction => Some(2),
            NodeKind::Component => Some(3),
            NodeKind::SuccessCondition => Some(4),
            NodeKind::AndGate | NodeKind::OrGate => None,
        }
    }

    pub fn gate_kind(self) -> Option<GateKind> {
        match self {
            NodeKind::AndGate => Some(GateKind::And),
            NodeKind::OrGate => Some(GateKind::Or),
            _ => None,
        }
    }

    /// Label used in Cypher export.
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Goal => "Goal",
            NodeKind::Function => "Function",
            NodeKind::Subfunction => "Subfunction",
            NodeKind::Component => "Component",
            NodeKind::SuccessCondition => "SuccessCondition",
            NodeKind::AndGate => "AND_gate",
            NodeKind::OrGate => "OR_gate",
        }
    }

    /// Lower-case name used in JSON payloads.
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Goal => "goal",
            NodeKind::Function => "function",
            NodeKind::Subfunction => "subfunction",
            NodeKind::Component => "component",
            NodeKind::SuccessCondition => "success_condition",
            NodeKind::AndGate => "and_gate",
            NodeKind::OrGate => "or_gate",
        }
    }

    pub fn parse(text: &str) -> Option<NodeKind> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == text || k.label() == text)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
}

impl GateKind {
    pub fn node_kind(self) -> NodeKind {
        match self {
            GateKind::And => NodeKind::AndGate,
            GateKind::Or => NodeKind::OrGate,
        }
    }

    /// Gate label as written in model documents.
    pub fn document_label(self) -> &'static str {
        match self {
            GateKind::And => "AND_gate",
            GateKind::Or => "OR_gate",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    AchievedBy,
    DependsOn,
    Requires,
    SuccessThrough,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [
        EdgeKind::AchievedBy,
        EdgeKind::DependsOn,
        EdgeKind::Requires,
        EdgeKind::SuccessThrough,
    ];

    /// Relationship type used in Cypher export.
    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::AchievedBy => "ACHIEVED_BY",
            EdgeKind::DependsOn => "DEPENDS_ON",
            EdgeKind::Requires => "REQUIRES",
            EdgeKind::SuccessThrough => "SUCCESS_THROUGH",
        }
    }

    /// Whether an edge of this kind may connect `source` to `target`.
    pub fn permits(self, source: NodeKind, target: NodeKind) -> bool {
        use NodeKind::*;
        let gate = |k: NodeKind| k.is_gate();
        match self {
            EdgeKind::AchievedBy => source == Goal && gate(target),
            EdgeKind::DependsOn => {
                (gate(source) && target == Function) || (source == Function && gate(target))
            }
            EdgeKind::Requires => {
                (gate(source) && matches!(target, Subfunction | Component))
                    || (source == Subfunction && gate(target))
            }
            EdgeKind::SuccessThrough => {
                (source == Component && gate(target))
                    || (gate(source) && target == SuccessCondition)
            }
        }
    }

    /// Edge kind linking a non-gate parent to its gate.
    pub fn into_gate(parent: NodeKind) -> Option<EdgeKind> {
        match parent {
            NodeKind::Goal => Some(EdgeKind::AchievedBy),
            NodeKind::Function => Some(EdgeKind::DependsOn),
            NodeKind::Subfunction => Some(EdgeKind::Requires),
            NodeKind::Component => Some(EdgeKind::SuccessThrough),
            _ => None,
        }
    }

    /// Edge kind linking a gate to a child of the given kind.
    pub fn out_of_gate(child: NodeKind) -> Option<EdgeKind> {
        match child {
            NodeKind::Function => Some(EdgeKind::DependsOn),
            NodeKind::Subfunction | NodeKind::Component => Some(EdgeKind::Requires),
            NodeKind::SuccessCondition => Some(EdgeKind::SuccessThrough),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    pub prior: f64,
}

/// Per-component state model: prior distribution over operational states and
/// the likelihood of each success condition in each state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentData {
    pub states: Vec<StateSpec>,
    /// Success condition -> P(condition | state), aligned with `states`.
    pub condition_matrix: BTreeMap<NodeId, Vec<f64>>,
    pub direct_p_success: Option<f64>,
}

impl ComponentData {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn priors(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.prior).collect()
    }

    /// Problems with the state model itself, independent of graph shape.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push("component declares no states".to_string());
        }
        let mut seen = HashSet::new();
        for s in &self.states {
            if !seen.insert(s.name.as_str()) {
                out.push(format!("duplicate state {:?}", s.name));
            }
            if !is_probability(s.prior) {
                out.push(format!("prior of {:?} outside [0,1]", s.name));
            }
        }
        if !self.states.is_empty() {
            let sum: f64 = self.states.iter().map(|s| s.prior).sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                out.push(format!("priors sum to {sum}, expected 1"));
            }
        }
        for (cond, row) in &self.condition_matrix {
            if row.len() != self.states.len() {
                out.push(format!(
                    "likelihood row for {cond} has {} entries, expected {}",
                    row.len(),
                    self.states.len()
                ));
            }
            if row.iter().any(|p| !is_probability(*p)) {
                out.push(format!(
                    "likelihood row for {cond} has entries outside [0,1]"
                ));
            }
        }
        if let Some(p) = self.direct_p_success {
            if !is_probability(p) {
                out.push("direct_p_success outside [0,1]".to_string());
            }
        }
        out
    }
}

pub(crate) fn is_probability(p: f64) -> bool {
    p.is_finite() && (0.0..=1.0).contains(&p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Empty for gates.
    pub name: String,
    /// Owning component, for success conditions.
    pub owner: Option<NodeId>,
    pub component: Option<ComponentData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub source: NodeId,
    pub kind: EdgeKind,
    pub target: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum NodeKey {
    Named(NodeKind, String),
    Condition(NodeId, String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("{0} is a success condition and has no children")]
    LeafQueried(NodeId),
    #[error("{kind} nodes cannot be created with this call")]
    WrongKind { kind: NodeKind },
    #[error("node names must be non-empty")]
    EmptyName,
    #[error("{0} is not a component")]
    NotAComponent(NodeId),
}

/// The gate below a node together with the gate's children.
#[derive(Debug, Clone, PartialEq)]
pub struct Children {
    pub gate: Option<(NodeId, GateKind)>,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ElementCounts {
    pub goals: usize,
    pub functions: usize,
    pub subfunctions: usize,
    pub components: usize,
    pub gates: usize,
    pub success_conditions: usize,
}

impl ElementCounts {
    pub fn total(&self) -> usize {
        self.goals
            + self.functions
            + self.subfunctions
            + self.components
            + self.gates
            + self.success_conditions
    }
}

/// A structural rule that the graph breaks.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule")]
pub enum Violation {
    MissingGoal,
    MultipleGoals {
        goals: Vec<NodeId>,
    },
    CycleDetected {
        nodes: Vec<NodeId>,
    },
    DuplicateEdge {
        edge: Edge,
    },
    EdgeTyping {
        edge: Edge,
    },
    GateMissing {
        edge: Edge,
    },
    LevelSkip {
        parent: NodeId,
        gate: NodeId,
        child: NodeId,
    },
    GateParents {
        gate: NodeId,
        count: usize,
    },
    GateWithoutChildren {
        gate: NodeId,
    },
    MultipleGates {
        node: NodeId,
        gates: Vec<NodeId>,
    },
    IncompleteBranch {
        node: NodeId,
    },
    Unreachable {
        node: NodeId,
    },
    MissingComponentData {
        node: NodeId,
    },
    InvalidComponentData {
        node: NodeId,
        reason: String,
    },
    ConditionOwner {
        condition: NodeId,
        component: NodeId,
    },
    ConditionMatrixMismatch {
        component: NodeId,
        condition: NodeId,
    },
}

impl Violation {
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::MissingGoal => "MissingGoal",
            Violation::MultipleGoals { .. } => "MultipleGoals",
            Violation::CycleDetected { .. } => "CycleDetected",
            Violation::DuplicateEdge { .. } => "DuplicateEdge",
            Violation::EdgeTyping { .. } => "EdgeTyping",
            Violation::GateMissing { .. } => "GateMissing",
            Violation::LevelSkip { .. } => "LevelSkip",
            Violation::GateParents { .. } => "GateParents",
            Violation::GateWithoutChildren { .. } => "GateWithoutChildren",
            Violation::MultipleGates { .. } => "MultipleGates",
            Violation::IncompleteBranch { .. } => "IncompleteBranch",
            Violation::Unreachable { .. } => "Unreachable",
            Violation::MissingComponentData { .. } => "MissingComponentData",
            Violation::InvalidComponentData { .. } => "InvalidComponentData",
            Violation::ConditionOwner { .. } => "ConditionOwner",
            Violation::ConditionMatrixMismatch { .. } => "ConditionMatrixMismatch",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            self.rule(),
            serde_json::to_string(self).unwrap_or_default()
        )
    }
}

/// Immutable typed DAG of a master logic model.
///
/// Equality is structural: two graphs are equal when their node and edge
/// sequences are equal, which holds for identical construction sequences.
#[derive(Debug, Clone, Default)]
pub struct ModelGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    index: HashMap<NodeKey, NodeId>,
}

impl PartialEq for ModelGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl ModelGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes
            .get(id.index())
            .ok_or(GraphError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.index()].kind
    }

    /// Direct successors in insertion order.
    pub fn successors(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.index()]
    }

    /// Direct predecessors in insertion order.
    pub fn predecessors(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.index()]
    }

    /// The unique goal, if the graph has exactly one.
    pub fn goal(&self) -> Option<NodeId> {
        let mut goals = self.nodes.iter().filter(|n| n.kind == NodeKind::Goal);
        match (goals.next(), goals.next()) {
            (Some(g), None) => Some(g.id),
            _ => None,
        }
    }

    pub fn find(&self, kind: NodeKind, name: &str) -> Option<NodeId> {
        self.index
            .get(&NodeKey::Named(kind, name.to_string()))
            .copied()
    }

    pub fn find_condition(&self, component: NodeId, name: &str) -> Option<NodeId> {
        self.index
            .get(&NodeKey::Condition(component, name.to_string()))
            .copied()
    }

    /// All non-gate nodes whose display or qualified name equals `name`.
    pub fn lookup(&self, name: &str) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| !n.kind.is_gate())
            .filter(|n| n.name == name || self.qualified_name(n.id) == name)
            .map(|n| n.id)
            .collect()
    }

    /// User-facing name: success conditions are qualified as
    /// `component/condition`, gates are named `<parent>_<AND|OR>`.
    pub fn qualified_name(&self, id: NodeId) -> String {
        let node = &self.nodes[id.index()];
        match node.kind {
            NodeKind::SuccessCondition => match node.owner {
                Some(owner) => format!("{}/{}", self.nodes[owner.index()].name, node.name),
                None => node.name.clone(),
            },
            NodeKind::AndGate | NodeKind::OrGate => {
                let parent = self.parents[id.index()]
                    .first()
                    .map(|p| self.nodes[p.index()].name.as_str())
                    .unwrap_or("orphan");
                let gate = node
                    .kind
                    .gate_kind()
                    .map(GateKind::short)
                    .unwrap_or_default();
                format!("{parent}_{gate}")
            }
            _ => node.name.clone(),
        }
    }

    /// Gate nodes directly below `id`.
    fn gates_below(&self, id: NodeId) -> Vec<NodeId> {
        self.children[id.index()]
            .iter()
            .copied()
            .filter(|c| self.kind(*c).is_gate())
            .collect()
    }

    /// The gate interposed below `node` and that gate's children.
    pub fn children_of(&self, node: NodeId) -> Result<Children, GraphError> {
        let n = self.node(node)?;
        if n.kind == NodeKind::SuccessCondition {
            return Err(GraphError::LeafQueried(node));
        }
        if n.kind.is_gate() {
            return Ok(Children {
                gate: n.kind.gate_kind().map(|g| (node, g)),
                nodes: self.children[node.index()].clone(),
            });
        }
        match self.gates_below(node).first() {
            Some(&gate) => Ok(Children {
                gate: self.kind(gate).gate_kind().map(|g| (gate, g)),
                nodes: self.children[gate.index()].clone(),
            }),
            None => Ok(Children {
                gate: None,
                nodes: Vec::new(),
            }),
        }
    }

    /// Success conditions of a component, in insertion order.
    pub fn conditions_of(&self, component: NodeId) -> Vec<NodeId> {
        match self.children_of(component) {
            Ok(children) => children
                .nodes
                .into_iter()
                .filter(|c| self.kind(*c) == NodeKind::SuccessCondition)
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn count_elements(&self) -> ElementCounts {
        let mut counts = ElementCounts::default();
        for node in &self.nodes {
            match node.kind {
                NodeKind::Goal => counts.goals += 1,
                NodeKind::Function => counts.functions += 1,
                NodeKind::Subfunction => counts.subfunctions += 1,
                NodeKind::Component => counts.components += 1,
                NodeKind::SuccessCondition => counts.success_conditions += 1,
                NodeKind::AndGate | NodeKind::OrGate => counts.gates += 1,
            }
        }
        counts
    }

    /// Leaves reachable from the goal: success conditions, and components
    /// without conditions. Ordered by node id.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| self.is_leaf(n.id))
            .map(|n| n.id)
            .collect()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        match self.kind(id) {
            NodeKind::SuccessCondition => true,
            NodeKind::Component => self.gates_below(id).is_empty(),
            _ => false,
        }
    }

    /// Nodes reachable from `root` (inclusive), including gates.
    pub fn descendants(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([root]);
        seen[root.index()] = true;
        while let Some(id) = queue.pop_front() {
            out.push(id);
            for &c in &self.children[id.index()] {
                if !seen[c.index()] {
                    seen[c.index()] = true;
                    queue.push_back(c);
                }
            }
        }
        out.sort();
        out
    }

    /// Children-before-parents order over every node reachable from `root`,
    /// visiting children in insertion order. Nodes on a cycle are visited once.
    pub fn post_order(&self, root: NodeId) -> Vec<NodeId> {
        let mut visited = vec![false; self.nodes.len()];
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(root, 0usize)];
        visited[root.index()] = true;
        while let Some((id, next)) = stack.pop() {
            let kids = &self.children[id.index()];
            if next < kids.len() {
                stack.push((id, next + 1));
                let c = kids[next];
                if !visited[c.index()] {
                    visited[c.index()] = true;
                    stack.push((c, 0));
                }
            } else {
                out.push(id);
            }
        }
        out
    }

    /// Non-gate nodes with more than one parent gate.
    pub fn shared_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| !n.kind.is_gate() && self.parents[n.id.index()].len() > 1)
            .map(|n| n.id)
            .collect()
    }

    /// Every structural rule the graph breaks; empty for a valid graph.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let goals: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Goal)
            .map(|n| n.id)
            .collect();
        match goals.len() {
            0 => out.push(Violation::MissingGoal),
            1 => {}
            _ => out.push(Violation::MultipleGoals {
                goals: goals.clone(),
            }),
        }

        out.extend(self.edge_violations());

        if let Some(cycle) = self.find_cycle() {
            out.push(Violation::CycleDetected { nodes: cycle });
        }

        for node in &self.nodes {
            let id = node.id;
            if node.kind.is_gate() {
                let parents = self.parents[id.index()].len();
                if parents != 1 {
                    out.push(Violation::GateParents {
                        gate: id,
                        count: parents,
                    });
                }
                if self.children[id.index()].is_empty() {
                    out.push(Violation::GateWithoutChildren { gate: id });
                }
                continue;
            }
            let gates = self.gates_below(id);
            if gates.len() > 1 {
                out.push(Violation::MultipleGates {
                    node: id,
                    gates: gates.clone(),
                });
            }
            if gates.is_empty() && matches!(node.kind, NodeKind::Function | NodeKind::Subfunction) {
                out.push(Violation::IncompleteBranch { node: id });
            }
            for &gate in &gates {
                for &child in &self.children[gate.index()] {
                    let (Some(pt), Some(ct)) = (node.kind.tier(), self.kind(child).tier()) else {
                        continue;
                    };
                    if ct != pt + 1 {
                        out.push(Violation::LevelSkip {
                            parent: id,
                            gate,
                            child,
                        });
                    }
                }
            }
            if node.kind == NodeKind::Component {
                out.extend(self.component_violations(id));
            }
        }

        if let [goal] = goals.as_slice() {
            let reachable: HashSet<NodeId> = self.descendants(*goal).into_iter().collect();
            for node in &self.nodes {
                if !node.kind.is_gate()
                    && node.kind != NodeKind::Goal
                    && !reachable.contains(&node.id)
                {
                    out.push(Violation::Unreachable { node: node.id });
                }
            }
        }
        out
    }

    fn edge_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for edge in &self.edges {
            if !seen.insert(*edge) {
                out.push(Violation::DuplicateEdge { edge: *edge });
                continue;
            }
            let (s, t) = (self.kind(edge.source), self.kind(edge.target));
            if !s.is_gate() && !t.is_gate() {
                out.push(Violation::GateMissing { edge: *edge });
            } else if !edge.kind.permits(s, t) {
                out.push(Violation::EdgeTyping { edge: *edge });
            }
        }
        out
    }

    fn component_violations(&self, id: NodeId) -> Vec<Violation> {
        let node = &self.nodes[id.index()];
        let Some(data) = &node.component else {
            return vec![Violation::MissingComponentData { node: id }];
        };
        let mut out: Vec<Violation> = data
            .problems()
            .into_iter()
            .map(|reason| Violation::InvalidComponentData { node: id, reason })
            .collect();
        let conditions = self.conditions_of(id);
        for &c in &conditions {
            if self.nodes[c.index()].owner != Some(id) {
                out.push(Violation::ConditionOwner {
                    condition: c,
                    component: id,
                });
            }
            if !data.condition_matrix.contains_key(&c) {
                out.push(Violation::ConditionMatrixMismatch {
                    component: id,
                    condition: c,
                });
            }
        }
        for &c in data.condition_matrix.keys() {
            if !conditions.contains(&c) {
                out.push(Violation::ConditionMatrixMismatch {
                    component: id,
                    condition: c,
                });
            }
        }
        out
    }

    fn find_cycle(&self) -> Option<Vec<NodeId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark = vec![Mark::New; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if mark[start] != Mark::New {
                continue;
            }
            let mut path: Vec<(NodeId, usize)> = vec![(NodeId::from_index(start), 0)];
            mark[start] = Mark::Active;
            while let Some(&mut (id, ref mut next)) = path.last_mut() {
                let kids = &self.children[id.index()];
                if *next < kids.len() {
                    let c = kids[*next];
                    *next += 1;
                    match mark[c.index()] {
                        Mark::New => {
                            mark[c.index()] = Mark::Active;
                            path.push((c, 0));
                        }
                        Mark::Active => {
                            let from = path.iter().position(|(n, _)| *n == c).unwrap_or(0);
                            return Some(path[from..].iter().map(|(n, _)| *n).collect());
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[id.index()] = Mark::Done;
                    path.pop();
                }
            }
        }
        None
    }
}

/// Incremental, unchecked construction of a [`ModelGraph`].
///
/// Adding a named node whose (kind, name) already exists returns the existing
/// id. Success conditions are keyed by their owning component.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    graph: ModelGraph,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reopens a built graph for further edits.
    pub fn from_graph(graph: ModelGraph) -> Self {
        GraphBuilder { graph }
    }

    fn push(&mut self, kind: NodeKind, name: String, owner: Option<NodeId>) -> NodeId {
        let id = NodeId::from_index(self.graph.nodes.len());
        self.graph.nodes.push(Node {
            id,
            kind,
            name,
            owner,
            component: (kind == NodeKind::Component).then(ComponentData::default),
        });
        self.graph.children.push(Vec::new());
        self.graph.parents.push(Vec::new());
        id
    }

    /// Adds (or re-references) a goal, function, subfunction or component.
    pub fn node(&mut self, kind: NodeKind, name: &str) -> Result<NodeId, GraphError> {
        if kind.is_gate() || kind == NodeKind::SuccessCondition {
            return Err(GraphError::WrongKind { kind });
        }
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let key = NodeKey::Named(kind, name.to_string());
        if let Some(&id) = self.graph.index.get(&key) {
            return Ok(id);
        }
        let id = self.push(kind, name.to_string(), None);
        self.graph.index.insert(key, id);
        Ok(id)
    }

    /// Adds (or re-references) a success condition owned by `component`.
    pub fn condition(&mut self, component: NodeId, name: &str) -> Result<NodeId, GraphError> {
        if self.graph.node(component)?.kind != NodeKind::Component {
            return Err(GraphError::NotAComponent(component));
        }
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let key = NodeKey::Condition(component, name.to_string());
        if let Some(&id) = self.graph.index.get(&key) {
            return Ok(id);
        }
        let id = self.push(
            NodeKind::SuccessCondition,
            name.to_string(),
            Some(component),
        );
        self.graph.index.insert(key, id);
        Ok(id)
    }

    /// Adds a fresh, unnamed gate node.
    pub fn gate(&mut self, kind: GateKind) -> NodeId {
        self.push(kind.node_kind(), String::new(), None)
    }

    pub fn edge(
        &mut self,
        source: NodeId,
        kind: EdgeKind,
        target: NodeId,
    ) -> Result<(), GraphError> {
        self.graph.node(source)?;
        self.graph.node(target)?;
        self.graph.edges.push(Edge {
            source,
            kind,
            target,
        });
        self.graph.children[source.index()].push(target);
        self.graph.parents[target.index()].push(source);
        Ok(())
    }

    /// Adds a gate under `parent` with correctly typed edges to each child.
    pub fn gate_over(
        &mut self,
        parent: NodeId,
        kind: GateKind,
        children: &[NodeId],
    ) -> Result<NodeId, GraphError> {
        let parent_kind = self.graph.node(parent)?.kind;
        let gate = self.gate(kind);
        let into =
            EdgeKind::into_gate(parent_kind).ok_or(GraphError::WrongKind { kind: parent_kind })?;
        self.edge(parent, into, gate)?;
        for &child in children {
            let child_kind = self.graph.node(child)?.kind;
            let out = EdgeKind::out_of_gate(child_kind)
                .ok_or(GraphError::WrongKind { kind: child_kind })?;
            self.edge(gate, out, child)?;
        }
        Ok(gate)
    }

    pub fn component_data(
        &mut self,
        component: NodeId,
        data: ComponentData,
    ) -> Result<(), GraphError> {
        let node = self
            .graph
            .nodes
            .get_mut(component.index())
            .ok_or(GraphError::UnknownNode(component))?;
        if node.kind != NodeKind::Component {
            return Err(GraphError::NotAComponent(component));
        }
        node.component = Some(data);
        Ok(())
    }

    pub fn component_data_mut(&mut self, component: NodeId) -> Option<&mut ComponentData> {
        self.graph
            .nodes
            .get_mut(component.index())?
            .component
            .as_mut()
    }

    pub fn graph(&self) -> &ModelGraph {
        &self.graph
    }

    /// Points edge number `index` at a different target.
    pub fn retarget_edge(&mut self, index: usize, target: NodeId) -> Result<(), GraphError> {
        self.graph.node(target)?;
        let edges: Vec<Edge> = self
            .graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if i == index {
                    Edge { target, ..*e }
                } else {
                    *e
                }
            })
            .collect();
        self.replace_edges(edges);
        Ok(())
    }

    pub fn remove_edge(&mut self, index: usize) {
        let mut edges = self.graph.edges.clone();
        if index < edges.len() {
            edges.remove(index);
        }
        self.replace_edges(edges);
    }

    /// Deletes a node and its incident edges; remaining ids are compacted.
    pub fn remove_node(&mut self, id: NodeId) {
        let old = std::mem::take(&mut self.graph);
        let mut remap = vec![None; old.nodes.len()];
        let mut next = GraphBuilder::new();
        for node in &old.nodes {
            if node.id == id {
                continue;
            }
            let new_id = next.push(node.kind, node.name.clone(), None);
            remap[node.id.index()] = Some(new_id);
        }
        for node in &old.nodes {
            let Some(new_id) = remap[node.id.index()] else {
                continue;
            };
            let target = &mut next.graph.nodes[new_id.index()];
            target.owner = node.owner.and_then(|o| remap[o.index()]);
            target.component = node.component.as_ref().map(|data| ComponentData {
                states: data.states.clone(),
                condition_matrix: data
                    .condition_matrix
                    .iter()
                    .filter_map(|(c, row)| remap[c.index()].map(|c| (c, row.clone())))
                    .collect(),
                direct_p_success: data.direct_p_success,
            });
        }
        for e in &old.edges {
            if let (Some(s), Some(t)) = (remap[e.source.index()], remap[e.target.index()]) {
                next.graph.edges.push(Edge {
                    source: s,
                    kind: e.kind,
                    target: t,
                });
                next.graph.children[s.index()].push(t);
                next.graph.parents[t.index()].push(s);
            }
        }
        next.reindex();
        *self = next;
    }

    fn replace_edges(&mut self, edges: Vec<Edge>) {
        for list in self
            .graph
            .children
            .iter_mut()
            .chain(self.graph.parents.iter_mut())
        {
            list.clear();
        }
        for e in &edges {
            self.graph.children[e.source.index()].push(e.target);
            self.graph.parents[e.target.index()].push(e.source);
        }
        self.graph.edges = edges;
    }

    fn reindex(&mut self) {
        self.graph.index.clear();
        for node in &self.graph.nodes {
            let key = match (node.kind, node.owner) {
                (k, _) if k.is_gate() => continue,
                (NodeKind::SuccessCondition, Some(owner)) => {
                    NodeKey::Condition(owner, node.name.clone())
                }
                (NodeKind::SuccessCondition, None) => continue,
                (k, _) => NodeKey::Named(k, node.name.clone()),
            };
            self.graph.index.entry(key).or_insert(node.id);
        }
    }

    pub fn build(self) -> ModelGraph {
        self.graph
    }
}
