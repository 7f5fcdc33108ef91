//! Upward success-probability propagation.
//!
//! Each success condition's probability is the likelihood-weighted sum over
//! the owning component's state distribution, `Σ_i P(cond | state_i) ·
//! P(state_i | data)`. Components combine their conditions through their gate,
//! and every higher tier combines its children the same way: AND is the
//! product, OR is one minus the product of complements. The formulas assume
//! independent children; on graphs with shared nodes they are evaluated as
//! written and a [`PropagationWarning::SharedDependency`] is attached.
//!
//! [`brute_force_probability`] is an independent oracle: it enumerates every
//! truth assignment of the leaves and evaluates the gates as Boolean logic.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentData, GateKind, ModelGraph, NodeId, NodeKind, SUM_TOLERANCE};
use crate::probability::{and_combine, or_combine, Probability};

/// Default impact threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// Largest leaf count [`brute_force_probability`] will enumerate.
pub const MAX_ENUMERATION_LEAVES: usize = 20;

/// Evidence as written in documents: component name -> state name -> probability.
pub type EvidenceDocument = IndexMap<String, IndexMap<String, f64>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("no component named {0:?}")]
    UnknownComponent(String),
    #[error("component {component:?} has no state {state:?}")]
    UnknownState { component: String, state: String },
    #[error("probability for {component:?}/{state:?} outside [0,1]")]
    ProbabilityRange { component: String, state: String },
    #[error("distribution for {component:?} sums to {sum}, expected 1")]
    PriorSum { component: String, sum: f64 },
    #[error("distribution for {component:?} has {found} entries, component has {expected} states")]
    Length {
        component: String,
        found: usize,
        expected: usize,
    },
}

impl EvidenceError {
    pub fn code(&self) -> &'static str {
        match self {
            EvidenceError::UnknownComponent(_) => "UNKNOWN_COMPONENT",
            EvidenceError::UnknownState { .. } => "UNKNOWN_STATE",
            EvidenceError::ProbabilityRange { .. } => "PROBABILITY_RANGE",
            EvidenceError::PriorSum { .. } => "PRIOR_SUM",
            EvidenceError::Length { .. } => "STATE_MISMATCH",
        }
    }
}

/// Posterior state distributions per component, aligned with the component's
/// declared states. Components without an entry fall back to their priors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvidenceSet {
    entries: BTreeMap<NodeId, Vec<f64>>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolves a name-keyed document against the graph. States left out of
    /// a component's map are read as probability zero.
    pub fn from_document(
        graph: &ModelGraph,
        doc: &EvidenceDocument,
    ) -> Result<Self, EvidenceError> {
        let mut set = EvidenceSet::new();
        for (name, dist) in doc {
            let id = graph
                .find(NodeKind::Component, name)
                .ok_or_else(|| EvidenceError::UnknownComponent(name.clone()))?;
            let data = component_data(graph, id)
                .ok_or_else(|| EvidenceError::UnknownComponent(name.clone()))?;
            let mut row = vec![0.0; data.states.len()];
            for (state, p) in dist {
                let i = data
                    .state_index(state)
                    .ok_or_else(|| EvidenceError::UnknownState {
                        component: name.clone(),
                        state: state.clone(),
                    })?;
                if !crate::model::is_probability(*p) {
                    return Err(EvidenceError::ProbabilityRange {
                        component: name.clone(),
                        state: state.clone(),
                    });
                }
                row[i] = *p;
            }
            set.insert(graph, id, row)?;
        }
        Ok(set)
    }

    /// Sets the distribution of one component, replacing any previous one.
    pub fn insert(
        &mut self,
        graph: &ModelGraph,
        component: NodeId,
        row: Vec<f64>,
    ) -> Result<(), EvidenceError> {
        let name = graph
            .node(component)
            .map(|n| n.name.clone())
            .unwrap_or_default();
        let data = component_data(graph, component)
            .ok_or_else(|| EvidenceError::UnknownComponent(name.clone()))?;
        if row.len() != data.states.len() {
            return Err(EvidenceError::Length {
                component: name,
                found: row.len(),
                expected: data.states.len(),
            });
        }
        for (state, p) in data.states.iter().zip(&row) {
            if !crate::model::is_probability(*p) {
                return Err(EvidenceError::ProbabilityRange {
                    component: name,
                    state: state.name.clone(),
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(EvidenceError::PriorSum {
                component: name,
                sum,
            });
        }
        self.entries.insert(component, row);
        Ok(())
    }

    /// Per-component replacement merge.
    pub fn merge(&mut self, other: EvidenceSet) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, component: NodeId) -> Option<&[f64]> {
        self.entries.get(&component).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Evidence if present, otherwise the component's priors.
    pub fn distribution(&self, graph: &ModelGraph, component: NodeId) -> Vec<f64> {
        match self.get(component) {
            Some(row) => row.to_vec(),
            None => component_data(graph, component)
                .map(ComponentData::priors)
                .unwrap_or_default(),
        }
    }

    pub fn to_document(&self, graph: &ModelGraph) -> EvidenceDocument {
        let mut doc = EvidenceDocument::new();
        for (id, row) in &self.entries {
            let Some(data) = component_data(graph, *id) else {
                continue;
            };
            let dist = data
                .states
                .iter()
                .zip(row)
                .map(|(s, p)| (s.name.clone(), *p))
                .collect();
            doc.insert(graph.nodes()[id.index()].name.clone(), dist);
        }
        doc
    }
}

fn component_data(graph: &ModelGraph, id: NodeId) -> Option<&ComponentData> {
    graph
        .node(id)
        .ok()
        .filter(|n| n.kind == NodeKind::Component)?
        .component
        .as_ref()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("{condition} is not a success condition of this component")]
    UnknownCondition { condition: NodeId },
    #[error("distribution has {found} entries, component has {expected} states")]
    StateMismatch { found: usize, expected: usize },
    #[error("component {name:?} has neither success conditions nor direct_p_success")]
    NoSuccessModel { node: NodeId, name: String },
    #[error("{0} is not a component")]
    NotAComponent(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no truth value supplied for leaf {0}")]
    UncoveredLeaf(NodeId),
    #[error("enumeration over {leaves} leaves exceeds the limit of {limit}")]
    TooManyLeaves { leaves: usize, limit: usize },
    #[error("graph has no unique goal")]
    NoGoal,
}

impl PropagationError {
    pub fn code(&self) -> &'static str {
        match self {
            PropagationError::UnknownCondition { .. } => "UNKNOWN_CONDITION",
            PropagationError::StateMismatch { .. } => "STATE_MISMATCH",
            PropagationError::NoSuccessModel { .. } => "NO_SUCCESS_MODEL",
            PropagationError::NotAComponent(_) => "NOT_A_COMPONENT",
            PropagationError::UnknownNode(_) => "NOT_FOUND",
            PropagationError::UncoveredLeaf(_) => "UNCOVERED_LEAF",
            PropagationError::TooManyLeaves { .. } => "TOO_MANY_LEAVES",
            PropagationError::NoGoal => "NO_GOAL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub threshold: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Success probability of one condition under a state distribution.
pub fn condition_probability<P: Probability>(
    component: &ComponentData,
    condition: NodeId,
    distribution: &[f64],
) -> Result<P, PropagationError> {
    let row = component
        .condition_matrix
        .get(&condition)
        .ok_or(PropagationError::UnknownCondition { condition })?;
    if distribution.len() != component.states.len() || row.len() != distribution.len() {
        return Err(PropagationError::StateMismatch {
            found: distribution.len(),
            expected: component.states.len(),
        });
    }
    let sum = row
        .iter()
        .zip(distribution)
        .fold(P::zero(), |acc, (likelihood, state)| {
            acc + P::from_f64_lossy(*likelihood) * P::from_f64_lossy(*state)
        });
    Ok(sum.clamp_unit())
}

fn combine<P: Probability>(gate: GateKind, values: Vec<P>) -> P {
    match gate {
        GateKind::And => and_combine(values),
        GateKind::Or => or_combine(values),
    }
}

/// A component's success probability: its conditions combined through its
/// gate, or `direct_p_success` when it has no conditions.
pub fn component_probability<P: Probability>(
    graph: &ModelGraph,
    component: NodeId,
    evidence: &EvidenceSet,
) -> Result<P, PropagationError> {
    let node = graph
        .node(component)
        .map_err(|_| PropagationError::UnknownNode(component))?;
    let data =
        component_data(graph, component).ok_or(PropagationError::NotAComponent(component))?;
    let children = graph
        .children_of(component)
        .map_err(|_| PropagationError::UnknownNode(component))?;
    let no_model = || PropagationError::NoSuccessModel {
        node: component,
        name: node.name.clone(),
    };
    match children.gate {
        Some((_, gate)) if !children.nodes.is_empty() => {
            let dist = evidence.distribution(graph, component);
            let values = children
                .nodes
                .iter()
                .map(|c| condition_probability::<P>(data, *c, &dist))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(combine(gate, values))
        }
        _ => data
            .direct_p_success
            .map(P::from_f64_lossy)
            .ok_or_else(no_model),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeResult<P> {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub p_success: P,
    pub impacted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PropagationWarning {
    /// Nodes with several parents; gate formulas treat their contributions as
    /// independent, so ancestors' values are approximations.
    SharedDependency { nodes: Vec<String> },
}

/// Per-node success probabilities with impact flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult<P> {
    /// Ordered by tier, then qualified name.
    pub entries: Vec<NodeResult<P>>,
    pub threshold: f64,
    /// Evaluation order, children before parents.
    pub trace: Vec<NodeId>,
    pub warnings: Vec<PropagationWarning>,
    index: HashMap<NodeId, usize>,
}

impl<P: Probability> PropagationResult<P> {
    pub fn get(&self, id: NodeId) -> Option<&NodeResult<P>> {
        self.index.get(&id).map(|i| &self.entries[*i])
    }

    pub fn p_success(&self, id: NodeId) -> Option<P> {
        self.get(id).map(|e| e.p_success.clone())
    }

    pub fn impacted(&self) -> impl Iterator<Item = &NodeResult<P>> {
        self.entries.iter().filter(|e| e.impacted)
    }

    /// Wire form: `[{name, kind, p_success, impacted}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "name": e.name,
                        "kind": e.kind.as_str(),
                        "p_success": e.p_success.to_f64_lossy(),
                        "impacted": e.impacted,
                    })
                })
                .collect(),
        )
    }
}

/// Evaluates every node reachable from the goal, children first.
pub fn propagate<P: Probability>(
    graph: &ModelGraph,
    evidence: &EvidenceSet,
    config: &PropagationConfig,
) -> Result<PropagationResult<P>, PropagationError> {
    let goal = graph.goal().ok_or(PropagationError::NoGoal)?;
    let order = graph.post_order(goal);
    let mut values: HashMap<NodeId, P> = HashMap::with_capacity(order.len());
    let mut condition_values: HashMap<NodeId, P> = HashMap::new();
    let mut trace = Vec::new();

    for &id in &order {
        let kind = graph.kind(id);
        let value = match kind {
            NodeKind::SuccessCondition => {
                let owner = graph.nodes()[id.index()]
                    .owner
                    .ok_or(PropagationError::UnknownNode(id))?;
                let data =
                    component_data(graph, owner).ok_or(PropagationError::NotAComponent(owner))?;
                let dist = evidence.distribution(graph, owner);
                condition_probability::<P>(data, id, &dist)?
            }
            NodeKind::Component => component_probability(graph, id, evidence)?,
            NodeKind::AndGate | NodeKind::OrGate => continue,
            NodeKind::Goal | NodeKind::Function | NodeKind::Subfunction => {
                let children = graph
                    .children_of(id)
                    .map_err(|_| PropagationError::UnknownNode(id))?;
                match children.gate {
                    Some((_, gate)) => {
                        let inputs = children.nodes.iter().map(|c| values[c].clone()).collect();
                        combine(gate, inputs)
                    }
                    None => P::one(),
                }
            }
        };
        if kind == NodeKind::SuccessCondition {
            condition_values.insert(id, value.clone());
        }
        values.insert(id, value);
        trace.push(id);
    }

    let threshold = P::from_f64_lossy(config.threshold);
    let mut entries: Vec<NodeResult<P>> = trace
        .iter()
        .map(|&id| {
            let p = values[&id].clone();
            NodeResult {
                id,
                kind: graph.kind(id),
                name: graph.qualified_name(id),
                impacted: p < threshold,
                p_success: p,
            }
        })
        .collect();
    entries.sort_by(|a, b| (a.kind.tier(), &a.name, a.id).cmp(&(b.kind.tier(), &b.name, b.id)));
    let index = entries.iter().enumerate().map(|(i, e)| (e.id, i)).collect();

    let shared = graph.shared_nodes();
    let warnings = if shared.is_empty() {
        Vec::new()
    } else {
        vec![PropagationWarning::SharedDependency {
            nodes: shared.iter().map(|id| graph.qualified_name(*id)).collect(),
        }]
    };

    Ok(PropagationResult {
        entries,
        threshold: config.threshold,
        trace,
        warnings,
        index,
    })
}

/// Boolean evaluation over bit lanes: each `u64` carries 64 independent
/// assignments. Returns one word per node (gates included).
fn evaluate_lanes(
    graph: &ModelGraph,
    root: NodeId,
    leaf_words: &HashMap<NodeId, u64>,
) -> Result<HashMap<NodeId, u64>, PropagationError> {
    let mut out = HashMap::new();
    for id in graph.post_order(root) {
        let word = if graph.is_leaf(id) {
            *leaf_words
                .get(&id)
                .ok_or(PropagationError::UncoveredLeaf(id))?
        } else {
            let kids = graph.successors(id);
            match graph.kind(id) {
                NodeKind::AndGate => kids.iter().fold(!0u64, |acc, c| acc & out[c]),
                NodeKind::OrGate => kids.iter().fold(0u64, |acc, c| acc | out[c]),
                // A non-gate node takes the value of the gate below it.
                _ => kids.iter().fold(!0u64, |acc, c| acc & out[c]),
            }
        };
        out.insert(id, word);
    }
    Ok(out)
}

/// Truth value of every non-gate node under a leaf assignment.
pub fn evaluate_boolean(
    graph: &ModelGraph,
    assignment: &BTreeMap<NodeId, bool>,
) -> Result<BTreeMap<NodeId, bool>, PropagationError> {
    let goal = graph.goal().ok_or(PropagationError::NoGoal)?;
    let words: HashMap<NodeId, u64> = assignment
        .iter()
        .map(|(id, v)| (*id, if *v { 1 } else { 0 }))
        .collect();
    let lanes = evaluate_lanes(graph, goal, &words)?;
    Ok(lanes
        .into_iter()
        .filter(|(id, _)| !graph.kind(*id).is_gate())
        .map(|(id, w)| (id, w & 1 == 1))
        .collect())
}

/// Success probability of a leaf under the evidence.
pub fn leaf_probability<P: Probability>(
    graph: &ModelGraph,
    evidence: &EvidenceSet,
    leaf: NodeId,
) -> Result<P, PropagationError> {
    match graph.kind(leaf) {
        NodeKind::SuccessCondition => {
            let owner = graph.nodes()[leaf.index()]
                .owner
                .ok_or(PropagationError::UnknownNode(leaf))?;
            let data =
                component_data(graph, owner).ok_or(PropagationError::NotAComponent(owner))?;
            condition_probability(data, leaf, &evidence.distribution(graph, owner))
        }
        _ => component_probability(graph, leaf, evidence),
    }
}

/// Exact probability that `node` succeeds when every leaf below it is an
/// independent Bernoulli trial, by enumeration of all leaf outcomes.
pub fn brute_force_probability<P: Probability>(
    graph: &ModelGraph,
    evidence: &EvidenceSet,
    node: NodeId,
) -> Result<P, PropagationError> {
    let all = brute_force_all::<P>(graph, evidence, node)?;
    Ok(all[&node].clone())
}

/// [`brute_force_probability`] for `root` and every node below it, sharing
/// one enumeration.
pub fn brute_force_all<P: Probability>(
    graph: &ModelGraph,
    evidence: &EvidenceSet,
    root: NodeId,
) -> Result<BTreeMap<NodeId, P>, PropagationError> {
    if !graph.contains(root) {
        return Err(PropagationError::UnknownNode(root));
    }
    let leaves: Vec<NodeId> = graph
        .descendants(root)
        .into_iter()
        .filter(|id| graph.is_leaf(*id))
        .collect();
    if leaves.len() > MAX_ENUMERATION_LEAVES {
        return Err(PropagationError::TooManyLeaves {
            leaves: leaves.len(),
            limit: MAX_ENUMERATION_LEAVES,
        });
    }
    let probs = leaves
        .iter()
        .map(|l| leaf_probability::<P>(graph, evidence, *l))
        .collect::<Result<Vec<P>, _>>()?;

    // weights[m] is the joint probability of outcome m, where bit i of m
    // says whether leaf i succeeded.
    let mut weights: Vec<P> = vec![P::one()];
    for p in &probs {
        let fail = P::one() - p.clone();
        let mut next = Vec::with_capacity(weights.len() * 2);
        next.extend(weights.iter().map(|w| w.clone() * fail.clone()));
        next.extend(weights.iter().map(|w| w.clone() * p.clone()));
        weights = next;
    }

    let outcomes = 1usize << leaves.len();
    let mut totals: HashMap<NodeId, P> = HashMap::new();
    let mut block = 0usize;
    while block < outcomes {
        let lanes = (outcomes - block).min(64);
        let words: HashMap<NodeId, u64> = leaves
            .iter()
            .enumerate()
            .map(|(bit, leaf)| {
                let mut w = 0u64;
                for lane in 0..lanes {
                    if (block + lane) >> bit & 1 == 1 {
                        w |= 1 << lane;
                    }
                }
                (*leaf, w)
            })
            .collect();
        let values = evaluate_lanes(graph, root, &words)?;
        for (id, word) in values {
            if graph.kind(id).is_gate() {
                continue;
            }
            let total = totals.entry(id).or_insert_with(P::zero);
            let mut bits = word & if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
            while bits != 0 {
                let lane = bits.trailing_zeros() as usize;
                *total = total.clone() + weights[block + lane].clone();
                bits &= bits - 1;
            }
        }
        block += lanes;
    }
    Ok(totals
        .into_iter()
        .map(|(id, p)| (id, p.clamp_unit()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphBuilder, StateSpec};
    use num_rational::BigRational;

    fn data(states: &[(&str, f64)]) -> ComponentData {
        ComponentData {
            states: states
                .iter()
                .map(|(n, p)| StateSpec {
                    name: n.to_string(),
                    prior: *p,
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn single_state_identity() {
        let mut d = data(&[("only", 1.0)]);
        d.condition_matrix.insert(NodeId::raw(0), vec![1.0]);
        let p: f64 = condition_probability(&d, NodeId::raw(0), &[1.0]).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn degenerate_distribution_selects_one_term() {
        let c = NodeId::raw(0);
        let mut d = data(&[("op", 1.0), ("deg", 0.0), ("fail", 0.0)]);
        d.condition_matrix.insert(c, vec![0.8, 0.5, 0.0]);
        let p: f64 = condition_probability(&d, c, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, 0.8);
    }

    #[test]
    fn weighted_sum() {
        let c = NodeId::raw(0);
        let mut d = data(&[("op", 0.7), ("deg", 0.2), ("fail", 0.1)]);
        d.condition_matrix.insert(c, vec![0.99, 0.5, 0.0]);
        let p: f64 = condition_probability(&d, c, &[0.7, 0.2, 0.1]).unwrap();
        assert!((p - 0.793).abs() < 1e-12);
        let exact: BigRational = condition_probability(&d, c, &[0.7, 0.2, 0.1]).unwrap();
        assert!((exact.to_f64_lossy() - 0.793).abs() < 1e-15);
    }

    #[test]
    fn condition_errors() {
        let c = NodeId::raw(0);
        let mut d = data(&[("op", 1.0)]);
        assert!(matches!(
            condition_probability::<f64>(&d, c, &[1.0]),
            Err(PropagationError::UnknownCondition { .. })
        ));
        d.condition_matrix.insert(c, vec![1.0]);
        assert!(matches!(
            condition_probability::<f64>(&d, c, &[0.5, 0.5]),
            Err(PropagationError::StateMismatch { .. })
        ));
    }

    fn two_condition_component(gate: GateKind, rows: [f64; 2]) -> (ModelGraph, NodeId) {
        let mut b = GraphBuilder::new();
        let c = b.node(NodeKind::Component, "C").unwrap();
        let c1 = b.condition(c, "c1").unwrap();
        let c2 = b.condition(c, "c2").unwrap();
        b.gate_over(c, gate, &[c1, c2]).unwrap();
        let mut d = data(&[("op", 1.0)]);
        d.condition_matrix.insert(c1, vec![rows[0]]);
        d.condition_matrix.insert(c2, vec![rows[1]]);
        b.component_data(c, d).unwrap();
        (b.build(), c)
    }

    #[test]
    fn component_gates() {
        let (g, c) = two_condition_component(GateKind::And, [0.9, 0.8]);
        let p: f64 = component_probability(&g, c, &EvidenceSet::new()).unwrap();
        assert!((p - 0.72).abs() < 1e-15);
        let (g, c) = two_condition_component(GateKind::Or, [0.5, 0.5]);
        let p: f64 = component_probability(&g, c, &EvidenceSet::new()).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        let (g, c) = two_condition_component(GateKind::And, [1.0, 1.0]);
        assert_eq!(
            component_probability::<f64>(&g, c, &EvidenceSet::new()).unwrap(),
            1.0
        );
    }

    #[test]
    fn component_without_success_model_is_an_error() {
        let mut b = GraphBuilder::new();
        let c = b.node(NodeKind::Component, "C").unwrap();
        b.component_data(c, data(&[("op", 1.0)])).unwrap();
        let g = b.build();
        assert!(matches!(
            component_probability::<f64>(&g, c, &EvidenceSet::new()),
            Err(PropagationError::NoSuccessModel { .. })
        ));
    }

    #[test]
    fn evidence_validation() {
        let (g, c) = two_condition_component(GateKind::And, [0.9, 0.8]);
        let mut ev = EvidenceSet::new();
        assert!(matches!(
            ev.insert(&g, c, vec![0.5]),
            Err(EvidenceError::PriorSum { .. })
        ));
        assert!(matches!(
            ev.insert(&g, c, vec![0.5, 0.5]),
            Err(EvidenceError::Length { .. })
        ));
        assert!(ev.insert(&g, c, vec![1.0]).is_ok());

        let doc: EvidenceDocument = serde_json::from_str(r#"{"Nope": {"op": 1.0}}"#).unwrap();
        assert_eq!(
            EvidenceSet::from_document(&g, &doc),
            Err(EvidenceError::UnknownComponent("Nope".into()))
        );
        let doc: EvidenceDocument = serde_json::from_str(r#"{"C": {"broken": 1.0}}"#).unwrap();
        assert!(matches!(
            EvidenceSet::from_document(&g, &doc),
            Err(EvidenceError::UnknownState { .. })
        ));
    }

    #[test]
    fn enumeration_of_two_conditions() {
        let (g, c) = two_condition_component(GateKind::And, [0.9, 0.8]);
        let p: f64 = brute_force_probability(&g, &EvidenceSet::new(), c).unwrap();
        assert!((p - 0.72).abs() < 1e-15);
        let (g, c) = two_condition_component(GateKind::Or, [0.3, 0.4]);
        let p: BigRational = brute_force_probability(&g, &EvidenceSet::new(), c).unwrap();
        let expected = BigRational::from_f64_lossy(0.3) + BigRational::from_f64_lossy(0.4)
            - BigRational::from_f64_lossy(0.3) * BigRational::from_f64_lossy(0.4);
        assert_eq!(p, expected);
    }

    #[test]
    fn enumeration_guard() {
        let mut b = GraphBuilder::new();
        let c = b.node(NodeKind::Component, "C").unwrap();
        let conds: Vec<NodeId> = (0..21)
            .map(|i| b.condition(c, &format!("c{i}")).unwrap())
            .collect();
        b.gate_over(c, GateKind::And, &conds).unwrap();
        let mut d = data(&[("op", 1.0)]);
        for id in &conds {
            d.condition_matrix.insert(*id, vec![0.5]);
        }
        b.component_data(c, d).unwrap();
        let g = b.build();
        assert!(matches!(
            brute_force_probability::<f64>(&g, &EvidenceSet::new(), c),
            Err(PropagationError::TooManyLeaves { leaves: 21, .. })
        ));
    }

    #[test]
    fn uncovered_leaf() {
        let mut b = GraphBuilder::new();
        let goal = b.node(NodeKind::Goal, "G").unwrap();
        let f = b.node(NodeKind::Function, "F").unwrap();
        let s = b.node(NodeKind::Subfunction, "S").unwrap();
        let c = b.node(NodeKind::Component, "C").unwrap();
        b.gate_over(goal, GateKind::And, &[f]).unwrap();
        b.gate_over(f, GateKind::And, &[s]).unwrap();
        b.gate_over(s, GateKind::And, &[c]).unwrap();
        let g = b.build();
        assert_eq!(
            evaluate_boolean(&g, &BTreeMap::new()),
            Err(PropagationError::UncoveredLeaf(c))
        );
        let out = evaluate_boolean(&g, &BTreeMap::from([(c, true)])).unwrap();
        assert!(out.values().all(|v| *v));
        assert_eq!(out.len(), 4);
    }
}
