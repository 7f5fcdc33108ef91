//! Random model documents, evidence and structural mutations for tests and
//! benchmarks. Everything is driven by a caller-supplied RNG, so a seed fully
//! determines the output.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::model::{EdgeKind, GraphBuilder, ModelGraph, NodeId};
use crate::propagation::EvidenceDocument;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub max_functions: usize,
    pub max_subfunctions: usize,
    pub max_components: usize,
    pub max_states: usize,
    pub max_conditions: usize,
    /// Chance that a subfunction re-references an already defined component.
    pub share_probability: f64,
    /// Chance that a component uses `direct_p_success` instead of conditions.
    pub direct_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_functions: 3,
            max_subfunctions: 3,
            max_components: 3,
            max_states: 3,
            max_conditions: 2,
            share_probability: 0.0,
            direct_probability: 0.0,
        }
    }
}

impl SynthConfig {
    /// Small trees whose leaf count stays within brute-force range.
    pub fn small() -> Self {
        SynthConfig {
            max_functions: 2,
            max_subfunctions: 2,
            max_components: 2,
            ..SynthConfig::default()
        }
    }
}

const STATE_NAMES: [&str; 3] = ["operational", "degraded", "failed"];

fn gate<R: Rng>(rng: &mut R) -> &'static str {
    if rng.random_bool(0.5) {
        "AND_gate"
    } else {
        "OR_gate"
    }
}

/// Probabilities with extra mass on 0 and 1 so saturated cases are exercised.
fn probability<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..8) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    }
}

fn distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut out: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = out[..n - 1].iter().sum();
    out[n - 1] = (1.0 - head).max(0.0);
    out
}

fn component<R: Rng>(rng: &mut R, name: String, config: &SynthConfig) -> Value {
    let mut obj = Map::new();
    obj.insert("name".into(), json!(name));
    if rng.random_bool(config.direct_probability) {
        obj.insert("direct_p_success".into(), json!(probability(rng)));
        return Value::Object(obj);
    }
    let n_states = rng.random_range(1..=config.max_states.clamp(1, STATE_NAMES.len()));
    let priors = distribution(rng, n_states);
    let states: Vec<Value> = STATE_NAMES[..n_states]
        .iter()
        .zip(&priors)
        .map(|(s, p)| json!({"name": s, "prior": p}))
        .collect();
    obj.insert("states".into(), Value::Array(states));
    let n_conditions = rng.random_range(1..=config.max_conditions.max(1));
    let conditions: Vec<Value> = (0..n_conditions)
        .map(|i| {
            let given: Map<String, Value> = STATE_NAMES[..n_states]
                .iter()
                .map(|s| (s.to_string(), json!(probability(rng))))
                .collect();
            json!({"name": format!("cond{i}"), "given_state": given})
        })
        .collect();
    obj.insert(
        "success_through".into(),
        json!({"gate": gate(rng), "success_conditions": conditions}),
    );
    Value::Object(obj)
}

/// A valid hierarchical model document.
pub fn random_document<R: Rng>(rng: &mut R, config: &SynthConfig) -> Value {
    let mut defined: Vec<String> = Vec::new();
    let mut functions = Vec::new();
    for f in 0..rng.random_range(1..=config.max_functions.max(1)) {
        let mut subfunctions = Vec::new();
        for s in 0..rng.random_range(1..=config.max_subfunctions.max(1)) {
            let mut components: Vec<Value> = Vec::new();
            let mut used: Vec<String> = Vec::new();
            for c in 0..rng.random_range(1..=config.max_components.max(1)) {
                let shared = defined
                    .iter()
                    .filter(|d| !used.contains(d))
                    .collect::<Vec<_>>();
                if !shared.is_empty() && rng.random_bool(config.share_probability) {
                    let name = (*shared.choose(rng).expect("non-empty")).clone();
                    components.push(json!({"ref": name}));
                    used.push(name);
                    continue;
                }
                let name = format!("C{f}.{s}.{c}");
                components.push(component(rng, name.clone(), config));
                defined.push(name.clone());
                used.push(name);
            }
            subfunctions.push(json!({
                "name": format!("S{f}.{s}"),
                "requires": {"gate": gate(rng), "components": components},
            }));
        }
        functions.push(json!({
            "name": format!("F{f}"),
            "depends_on": {"gate": gate(rng), "subfunctions": subfunctions},
        }));
    }
    json!({"Goal": {"name": "G", "achieved_by": {"gate": gate(rng), "functions": functions}}})
}

/// `count` loadable models drawn from `rng`, skipping any that `accept`
/// rejects. Returns the documents alongside their graphs.
pub fn corpus<R: Rng>(
    rng: &mut R,
    config: &SynthConfig,
    count: usize,
    accept: impl Fn(&ModelGraph) -> bool,
) -> Vec<(Value, ModelGraph)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let doc = random_document(rng, config);
        let graph = crate::io::load_model(&doc.to_string()).expect("generated documents are valid");
        if accept(&graph) {
            out.push((doc, graph));
        }
    }
    out
}

/// Evidence for a random subset of components.
pub fn random_evidence<R: Rng>(rng: &mut R, graph: &ModelGraph) -> EvidenceDocument {
    let mut doc = EvidenceDocument::new();
    for node in graph.nodes() {
        let Some(data) = &node.component else {
            continue;
        };
        if data.states.is_empty() || !rng.random_bool(0.5) {
            continue;
        }
        let row = distribution(rng, data.states.len());
        doc.insert(
            node.name.clone(),
            data.states
                .iter()
                .map(|s| s.name.clone())
                .zip(row)
                .collect(),
        );
    }
    doc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Point a gate's outgoing edge at a node of the wrong tier.
    RetargetWrongTier,
    /// Delete a gate node together with its edges.
    DeleteGate,
    /// Add an edge from a gate to a node two tiers below its parent.
    LevelSkip,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::RetargetWrongTier,
        Mutation::DeleteGate,
        Mutation::LevelSkip,
    ];
}

/// Applies `mutation` at a random site, or returns `None` if the graph has no
/// applicable site.
pub fn mutate<R: Rng>(rng: &mut R, graph: &ModelGraph, mutation: Mutation) -> Option<ModelGraph> {
    let mut builder = GraphBuilder::from_graph(graph.clone());
    match mutation {
        Mutation::RetargetWrongTier => {
            let sites: Vec<(usize, NodeId)> = graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| graph.kind(e.source).is_gate())
                .flat_map(|(i, e)| {
                    let wanted = graph.kind(e.target);
                    graph
                        .nodes()
                        .iter()
                        .filter(move |n| !n.kind.is_gate() && n.kind != wanted)
                        .map(move |n| (i, n.id))
                })
                .collect();
            let (index, target) = *sites.choose(rng)?;
            builder.retarget_edge(index, target).ok()?;
        }
        Mutation::DeleteGate => {
            let gates: Vec<NodeId> = graph
                .nodes()
                .iter()
                .filter(|n| n.kind.is_gate())
                .map(|n| n.id)
                .collect();
            builder.remove_node(*gates.choose(rng)?);
        }
        Mutation::LevelSkip => {
            let mut sites = Vec::new();
            for parent in graph.nodes().iter().filter(|n| !n.kind.is_gate()) {
                let Some(pt) = parent.kind.tier() else {
                    continue;
                };
                for &gate in graph.successors(parent.id) {
                    for target in graph.nodes() {
                        if target.kind.tier() == Some(pt + 2) {
                            sites.push((gate, target.id, target.kind));
                        }
                    }
                }
            }
            let (gate, target, kind) = *sites.choose(rng)?;
            builder
                .edge(gate, EdgeKind::out_of_gate(kind)?, target)
                .ok()?;
        }
    }
    Some(builder.build())
}
