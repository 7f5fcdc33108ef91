use std::collections::{BTreeMap, HashMap};

use super::document::{Entry, HierarchicalModel};
use super::validate::{collect_definitions, expected_list, tier_children, validate_structure};
use super::IoError;
use crate::model::{
    ComponentData, GateKind, GraphBuilder, ModelGraph, NodeId, NodeKind, StateSpec,
};

/// State assigned to components that declare no states of their own.
pub const NOMINAL_STATE: &str = "nominal";

/// Lowers a validated document to a graph: one gate per branching point,
/// repeated (kind, name) entries re-referencing the first node created.
pub fn to_graph(model: &HierarchicalModel) -> Result<ModelGraph, IoError> {
    let report = validate_structure(model);
    if !report.passed() {
        return Err(IoError::Invalid(report));
    }
    let definitions: HashMap<(NodeKind, String), &Entry> = collect_definitions(&model.goal)
        .into_iter()
        .map(|(key, defs)| (key, defs[0].1))
        .collect();
    let mut lowering = Lowering {
        builder: GraphBuilder::new(),
        definitions,
    };
    lowering.entry(&model.goal, NodeKind::Goal);
    Ok(lowering.builder.build())
}

struct Lowering<'a> {
    builder: GraphBuilder,
    definitions: HashMap<(NodeKind, String), &'a Entry>,
}

impl<'a> Lowering<'a> {
    fn entry(&mut self, entry: &'a Entry, kind: NodeKind) -> NodeId {
        let entry = match &entry.reference {
            Some(target) => self.definitions[&(kind, target.clone())],
            None => entry,
        };
        let name = entry.name.as_deref().expect("validated entries are named");
        if let Some(existing) = self.builder.graph().find(kind, name) {
            return existing;
        }
        let id = self
            .builder
            .node(kind, name)
            .expect("validated names are non-empty");
        if kind == NodeKind::Component {
            self.component(id, entry);
            return id;
        }
        let Some((link, children)) = tier_children(entry, kind) else {
            return id;
        };
        let (_, child_kind) = expected_list(kind).expect("tier has children");
        let ids: Vec<NodeId> = children.iter().map(|c| self.entry(c, child_kind)).collect();
        let gate = link.gate.unwrap_or(GateKind::And);
        self.builder.gate_over(id, gate, &ids).expect("typed edges");
        id
    }

    fn component(&mut self, id: NodeId, entry: &Entry) {
        let states = match &entry.states {
            Some(states) if !states.is_empty() => states.clone(),
            _ => vec![StateSpec {
                name: NOMINAL_STATE.to_string(),
                prior: 1.0,
            }],
        };
        let mut matrix = BTreeMap::new();
        if let Some((link, conditions)) = tier_children(entry, NodeKind::Component) {
            let mut ids = Vec::with_capacity(conditions.len());
            for cond in conditions {
                let name = cond.name.as_deref().expect("validated");
                let cid = self
                    .builder
                    .condition(id, name)
                    .expect("owner is a component");
                let given = cond.given_state.as_ref().expect("validated");
                matrix.insert(cid, states.iter().map(|s| given[&s.name]).collect());
                ids.push(cid);
            }
            self.builder
                .gate_over(id, link.gate.unwrap_or(GateKind::And), &ids)
                .expect("typed edges");
        }
        let data = ComponentData {
            states,
            condition_matrix: matrix,
            direct_p_success: entry.direct_p_success,
        };
        self.builder
            .component_data(id, data)
            .expect("node is a component");
    }
}
