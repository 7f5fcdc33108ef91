use std::collections::HashSet;

use serde_json::{json, Map, Value};

use super::validate::{expected_list, expected_relation};
use super::IoError;
use crate::model::{ModelGraph, NodeId, NodeKind};

/// Renders a graph back to a model document. A node reachable through several
/// parents is written in full at its first occurrence and as `{"ref": name}`
/// afterwards.
pub fn serialize_graph(graph: &ModelGraph) -> Result<String, IoError> {
    let value = to_document_value(graph)?;
    Ok(serde_json::to_string_pretty(&value).expect("document values serialize"))
}

pub fn to_document_value(graph: &ModelGraph) -> Result<Value, IoError> {
    let goal = graph.goal().ok_or(IoError::NoGoal)?;
    let mut emitted = HashSet::new();
    let mut root = Map::new();
    root.insert("Goal".to_string(), entry(graph, goal, &mut emitted));
    Ok(Value::Object(root))
}

fn entry(graph: &ModelGraph, id: NodeId, emitted: &mut HashSet<NodeId>) -> Value {
    let node = &graph.nodes()[id.index()];
    if !emitted.insert(id) {
        return json!({ "ref": node.name });
    }
    let mut out = Map::new();
    out.insert("name".into(), Value::from(node.name.clone()));

    if node.kind == NodeKind::Component {
        return component(graph, id, out);
    }
    let (Some(relation), Some((list, _))) =
        (expected_relation(node.kind), expected_list(node.kind))
    else {
        return Value::Object(out);
    };
    let children = graph
        .children_of(id)
        .map(|c| (c.gate, c.nodes))
        .unwrap_or((None, Vec::new()));
    let mut link = Map::new();
    if let Some((_, gate)) = children.0 {
        link.insert("gate".into(), Value::from(gate.document_label()));
    }
    let items: Vec<Value> = children
        .1
        .iter()
        .map(|c| entry(graph, *c, emitted))
        .collect();
    link.insert(list.key().into(), Value::Array(items));
    out.insert(relation.key().into(), Value::Object(link));
    Value::Object(out)
}

fn component(graph: &ModelGraph, id: NodeId, mut out: Map<String, Value>) -> Value {
    let Some(data) = graph.nodes()[id.index()].component.as_ref() else {
        return Value::Object(out);
    };
    let states: Vec<Value> = data
        .states
        .iter()
        .map(|s| json!({ "name": s.name, "prior": s.prior }))
        .collect();
    out.insert("states".into(), Value::Array(states));
    if let Some(p) = data.direct_p_success {
        out.insert("direct_p_success".into(), Value::from(p));
    }
    let Ok(children) = graph.children_of(id) else {
        return Value::Object(out);
    };
    if let Some((_, gate)) = children.gate {
        let conditions: Vec<Value> = children
            .nodes
            .iter()
            .map(|&c| {
                let mut given = Map::new();
                if let Some(row) = data.condition_matrix.get(&c) {
                    for (state, p) in data.states.iter().zip(row) {
                        given.insert(state.name.clone(), Value::from(*p));
                    }
                }
                json!({ "name": graph.nodes()[c.index()].name, "given_state": given })
            })
            .collect();
        out.insert(
            "success_through".into(),
            json!({ "gate": gate.document_label(), "success_conditions": conditions }),
        );
    }
    Value::Object(out)
}
