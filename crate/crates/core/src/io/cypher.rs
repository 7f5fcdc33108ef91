//! Cypher text export and a lexical linter for the emitted statements.

use std::collections::HashMap;

use serde::Serialize;

use crate::model::{EdgeKind, ModelGraph, NodeId, NodeKind};

/// One `CREATE` per node, then one `MATCH ... CREATE` per edge, one statement
/// per line. Nodes are ordered by kind then name, edges by their endpoints.
pub fn export_cypher(graph: &ModelGraph) -> String {
    let names = cypher_names(graph);
    let mut nodes: Vec<NodeId> = graph.nodes().iter().map(|n| n.id).collect();
    nodes.sort_by_key(|id| sort_key(graph, &names, *id));

    let mut out = String::new();
    for id in &nodes {
        out.push_str("CREATE ");
        out.push_str(&pattern(graph, &names, *id, None));
        out.push_str(";\n");
    }

    let rank: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut edges = graph.edges().to_vec();
    edges.sort_by_key(|e| (rank[&e.source], e.kind, rank[&e.target]));
    for e in &edges {
        out.push_str(&format!(
            "MATCH {}, {} CREATE (a)-[:{}]->(b);\n",
            pattern(graph, &names, e.source, Some("a")),
            pattern(graph, &names, e.target, Some("b")),
            e.kind.label(),
        ));
    }
    out
}

fn sort_key(
    graph: &ModelGraph,
    names: &HashMap<NodeId, String>,
    id: NodeId,
) -> (NodeKind, String, String, NodeId) {
    let node = &graph.nodes()[id.index()];
    let owner = node
        .owner
        .map(|o| graph.nodes()[o.index()].name.clone())
        .unwrap_or_default();
    (node.kind, names[&id].clone(), owner, id)
}

/// Gate names are `<parent>_<AND|OR>`, suffixed `_2`, `_3`, ... on collision.
fn cypher_names(graph: &ModelGraph) -> HashMap<NodeId, String> {
    let mut out = HashMap::new();
    let mut used: HashMap<(NodeKind, String), usize> = HashMap::new();
    for node in graph.nodes() {
        let name = if node.kind.is_gate() {
            let base = graph.qualified_name(node.id);
            let n = used.entry((node.kind, base.clone())).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}_{n}")
            }
        } else {
            node.name.clone()
        };
        out.insert(node.id, name);
    }
    out
}

fn pattern(
    graph: &ModelGraph,
    names: &HashMap<NodeId, String>,
    id: NodeId,
    var: Option<&str>,
) -> String {
    let node = &graph.nodes()[id.index()];
    let mut props = format!("name: {}", quote(&names[&id]));
    if let Some(owner) = node.owner {
        props.push_str(&format!(
            ", component: {}",
            quote(&graph.nodes()[owner.index()].name)
        ));
    }
    format!("({}:{} {{{props}}})", var.unwrap_or(""), node.kind.label())
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintIssue {
    pub line: usize,
    pub message: String,
}

/// Lexical checks over exported Cypher: statement keywords, terminating
/// semicolons, closed string literals, balanced brackets, and node labels and
/// relationship types drawn from the model vocabulary.
pub fn lint_cypher(text: &str) -> Vec<LintIssue> {
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let number = i + 1;
        let mut report = |message: String| {
            issues.push(LintIssue {
                line: number,
                message,
            })
        };
        if line.trim().is_empty() {
            report("empty statement".into());
            continue;
        }
        if !line.ends_with(';') {
            report("statement must end with ';'".into());
        }
        let starts_match = line.starts_with("MATCH ");
        if !line.starts_with("CREATE ") && !starts_match {
            report("statement must start with CREATE or MATCH".into());
        }
        if starts_match && !line.contains(" CREATE ") {
            report("MATCH without CREATE".into());
        }
        match scan(line) {
            Ok(tokens) => {
                for label in tokens.labels {
                    if !NodeKind::ALL.iter().any(|k| k.label() == label) {
                        report(format!("unknown node label {label:?}"));
                    }
                }
                for rel in tokens.relationships {
                    if !EdgeKind::ALL.iter().any(|k| k.label() == rel) {
                        report(format!("unknown relationship type {rel:?}"));
                    }
                }
            }
            Err(message) => report(message),
        }
    }
    issues
}

#[derive(Default)]
struct Tokens {
    labels: Vec<String>,
    relationships: Vec<String>,
}

fn scan(line: &str) -> Result<Tokens, String> {
    let mut tokens = Tokens::default();
    let mut stack = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                let mut closed = false;
                while let Some(s) = chars.next() {
                    match s {
                        '\\' => {
                            chars.next().ok_or("dangling escape")?;
                        }
                        '"' => {
                            closed = true;
                            break;
                        }
                        _ => {}
                    }
                }
                if !closed {
                    return Err("unterminated string literal".into());
                }
            }
            '(' | '[' | '{' => stack.push(c),
            ')' | ']' | '}' => {
                let open = stack.pop().ok_or_else(|| format!("unbalanced {c:?}"))?;
                let expected = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if open != expected {
                    return Err(format!("{open:?} closed by {c:?}"));
                }
            }
            ':' if matches!(stack.last(), Some('(') | Some('[')) => {
                let ident: String =
                    std::iter::from_fn(|| chars.next_if(|x| x.is_alphanumeric() || *x == '_'))
                        .collect();
                if ident.is_empty() {
                    return Err("missing label after ':'".into());
                }
                if stack.last() == Some(&'(') {
                    tokens.labels.push(ident);
                } else {
                    tokens.relationships.push(ident);
                }
            }
            _ => {}
        }
    }
    if let Some(open) = stack.last() {
        return Err(format!("unclosed {open:?}"));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GateKind, GraphBuilder};

    #[test]
    fn single_goal() {
        let mut b = GraphBuilder::new();
        b.node(NodeKind::Goal, "G").unwrap();
        let text = export_cypher(&b.build());
        assert_eq!(text, "CREATE (:Goal {name: \"G\"});\n");
    }

    #[test]
    fn goal_gate_function_edges() {
        let mut b = GraphBuilder::new();
        let g = b.node(NodeKind::Goal, "G").unwrap();
        let f = b.node(NodeKind::Function, "F").unwrap();
        b.gate_over(g, GateKind::And, &[f]).unwrap();
        let text = export_cypher(&b.build());
        assert_eq!(text.matches("[:ACHIEVED_BY]").count(), 1);
        assert_eq!(text.matches("[:DEPENDS_ON]").count(), 1);
        assert!(text.contains("CREATE (:AND_gate {name: \"G_AND\"});"));
        assert!(lint_cypher(&text).is_empty(), "{:?}", lint_cypher(&text));
    }

    #[test]
    fn names_are_escaped() {
        let mut b = GraphBuilder::new();
        b.node(NodeKind::Goal, "say \"hi\" \\ bye").unwrap();
        let text = export_cypher(&b.build());
        assert!(lint_cypher(&text).is_empty());
        assert!(text.contains(r#"say \"hi\" \\ bye"#));
    }

    #[test]
    fn linter_flags_problems() {
        let cases = [
            ("CREATE (:Goal {name: \"G\"})", "end with"),
            ("CREATE (:Goal {name: \"G});", "unterminated"),
            ("CREATE (:Goal {name: \"G\");", "closed by"),
            ("CREATE (:Goal {name: \"G\"};", "unclosed"),
            ("CREATE (:Widget {name: \"G\"});", "unknown node label"),
            ("MATCH (a:Goal {name: \"G\"}), (b:AND_gate {name: \"x\"}) CREATE (a)-[:LINKS]->(b);", "unknown relationship"),
            ("DELETE (n);", "start with"),
            ("MATCH (a:Goal {name: \"G\"});", "MATCH without CREATE"),
        ];
        for (line, needle) in cases {
            let issues = lint_cypher(line);
            assert!(
                issues.iter().any(|i| i.message.contains(needle)),
                "{line}: {issues:?}"
            );
        }
    }
}
