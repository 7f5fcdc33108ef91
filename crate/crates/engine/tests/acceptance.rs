//! Acceptance gate: one pass/fail line per criterion, then a single verdict.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::{Duration, Instant};

use common::{app, call, cli, fixture, read};
use dml_core::io::{
    export_cypher, lint_cypher, load_model, parse_model, serialize_graph, validate_structure,
};
use dml_core::model::{ComponentData, GraphBuilder, StateSpec};
use dml_core::pathsets::{generate_pathsets, minimize, PathSet, DEFAULT_PATHSET_LIMIT};
use dml_core::propagation::{
    brute_force_all, condition_probability, evaluate_boolean, propagate, EvidenceDocument,
    EvidenceSet, PropagationConfig,
};
use dml_core::synth::{corpus, random_evidence, SynthConfig};
use dml_core::{GateKind, ModelGraph, NodeId, NodeKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

type Outcome = Result<String, String>;

fn check(ok: bool, message: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message.into())
    }
}

/// 200 tree models with at most 10 components; at most 3 states and 2
/// conditions per component come from the generator settings.
fn tree_corpus() -> Vec<ModelGraph> {
    let config = SynthConfig {
        max_functions: 3,
        max_subfunctions: 2,
        max_components: 2,
        ..SynthConfig::default()
    };
    corpus(&mut StdRng::seed_from_u64(2024), &config, 200, |g| {
        g.count_elements().components <= 10
    })
    .into_iter()
    .map(|(_, g)| g)
    .collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let models = tree_corpus();
    let mut rng = StdRng::seed_from_u64(99);
    let mut compared = 0;
    for (i, g) in models.iter().enumerate() {
        let ev = EvidenceSet::from_document(g, &random_evidence(&mut rng, g))
            .map_err(|e| e.to_string())?;
        let fast =
            propagate::<f64>(g, &ev, &PropagationConfig::default()).map_err(|e| e.to_string())?;
        let exact = brute_force_all::<f64>(g, &ev, g.goal().unwrap()).map_err(|e| e.to_string())?;
        for e in &fast.entries {
            let diff = (e.p_success - exact[&e.id]).abs();
            check(
                diff <= 1e-9,
                format!("model {i}, {}: differs by {diff:e}", e.name),
            )?;
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "{} models, {compared} nodes within 1e-9 in {elapsed:.2?}",
        models.len()
    ))
}

#[derive(serde::Deserialize)]
struct ConditionCase {
    distribution: Vec<f64>,
    likelihood: Vec<f64>,
    expected: f64,
}

fn condition_table() -> Outcome {
    let cases: Vec<ConditionCase> =
        serde_json::from_str(include_str!("../../core/tests/data/condition_cases.json"))
            .map_err(|e| e.to_string())?;
    check(cases.len() >= 50, format!("only {} cases", cases.len()))?;
    let mut worst: f64 = 0.0;
    for (i, case) in cases.iter().enumerate() {
        let mut b = GraphBuilder::new();
        let c = b.node(NodeKind::Component, "C").unwrap();
        let cond = b.condition(c, "k").unwrap();
        let data = ComponentData {
            states: (0..case.distribution.len())
                .map(|i| StateSpec {
                    name: format!("s{i}"),
                    prior: case.distribution[i],
                })
                .collect(),
            condition_matrix: BTreeMap::from([(cond, case.likelihood.clone())]),
            direct_p_success: None,
        };
        let got: f64 =
            condition_probability(&data, cond, &case.distribution).map_err(|e| e.to_string())?;
        let diff = (got - case.expected).abs();
        worst = worst.max(diff);
        check(
            diff <= 1e-12,
            format!("case {i}: {got} vs {}", case.expected),
        )?;
    }
    Ok(format!("{} cases, worst error {worst:e}", cases.len()))
}

fn fixture_counts() -> Outcome {
    let g = load_model(&read("aux_feedwater.json")).map_err(|e| e.to_string())?;
    let c = g.count_elements();
    let found = [
        c.goals,
        c.functions,
        c.subfunctions,
        c.components,
        c.gates,
        c.success_conditions,
    ];
    check(found == [1, 4, 9, 19, 33, 39], format!("counts {found:?}"))?;
    Ok(format!("{found:?}"))
}

fn cst_scenario() -> Outcome {
    let model_text = read("aux_feedwater.json");
    let evidence_text = read("evidence_cst2_failed.json");
    let start = Instant::now();
    let g = load_model(&model_text).map_err(|e| e.to_string())?;
    let doc: EvidenceDocument = serde_json::from_str(&evidence_text).map_err(|e| e.to_string())?;
    let ev = EvidenceSet::from_document(&g, &doc).map_err(|e| e.to_string())?;
    let result =
        propagate::<f64>(&g, &ev, &PropagationConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let cst2 = g.find(NodeKind::Component, "CST-2").unwrap();
    for cond in g.conditions_of(cst2) {
        let row = &g.nodes()[cst2.index()]
            .component
            .as_ref()
            .unwrap()
            .condition_matrix[&cond];
        check(
            *row.last().unwrap() == 0.0,
            "failed-state likelihood must be 0",
        )?;
    }
    let tanks = g
        .find(NodeKind::Subfunction, "Manage Condensation Tanks")
        .unwrap();
    check(
        result.p_success(tanks) == Some(0.0),
        format!("tanks p = {:?}", result.p_success(tanks)),
    )?;
    let mut node = tanks;
    let mut chain = 0;
    while let Some(&gate) = g.predecessors(node).first() {
        if g.kind(gate) == NodeKind::AndGate {
            let parent = g.predecessors(gate)[0];
            check(
                result.get(parent).unwrap().impacted,
                format!("{} not impacted", g.qualified_name(parent)),
            )?;
            chain += 1;
            node = parent;
        } else {
            break;
        }
    }
    check(
        node == g.goal().unwrap(),
        "AND chain does not reach the goal",
    )?;
    check(
        elapsed < Duration::from_millis(100),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "p(tanks)=0, {chain} AND-ancestors impacted, {elapsed:.2?}"
    ))
}

fn holds(g: &ModelGraph, node: NodeId, on: &BTreeSet<NodeId>) -> bool {
    let assignment: BTreeMap<NodeId, bool> = g
        .leaves()
        .into_iter()
        .map(|l| (l, on.contains(&l)))
        .collect();
    evaluate_boolean(g, &assignment).unwrap()[&node]
}

fn minimal_assignments(g: &ModelGraph, node: NodeId) -> BTreeSet<PathSet> {
    let leaves: Vec<NodeId> = g
        .descendants(node)
        .into_iter()
        .filter(|id| g.is_leaf(*id))
        .collect();
    let subset = |mask: u32| -> PathSet {
        leaves
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| *l)
            .collect()
    };
    let satisfying: BTreeSet<u32> = (0..1u32 << leaves.len())
        .filter(|m| holds(g, node, &subset(*m)))
        .collect();
    satisfying
        .iter()
        .filter(|m| {
            (0..leaves.len()).all(|i| *m >> i & 1 == 0 || !satisfying.contains(&(*m & !(1 << i))))
        })
        .map(|m| subset(*m))
        .collect()
}

fn expandable(g: &ModelGraph) -> Vec<NodeId> {
    g.nodes()
        .iter()
        .filter(|n| !n.kind.is_gate() && !g.is_leaf(n.id))
        .map(|n| n.id)
        .collect()
}

fn pathset_minimality() -> Outcome {
    let models: Vec<ModelGraph> = tree_corpus()
        .into_iter()
        .filter(|g| g.leaves().len() <= 12)
        .collect();
    check(!models.is_empty(), "no model with at most 12 leaves")?;
    let mut targets = 0;
    for (i, g) in models.iter().enumerate() {
        for node in expandable(g) {
            let sets = minimize(
                &generate_pathsets(g, node, DEFAULT_PATHSET_LIMIT).map_err(|e| e.to_string())?,
            );
            for set in &sets.sets {
                check(
                    holds(g, node, set),
                    format!("model {i}: insufficient path-set"),
                )?;
                for leaf in set {
                    let mut smaller = set.clone();
                    smaller.remove(leaf);
                    check(
                        !holds(g, node, &smaller),
                        format!("model {i}: non-minimal path-set"),
                    )?;
                }
            }
            let found: BTreeSet<PathSet> = sets.sets.into_iter().collect();
            check(
                found == minimal_assignments(g, node),
                format!("model {i}, {}: mismatch", g.qualified_name(node)),
            )?;
            targets += 1;
        }
    }
    Ok(format!(
        "{} models, {targets} targets match exhaustive enumeration",
        models.len()
    ))
}

fn pathset_algebra() -> Outcome {
    let config = SynthConfig {
        share_probability: 0.2,
        ..SynthConfig::default()
    };
    let models = corpus(&mut StdRng::seed_from_u64(7), &config, 100, |_| true);
    let mut rng = StdRng::seed_from_u64(8);
    for (i, (_, g)) in models.iter().enumerate() {
        for node in expandable(g) {
            let raw = generate_pathsets(g, node, usize::MAX).map_err(|e| e.to_string())?;
            let children = g.children_of(node).unwrap();
            let gate = children.gate.unwrap().1;
            let expected = if g.kind(node) == NodeKind::Component {
                if gate == GateKind::And {
                    1
                } else {
                    children.nodes.len()
                }
            } else {
                let counts = children
                    .nodes
                    .iter()
                    .map(|c| generate_pathsets(g, *c, usize::MAX).unwrap().len());
                if gate == GateKind::And {
                    counts.product()
                } else {
                    counts.sum()
                }
            };
            check(
                raw.len() == expected,
                format!("model {i}: raw count {} vs {expected}", raw.len()),
            )?;
            let once = minimize(&raw);
            check(
                minimize(&once) == once,
                format!("model {i}: minimize not idempotent"),
            )?;
            let mut shuffled = raw.clone();
            shuffled.sets.shuffle(&mut rng);
            check(
                minimize(&shuffled) == once,
                format!("model {i}: minimize depends on order"),
            )?;
        }
    }
    Ok(format!("{} models", models.len()))
}

fn round_trip() -> Outcome {
    let text = read("aux_feedwater.json");
    let fixture_graph = load_model(&text).map_err(|e| e.to_string())?;
    let config = SynthConfig {
        share_probability: 0.3,
        direct_probability: 0.1,
        ..SynthConfig::default()
    };
    let mut graphs = vec![fixture_graph];
    graphs.extend(
        corpus(&mut StdRng::seed_from_u64(36), &config, 100, |_| true)
            .into_iter()
            .map(|(_, g)| g),
    );
    let shared = graphs
        .iter()
        .filter(|g| !g.shared_nodes().is_empty())
        .count();
    check(shared > 0, "no model with a shared component")?;
    for (i, g) in graphs.iter().enumerate() {
        let out = serialize_graph(g).map_err(|e| e.to_string())?;
        let parsed = parse_model(&out).map_err(|e| e.to_string())?;
        check(
            validate_structure(&parsed).passed(),
            format!("model {i}: serialized form fails validation"),
        )?;
        let again = load_model(&out).map_err(|e| e.to_string())?;
        check(&again == g, format!("model {i}: graph changed"))?;
    }
    Ok(format!(
        "fixture + 100 random models ({shared} with shared components)"
    ))
}

#[derive(serde::Deserialize)]
struct ExpectedIssue {
    file: String,
    code: String,
    path: String,
}

fn validation_catalog() -> Outcome {
    let manifest: Vec<ExpectedIssue> =
        serde_json::from_str(&read("invalid/expected.json")).map_err(|e| e.to_string())?;
    check(
        manifest.len() >= 10,
        format!("only {} documents", manifest.len()),
    )?;
    for case in &manifest {
        let text = read(&format!("invalid/{}", case.file));
        let found: Vec<(String, String)> = match parse_model(&text) {
            Err(e) => vec![(e.issue.code.as_str().to_string(), e.issue.path)],
            Ok(m) => validate_structure(&m)
                .issues
                .into_iter()
                .map(|i| (i.code.as_str().to_string(), i.path))
                .collect(),
        };
        check(
            found.contains(&(case.code.clone(), case.path.clone())),
            format!(
                "{}: expected {} at {}, got {found:?}",
                case.file, case.code, case.path
            ),
        )?;
    }
    Ok(format!(
        "{} malformed documents rejected as expected",
        manifest.len()
    ))
}

fn cypher_export() -> Outcome {
    let g = load_model(&read("aux_feedwater.json")).map_err(|e| e.to_string())?;
    let text = export_cypher(&g);
    let lines = text.lines().count();
    check(
        lines == g.nodes().len() + g.edges().len(),
        format!("{lines} lines"),
    )?;
    let issues = lint_cypher(&text);
    check(issues.is_empty(), format!("lint: {issues:?}"))?;
    let again = export_cypher(&load_model(&read("aux_feedwater.json")).unwrap());
    check(text == again, "export differs between runs")?;
    Ok(format!("{lines} statements, lint clean, stable"))
}

async fn cli_service_parity() -> Outcome {
    let model = fixture("aux_feedwater.json").display().to_string();
    let evidence = fixture("evidence_cst2_failed.json").display().to_string();
    let mut compared = 0;

    for with_evidence in [false, true] {
        let mut args = vec!["up", model.as_str()];
        if with_evidence {
            args.extend(["--evidence", evidence.as_str()]);
        }
        let (code, out, err) = cli(&args);
        check(code == 0, format!("up exited {code}: {err}"))?;
        let app = app();
        call(&app, "POST", "/model", &read("aux_feedwater.json")).await;
        if with_evidence {
            call(&app, "PUT", "/evidence", &read("evidence_cst2_failed.json")).await;
        }
        let (_, http) = call(&app, "POST", "/propagate", "{}").await;
        check(
            out == http,
            format!("up differs (evidence: {with_evidence})"),
        )?;
        compared += 1;
    }

    let app = app();
    call(&app, "POST", "/model", &read("aux_feedwater.json")).await;
    for node in ["Supply Feedwater", "Manage Condensation Tanks"] {
        let (code, out, err) = cli(&["down", &model, "--node", node]);
        check(code == 0, format!("down exited {code}: {err}"))?;
        let (_, http) = call(
            &app,
            "POST",
            "/pathsets",
            &serde_json::json!({ "target": node }).to_string(),
        )
        .await;
        check(out == http, format!("down differs for {node}"))?;
        compared += 1;
    }
    Ok(format!("{compared} scenarios byte-identical"))
}

#[tokio::test]
async fn acceptance() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("oracle equivalence", oracle_equivalence()),
        ("condition probability table", condition_table()),
        ("fixture element counts", fixture_counts()),
        ("CST failure scenario", cst_scenario()),
        ("path-set soundness and minimality", pathset_minimality()),
        ("path-set algebra", pathset_algebra()),
        ("round-trip", round_trip()),
        ("validation catalog", validation_catalog()),
        ("Cypher export", cypher_export()),
    ];
    results.push(("CLI/service parity", cli_service_parity().await));

    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (name, outcome) in &results {
        let line = match outcome {
            Ok(detail) => format!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                format!("FAIL  {name}: {reason}")
            }
        };
        writeln!(out, "acceptance | {line}").unwrap();
    }
    writeln!(
        out,
        "acceptance | {} of {} criteria passed",
        results.len() - failed,
        results.len()
    )
    .unwrap();
    assert_eq!(failed, 0);
}
