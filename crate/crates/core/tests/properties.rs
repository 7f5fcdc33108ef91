use std::collections::{BTreeMap, BTreeSet};

use dml_core::io::{load_model, serialize_graph};
use dml_core::model::GraphBuilder;
use dml_core::pathsets::{generate_pathsets, minimize, PathSet, DEFAULT_PATHSET_LIMIT};
use dml_core::propagation::{
    brute_force_all, evaluate_boolean, propagate, EvidenceSet, PropagationConfig,
};
use dml_core::synth::{mutate, random_document, random_evidence, Mutation, SynthConfig};
use dml_core::{GateKind, ModelGraph, NodeId, NodeKind};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn model(seed: u64, config: &SynthConfig) -> ModelGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    load_model(&random_document(&mut rng, config).to_string()).unwrap()
}

fn evidence(seed: u64, graph: &ModelGraph) -> EvidenceSet {
    let doc = random_evidence(&mut StdRng::seed_from_u64(seed ^ 0x9e37), graph);
    EvidenceSet::from_document(graph, &doc).unwrap()
}

fn expandable(graph: &ModelGraph) -> Vec<NodeId> {
    graph
        .nodes()
        .iter()
        .filter(|n| !n.kind.is_gate() && !graph.is_leaf(n.id))
        .map(|n| n.id)
        .collect()
}

fn holds(graph: &ModelGraph, node: NodeId, on: &BTreeSet<NodeId>) -> bool {
    let assignment: BTreeMap<NodeId, bool> = graph
        .leaves()
        .into_iter()
        .map(|l| (l, on.contains(&l)))
        .collect();
    evaluate_boolean(graph, &assignment).unwrap()[&node]
}

/// Minimal satisfying leaf sets of `node` by enumerating every subset of the
/// leaves below it.
fn minimal_assignments(graph: &ModelGraph, node: NodeId) -> BTreeSet<PathSet> {
    let leaves: Vec<NodeId> = graph
        .descendants(node)
        .into_iter()
        .filter(|id| graph.is_leaf(*id))
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
        .filter(|m| holds(graph, node, &subset(*m)))
        .collect();
    satisfying
        .iter()
        .filter(|m| {
            (0..leaves.len()).all(|i| *m >> i & 1 == 0 || !satisfying.contains(&(*m & !(1 << i))))
        })
        .map(|m| subset(*m))
        .collect()
}

fn small_tree() -> SynthConfig {
    SynthConfig {
        max_functions: 2,
        max_subfunctions: 2,
        max_components: 3,
        ..SynthConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_stay_in_unit_interval(seed in any::<u64>()) {
        let config = SynthConfig { share_probability: 0.3, direct_probability: 0.2, ..SynthConfig::default() };
        let g = model(seed, &config);
        let result = propagate::<f64>(&g, &evidence(seed, &g), &PropagationConfig::default()).unwrap();
        for e in &result.entries {
            prop_assert!((0.0..=1.0).contains(&e.p_success), "{} = {}", e.name, e.p_success);
            prop_assert_eq!(e.impacted, e.p_success < 0.9);
        }
    }

    #[test]
    fn raising_a_likelihood_never_lowers_any_node(seed in any::<u64>()) {
        let g = model(seed, &SynthConfig::default());
        let ev = evidence(seed, &g);
        let before = propagate::<f64>(&g, &ev, &PropagationConfig::default()).unwrap();

        let mut rng = StdRng::seed_from_u64(seed);
        let conditions: Vec<NodeId> =
            g.nodes().iter().filter(|n| n.kind == NodeKind::SuccessCondition).map(|n| n.id).collect();
        let target = conditions[rng.random_range(0..conditions.len())];
        let owner = g.nodes()[target.index()].owner.unwrap();
        let mut b = GraphBuilder::from_graph(g.clone());
        for p in b.component_data_mut(owner).unwrap().condition_matrix.get_mut(&target).unwrap() {
            *p += (1.0 - *p) * rng.random::<f64>();
        }
        let raised = b.build();
        let after = propagate::<f64>(&raised, &ev, &PropagationConfig::default()).unwrap();
        for (x, y) in before.entries.iter().zip(&after.entries) {
            prop_assert!(y.p_success >= x.p_success - 1e-12, "{}: {} -> {}", x.name, x.p_success, y.p_success);
        }
    }

    #[test]
    fn tree_propagation_matches_enumeration(seed in any::<u64>()) {
        let g = model(seed, &SynthConfig::small());
        prop_assume!(g.leaves().len() <= 20);
        let ev = evidence(seed, &g);
        let result = propagate::<f64>(&g, &ev, &PropagationConfig::default()).unwrap();
        let exact = brute_force_all::<f64>(&g, &ev, g.goal().unwrap()).unwrap();
        for e in &result.entries {
            prop_assert!((e.p_success - exact[&e.id]).abs() <= 1e-9, "{}", e.name);
        }
    }

    #[test]
    fn certain_leaves_reduce_to_boolean_logic(seed in any::<u64>()) {
        let config = SynthConfig { direct_probability: 1.0, ..SynthConfig::default() };
        let g = model(seed, &config);
        let mut rng = StdRng::seed_from_u64(seed);
        let mut b = GraphBuilder::from_graph(g.clone());
        let mut assignment = BTreeMap::new();
        for leaf in g.leaves() {
            let on = rng.random_bool(0.7);
            b.component_data_mut(leaf).unwrap().direct_p_success = Some(if on { 1.0 } else { 0.0 });
            assignment.insert(leaf, on);
        }
        let g = b.build();
        let result = propagate::<f64>(&g, &EvidenceSet::new(), &PropagationConfig::default()).unwrap();
        let truth = evaluate_boolean(&g, &assignment).unwrap();
        for e in &result.entries {
            prop_assert_eq!(e.p_success, if truth[&e.id] { 1.0 } else { 0.0 }, "{}", &e.name);
        }
    }

    #[test]
    fn minimized_pathsets_are_exactly_the_minimal_assignments(seed in any::<u64>()) {
        let g = model(seed, &small_tree());
        prop_assume!(g.leaves().len() <= 12);
        for node in expandable(&g) {
            let sets = minimize(&generate_pathsets(&g, node, DEFAULT_PATHSET_LIMIT).unwrap());
            for set in &sets.sets {
                prop_assert!(holds(&g, node, set));
                for leaf in set {
                    let mut smaller = set.clone();
                    smaller.remove(leaf);
                    prop_assert!(!holds(&g, node, &smaller));
                }
            }
            let found: BTreeSet<PathSet> = sets.sets.into_iter().collect();
            prop_assert_eq!(found, minimal_assignments(&g, node));
        }
    }

    #[test]
    fn raw_counts_follow_gate_algebra(seed in any::<u64>()) {
        let g = model(seed, &SynthConfig::default());
        for node in expandable(&g) {
            let count = generate_pathsets(&g, node, usize::MAX).unwrap().len();
            let children = g.children_of(node).unwrap();
            let gate = children.gate.unwrap().1;
            let expected = if g.kind(node) == NodeKind::Component {
                match gate {
                    GateKind::And => 1,
                    GateKind::Or => children.nodes.len(),
                }
            } else {
                let counts = children.nodes.iter().map(|c| generate_pathsets(&g, *c, usize::MAX).unwrap().len());
                match gate {
                    GateKind::And => counts.product(),
                    GateKind::Or => counts.sum(),
                }
            };
            prop_assert_eq!(count, expected);
        }
    }

    #[test]
    fn minimize_is_idempotent_and_order_stable(seed in any::<u64>()) {
        let g = model(seed, &SynthConfig { share_probability: 0.4, ..SynthConfig::default() });
        let goal = g.goal().unwrap();
        let raw = generate_pathsets(&g, goal, usize::MAX).unwrap();
        let once = minimize(&raw);
        prop_assert_eq!(minimize(&once), once.clone());
        let mut shuffled = raw.clone();
        shuffled.sets.shuffle(&mut StdRng::seed_from_u64(seed));
        prop_assert_eq!(minimize(&shuffled), once);
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let g = model(seed, &SynthConfig { share_probability: 0.3, direct_probability: 0.1, ..SynthConfig::default() });
        let text = serialize_graph(&g).unwrap();
        prop_assert_eq!(load_model(&text).unwrap(), g);
    }

    #[test]
    fn valid_models_pass_and_mutations_fail(seed in any::<u64>(), which in 0usize..3) {
        let g = model(seed, &SynthConfig { share_probability: 0.3, ..SynthConfig::default() });
        prop_assert!(g.check_invariants().is_empty());
        let mut rng = StdRng::seed_from_u64(seed);
        if let Some(broken) = mutate(&mut rng, &g, Mutation::ALL[which]) {
            prop_assert!(!broken.check_invariants().is_empty());
        }
    }
}
