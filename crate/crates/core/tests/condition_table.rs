//! Condition probabilities against a table computed in exact arithmetic by
//! `data/gen_condition_cases.py`.

use std::collections::BTreeMap;

use dml_core::model::{ComponentData, GraphBuilder, StateSpec};
use dml_core::propagation::condition_probability;
use dml_core::NodeKind;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    distribution: Vec<f64>,
    likelihood: Vec<f64>,
    expected: f64,
}

fn cases() -> Vec<Case> {
    serde_json::from_str(include_str!("data/condition_cases.json")).unwrap()
}

fn evaluate<P: dml_core::Probability>(case: &Case) -> P {
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
    condition_probability::<P>(&data, cond, &case.distribution).unwrap()
}

#[test]
fn table_has_fifty_cases() {
    let all = cases();
    assert_eq!(all.len(), 50);
    assert_eq!(all[0].expected, 0.793);
}

#[test]
fn f64_within_1e12() {
    for (i, case) in cases().iter().enumerate() {
        let got: f64 = evaluate(case);
        assert!(
            (got - case.expected).abs() <= 1e-12,
            "case {i}: {got} vs {}",
            case.expected
        );
    }
}

#[test]
fn exact_rationals_agree() {
    for (i, case) in cases().iter().enumerate() {
        let got: BigRational = evaluate(case);
        let as_f64 = got.to_f64().unwrap();
        assert!((as_f64 - case.expected).abs() <= 1e-12, "case {i}");
        assert!(got >= BigRational::from_integer(BigInt::from(0)));
    }
}
