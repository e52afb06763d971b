use proptest::prelude::*;

use super::*;
use crate::fixtures;

const DETERMINISTIC_DOC: &str = r#"{
  "variables": [
    {"name": "A", "states": ["1", "2"]},
    {"name": "B", "states": ["1", "2"]},
    {"name": "C", "states": ["1", "2", "3"]}
  ],
  "cpts": [
    {"child": "A", "kind": "table", "table": [0.6, 0.4]},
    {"child": "B", "kind": "table", "table": [0.5, 0.5]},
    {"child": "C", "parents": ["A", "B"], "kind": "table",
     "table": [1, 0, 0, 0, 1, 0, 0.2, 0.8, 0, 0.7, 0.3, 0]}
  ]
}"#;

fn assignment(pairs: &[(VarId, usize)], n: usize) -> Vec<Option<usize>> {
    let mut a = vec![None; n];
    for &(v, s) in pairs {
        a[v] = Some(s);
    }
    a
}

fn noisy(parents: Vec<VarId>, trigger: Vec<usize>, inhibitor: Vec<f64>, leak: f64) -> NoisyOrCpt {
    NoisyOrCpt {
        child: parents.len(),
        parents,
        trigger,
        inhibitor,
        leak,
    }
}

#[test]
fn parses_smallest_network() {
    let net = parse_network(
        r#"{"variables":[{"name":"A","states":["1","2"]}],
            "cpts":[{"child":"A","parents":[],"kind":"table","table":[0.4,0.6]}]}"#,
    )
    .unwrap();
    assert_eq!(net.len(), 1);
    assert_eq!(net.cpt_prob(0, 1, &[None]).unwrap(), 0.6);
}

#[test]
fn deterministic_table_layout() {
    let net = parse_network(DETERMINISTIC_DOC).unwrap();
    assert_eq!(net, fixtures::deterministic_example());
    // C=2 | A=1, B=2
    let a = assignment(&[(0, 0), (1, 1)], 3);
    assert_eq!(net.cpt_prob(2, 1, &a).unwrap(), 1.0);
    // C=3 | A=2, B=1
    let a = assignment(&[(0, 1), (1, 0)], 3);
    assert_eq!(net.cpt_prob(2, 2, &a).unwrap(), 0.0);
    assert_eq!(net.cpt_prob(2, 1, &a).unwrap(), 0.8);
}

#[test]
fn missing_parent_is_an_error() {
    let net = fixtures::deterministic_example();
    let a = assignment(&[(0, 0)], 3);
    assert_eq!(net.cpt_prob(2, 0, &a), Err(ModelError::MissingParent(1)));
}

#[test]
fn rejects_bad_row_sum() {
    let err = parse_network(
        r#"{"variables":[{"name":"A","states":["1","2"]}],
            "cpts":[{"child":"A","kind":"table","table":[0.4,0.5]}]}"#,
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::RowSum { row: 0, .. }), "{err}");
}

#[test]
fn rejects_structural_errors() {
    let unknown_parent = r#"{"variables":[{"name":"A","states":["1","2"]}],
        "cpts":[{"child":"A","parents":["Z"],"kind":"table","table":[0.5,0.5]}]}"#;
    assert_eq!(
        parse_network(unknown_parent).unwrap_err(),
        ModelError::UnknownVariable("Z".into())
    );

    let cycle = r#"{"variables":[{"name":"A","states":["0","1"]},{"name":"B","states":["0","1"]}],
        "cpts":[{"child":"A","parents":["B"],"kind":"table","table":[0.5,0.5,0.5,0.5]},
                {"child":"B","parents":["A"],"kind":"table","table":[0.5,0.5,0.5,0.5]}]}"#;
    assert!(matches!(parse_network(cycle).unwrap_err(), ModelError::Cycle(_)));

    let short = r#"{"variables":[{"name":"A","states":["0","1"]},{"name":"B","states":["0","1"]}],
        "cpts":[{"child":"A","kind":"table","table":[0.5,0.5]},
                {"child":"B","parents":["A"],"kind":"table","table":[0.5,0.5]}]}"#;
    assert!(matches!(
        parse_network(short).unwrap_err(),
        ModelError::TableLength { expected: 4, actual: 2, .. }
    ));

    let ternary_noisy = r#"{"variables":[{"name":"A","states":["0","1"]},{"name":"Y","states":["a","b","c"]}],
        "cpts":[{"child":"A","kind":"table","table":[0.5,0.5]},
                {"child":"Y","parents":["A"],"kind":"noisy_or","trigger":["1"],"inhibitor":[0.3],"leak":0}]}"#;
    assert_eq!(
        parse_network(ternary_noisy).unwrap_err(),
        ModelError::NoisyOrNotBinary("Y".into())
    );

    assert!(matches!(
        parse_network("{not json").unwrap_err(),
        ModelError::Malformed(_)
    ));

    let missing = r#"{"variables":[{"name":"A","states":["0","1"]}],"cpts":[]}"#;
    assert_eq!(
        parse_network(missing).unwrap_err(),
        ModelError::MissingCpt("A".into())
    );
}

#[test]
fn cardinality_one_is_legal() {
    let net = parse_network(
        r#"{"variables":[{"name":"K","states":["only"]}],
            "cpts":[{"child":"K","kind":"table","table":[1]}]}"#,
    )
    .unwrap();
    assert_eq!(net.cardinality(0), 1);
}

#[test]
fn noisy_or_leak_only() {
    let cpt = noisy(vec![0], vec![1], vec![0.5], 0.1);
    // parent not at its trigger state
    assert!((cpt.prob(1, &[0]) - 0.1).abs() < 1e-15);
}

#[test]
fn noisy_or_two_triggered_parents_matches_expansion() {
    let cards = [2, 2, 2];
    let cpt = noisy(vec![0, 1], vec![1, 1], vec![0.5, 0.5], 0.0);
    assert_eq!(cpt.prob(0, &[1, 1]), 0.25);
    let table = expand_to_table(&cpt, &cards, 1 << 20).unwrap();
    // rows (0,0) (0,1) (1,0) (1,1)
    assert_eq!(table.entries, vec![1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.25, 0.75]);
    for inst in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        for s in 0..2 {
            assert_eq!(table.prob(s, &inst), cpt.prob(s, &inst));
        }
    }
}

#[test]
fn expand_leak_only_prior() {
    let cpt = noisy(vec![], vec![], vec![], 0.3);
    let table = expand_to_table(&cpt, &[2], 16).unwrap();
    assert_eq!(table.entries[0], 0.7);
    assert!((table.entries[1] - 0.3).abs() < 1e-15);
}

#[test]
fn expand_ternary_parent() {
    // parent states {1,2,3}; trigger is the second state
    let cpt = noisy(vec![0], vec![1], vec![0.4], 0.0);
    let table = expand_to_table(&cpt, &[3, 2], 16).unwrap();
    assert_eq!(table.row(0), &[1.0, 0.0]);
    assert_eq!(table.row(1), &[0.4, 0.6]);
    assert_eq!(table.row(2), &[1.0, 0.0]);
}

#[test]
fn expand_respects_budget() {
    let cpt = noisy(vec![0, 1], vec![0, 0], vec![0.5, 0.5], 0.0);
    assert_eq!(
        expand_to_table(&cpt, &[3, 3, 2], 17).unwrap_err(),
        ModelError::TooLarge { needed: 18, budget: 17 }
    );
}

#[test]
fn noisy_or_storage_is_linear() {
    let net = fixtures::noisy_or_star(18, 0.0);
    // 18 priors of 3 cells + 18 triggers + 18 inhibitors + leak
    assert_eq!(net.cpt_storage_cells(), 18 * 3 + 37);
}

#[test]
fn evidence_document() {
    let net = fixtures::deterministic_example();
    let ev = parse_evidence(&net, r#"{"C":"3","A":"1"}"#).unwrap();
    assert_eq!(ev.get(2), Some(2));
    assert_eq!(ev.get(0), Some(0));
    assert_eq!(parse_evidence(&net, &serialize_evidence(&net, &ev)).unwrap(), ev);
    assert_eq!(
        parse_evidence(&net, r#"{"C":"9"}"#).unwrap_err(),
        ModelError::UnknownState { var: "C".into(), state: "9".into() }
    );
}

#[test]
fn strides_last_fastest() {
    assert_eq!(strides([2usize, 3, 4].into_iter()), vec![12, 4, 1]);
    assert_eq!(strides(std::iter::empty::<usize>()), Vec::<usize>::new());
}

proptest! {
    #[test]
    fn noisy_or_expansion_agrees_everywhere(
        cards in prop::collection::vec(1usize..=3, 0..=6),
        seed in any::<u64>(),
        leak in 0.0f64..=1.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = cards.len();
        let trigger: Vec<usize> = cards.iter().map(|&c| rng.gen_range(0..c)).collect();
        let inhibitor: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let cpt = noisy((0..k).collect(), trigger, inhibitor, leak);
        let mut all_cards = cards.clone();
        all_cards.push(2);
        let table = expand_to_table(&cpt, &all_cards, 1 << 20).unwrap();
        let mut inst = vec![0usize; k];
        loop {
            let mut a: Vec<Option<usize>> = inst.iter().map(|&s| Some(s)).collect();
            a.push(None);
            let as_table = Cpt::Table(table.clone());
            let as_noisy = Cpt::NoisyOr(cpt.clone());
            let mut sum = 0.0;
            for s in 0..2 {
                let t = as_table.prob_in(s, &a).unwrap();
                prop_assert_eq!(t, as_noisy.prob_in(s, &a).unwrap());
                sum += t;
            }
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            if !advance(&mut inst, &cards) {
                break;
            }
        }
    }

    #[test]
    fn document_round_trips(seed in any::<u64>()) {
        let params = crate::random::NetworkParams { max_vars: 8, max_states: 4, ..Default::default() };
        let net = crate::random::random_network(&params, seed);
        let text = serialize_network(&net);
        let back = parse_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(serialize_network(&back), text);
    }
}
