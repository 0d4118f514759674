use std::collections::BTreeSet;

use nested_whynot::engine::QueryPlan;
use nested_whynot::explain::{
    check_precondition, order_explanations, whynot_pipeline, BoundsBreakdown, Explanation,
};
use nested_whynot::model::Nip;
use nested_whynot::reparam::exact_explanations_oracle;
use nested_whynot::reparam::oracle::DEFAULT_BUDGET;
use nested_whynot::scenario::fixtures;
use nested_whynot::Error;
use serde_json::json;

fn expl(ops: &[u32], sa: usize, ub_plus: u64, lb_minus: u64) -> Explanation {
    Explanation {
        ops: ops.iter().copied().collect(),
        sa,
        bounds: BoundsBreakdown { lb_plus: 0, lb_minus, ub_plus, ub_minus: lb_minus },
        rank: 0,
    }
}

#[test]
fn running_example_explanations() {
    let sc = fixtures::running_example();
    let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, 16).unwrap();
    let got: Vec<(Vec<u32>, usize, usize)> = res
        .explanations
        .iter()
        .map(|e| (e.ops.iter().copied().collect(), e.sa, e.rank))
        .collect();
    assert_eq!(got, vec![(vec![3], 1, 1), (vec![2, 3], 2, 2)]);
    for e in &res.explanations {
        assert_eq!(e.bounds.ub_minus, 1);
        assert_eq!(e.lb(), 0);
    }
}

#[test]
fn running_example_distances_lie_within_bounds() {
    let sc = fixtures::running_example();
    let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, 16).unwrap();
    let oracle = exact_explanations_oracle(&sc.plan, &sc.db, &sc.whynot, DEFAULT_BUDGET).unwrap();
    for e in &res.explanations {
        let entry = oracle.get(&e.ops).expect("explanation is a successful reparameterization");
        assert!(e.lb() <= entry.d && entry.d <= e.ub(), "{:?}: {} not in [{}, {}]", e.ops, entry.d, e.lb(), e.ub());
    }
    let msrs: Vec<Vec<u32>> = oracle.msrs().map(|e| e.ops.iter().copied().collect()).collect();
    assert_eq!(msrs, vec![vec![3], vec![2, 3]]);
}

#[test]
fn ordering_prefers_fewer_operators_then_smaller_bounds() {
    let ordered = order_explanations(vec![
        expl(&[2, 3], 1, 0, 0),
        expl(&[4], 2, 5, 0),
        expl(&[3], 1, 2, 1),
        expl(&[1], 1, 3, 0),
    ]);
    let ops: Vec<Vec<u32>> = ordered.iter().map(|e| e.ops.iter().copied().collect()).collect();
    assert_eq!(ops, vec![vec![1], vec![3], vec![4], vec![2, 3]]);
    assert_eq!(ordered.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
}

#[test]
fn ordering_ties_fall_back_to_operator_ids() {
    let ordered = order_explanations(vec![expl(&[5], 2, 1, 0), expl(&[3], 1, 1, 0)]);
    assert_eq!(ordered[0].ops, BTreeSet::from([3]));
    assert_eq!(ordered[1].ops, BTreeSet::from([5]));
}

#[test]
fn answered_questions_violate_the_precondition() {
    let sc = fixtures::running_example();
    let answered = Nip::from_json(&json!({"city": "LA", "nList": [{"$star": true}]})).unwrap();
    let err = check_precondition(&sc.plan, &sc.db, &answered).unwrap_err();
    assert!(matches!(err, Error::PreconditionViolated(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(whynot_pipeline(&sc.plan, &sc.db, &answered, &sc.alternatives, 16).is_err());
}

#[test]
fn empty_result_is_explained_by_the_selection() {
    let sc = fixtures::running_example();
    let mut plan_json = sc.plan.to_json();
    plan_json[2]["params"]["predicate"]["cmp"]["rhs"]["const"] = json!(3000);
    let plan = QueryPlan::from_json(&plan_json).unwrap();
    let t = Nip::from_json(&json!({"city": "LA", "nList": [{"$any": true}, {"$star": true}]})).unwrap();
    let res = whynot_pipeline(&plan, &sc.db, &t, &sc.alternatives, 16).unwrap();
    assert!(res.original.is_empty());
    assert_eq!(res.explanations[0].ops, BTreeSet::from([3]));
    assert_eq!(res.explanations[0].bounds.ub_minus, 0);
}

#[test]
fn each_operator_set_is_reported_once() {
    let sc = fixtures::running_example();
    let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, 16).unwrap();
    let sets: BTreeSet<_> = res.explanations.iter().map(|e| e.ops.clone()).collect();
    assert_eq!(sets.len(), res.explanations.len());
    let j = res.explanations_json(&sc.plan);
    assert_eq!(j[0]["ops"], json!([{"id": 3, "kind": "selection"}]));
    assert_eq!(j[1]["bounds"]["ub_minus"], 1);
}
