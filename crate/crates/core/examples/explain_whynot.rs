// Ranked why-not explanations with side-effect bounds.

use nested_whynot::explain::whynot_pipeline;
use nested_whynot::scenario::fixtures;

/// Returns `(operator ids, schema alternative, lb, ub)` in rank order.
pub fn run_example() -> Vec<(Vec<u32>, usize, u64, u64)> {
    let sc = fixtures::running_example();
    let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, 16).expect("pipeline");
    println!("{}", serde_json::to_string_pretty(&res.explanations_json(&sc.plan)).unwrap());
    res.explanations
        .iter()
        .map(|e| (e.ops.iter().copied().collect(), e.sa, e.lb(), e.ub()))
        .collect()
}

#[allow(dead_code)]
fn main() {
    run_example();
}
