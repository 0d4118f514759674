// Brute-force search over reparameterizations for the minimal successful ones.

use nested_whynot::reparam::oracle::{exact_explanations_oracle, DEFAULT_BUDGET};
use nested_whynot::scenario::fixtures;

/// Returns `(changed operators, distance)` for every minimal successful
/// reparameterization of the bundled example.
pub fn run_example() -> Vec<(Vec<u32>, u64)> {
    let sc = fixtures::running_example();
    let res = exact_explanations_oracle(&sc.plan, &sc.db, &sc.whynot, DEFAULT_BUDGET).expect("within budget");
    println!("{} candidate plans", res.candidates);
    let mut out = Vec::new();
    for e in res.msrs() {
        let ops: Vec<u32> = e.ops.iter().copied().collect();
        println!("ops {ops:?} d = {}", e.d);
        out.push((ops, e.d));
    }
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
