// Evaluating a nested query plan, operator by operator.

use nested_whynot::engine::{evaluate_all, QueryPlan};
use nested_whynot::model::Bag;
use nested_whynot::scenario::fixtures;

/// Evaluates the bundled plan and returns the root result.
pub fn run_example() -> Bag {
    let sc = fixtures::running_example();
    let plan = QueryPlan::from_json(&serde_json::from_str(fixtures::PLAN).unwrap()).unwrap();
    let all = evaluate_all(&plan, &sc.db).expect("plan evaluates");
    for id in plan.postorder() {
        println!("{id:>2} {:<14} {} tuples", plan.get(id).kind().name(), all[&id].total());
    }
    let root = all[&plan.root()].clone();
    println!("{}", root.to_json());
    root
}

#[allow(dead_code)]
fn main() {
    run_example();
}
