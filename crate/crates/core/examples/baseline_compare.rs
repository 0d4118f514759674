// Lineage-based picky operators next to query-based explanations.

use nested_whynot::cli::{run_scenario, Mode, RunOptions};
use nested_whynot::scenario::fixtures;

pub fn run_example() -> serde_json::Value {
    let sc = fixtures::running_example();
    let (report, _) = run_scenario(&sc, Mode::Compare, &RunOptions::default()).expect("compare");
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
