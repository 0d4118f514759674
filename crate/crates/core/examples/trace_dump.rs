// Annotated evaluation under all schema alternatives, written as JSON Lines.

use nested_whynot::explain::whynot_pipeline;
use nested_whynot::scenario::fixtures;
use nested_whynot::tracing::{dump_trace, relation_to_jsonl};

/// Dumps the trace into `dir` and returns the annotated flatten output.
pub fn run_example_in(dir: &std::path::Path) -> String {
    let sc = fixtures::running_example();
    let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, 16).expect("pipeline");
    dump_trace(&res.trace, &sc.plan, dir).expect("writable directory");
    let flatten = relation_to_jsonl(res.trace.snapshot(2), res.trace.sa_count);
    print!("{flatten}");
    flatten
}

pub fn run_example() -> String {
    run_example_in(&std::env::temp_dir().join("whynot-trace"))
}

#[allow(dead_code)]
fn main() {
    run_example();
}
