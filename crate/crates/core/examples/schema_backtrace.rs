// Pushing a why-not question down to the base relations.

use nested_whynot::backtrace::{check_question, schema_backtrace};
use nested_whynot::scenario::fixtures;

/// Returns the pattern on `person` and the JSON association list.
pub fn run_example() -> (String, serde_json::Value) {
    let sc = fixtures::running_example();
    let schema = sc.db.schema();
    let t = check_question(&sc.plan, &schema, &sc.whynot).expect("question fits the query");
    let bt = schema_backtrace(&sc.plan, &schema, &t).expect("backtrace");
    let person = bt.nips["person"].to_string();
    println!("person: {person}");
    for (op, nip) in &bt.op_nips {
        println!("  after {op}: {nip}");
    }
    let json = bt.to_json(&sc.plan);
    println!("{}", serde_json::to_string_pretty(&json["assoc"]).unwrap());
    (person, json)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
