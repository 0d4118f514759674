// Enumerating schema alternatives from attribute alternatives.

use nested_whynot::alternatives::{enumerate_sas, AttributeAlternatives, DEFAULT_MAX_SAS};
use nested_whynot::backtrace::check_question;
use nested_whynot::scenario::fixtures;

/// Returns the pattern on `person` for every schema alternative.
pub fn run_example() -> Vec<String> {
    let sc = fixtures::running_example();
    let schema = sc.db.schema();
    let alts = AttributeAlternatives::new()
        .with("address2", &["address1"])
        .with("address2.city", &["address1.city"])
        .with("address2.year", &["address1.year"]);
    let t = check_question(&sc.plan, &schema, &sc.whynot).unwrap();
    let sas = enumerate_sas(&sc.plan, &schema, &t, &alts, DEFAULT_MAX_SAS).expect("few alternatives");
    sas.iter()
        .map(|s| {
            println!("S{}: {}", s.index, s.to_json());
            s.nips()["person"].to_string()
        })
        .collect()
}

#[allow(dead_code)]
fn main() {
    run_example();
}
