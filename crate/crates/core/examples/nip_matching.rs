// Matching nested values against placeholder patterns.

use nested_whynot::model::{matches_nip, Bag, Nip, Tuple, Value};

/// Returns whether `⟨NY, {?, *}⟩` and `⟨NY, {?, ?}⟩` match a city with
/// three names (Sue twice, Peter once).
pub fn run_example() -> (bool, bool) {
    let name = |n: &str| Tuple::from_pairs([("name", n)]);
    let value = Value::Tuple(Tuple::from_pairs([
        ("city", Value::from("NY")),
        ("nList", Value::Bag(Bag::from_counted([(name("Sue"), 2), (name("Peter"), 1)]))),
    ]));
    let with_star = Nip::tuple([("city", Nip::val("NY")), ("nList", Nip::Bag(vec![Nip::Any, Nip::Star]))]);
    let two_slots = Nip::tuple([("city", Nip::val("NY")), ("nList", Nip::Bag(vec![Nip::Any, Nip::Any]))]);
    let a = matches_nip(&value, &with_star).expect("pattern fits the value");
    let b = matches_nip(&value, &two_slots).expect("pattern fits the value");
    println!("{value}");
    println!("  {with_star} -> {a}");
    println!("  {two_slots} -> {b}");
    (a, b)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
