mod support;

use nested_whynot::model::{matches_nip, Nip};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matching_agrees_with_exhaustive_assignment(seed in any::<u64>()) {
        let (v, p) = support::nip_case(seed);
        prop_assert_eq!(matches_nip(&v, &p).unwrap(), support::nip_oracle(&v, &p), "{} vs {}", v, p);
    }

    #[test]
    fn every_value_matches_itself_and_any(seed in any::<u64>()) {
        let (v, _) = support::nip_case(seed);
        prop_assert!(matches_nip(&v, &Nip::Value(v.clone())).unwrap());
        prop_assert!(matches_nip(&v, &Nip::Any).unwrap());
    }

    #[test]
    fn adding_a_star_never_loses_a_match(seed in any::<u64>()) {
        let (v, p) = support::nip_case(seed);
        fn starred(p: &Nip) -> Nip {
            match p {
                Nip::Tuple(a) => Nip::Tuple(a.iter().map(|(n, q)| (n.clone(), starred(q))).collect()),
                Nip::Bag(items) if !p.has_star() => {
                    let mut items: Vec<Nip> = items.iter().map(starred).collect();
                    items.push(Nip::Star);
                    Nip::Bag(items)
                }
                Nip::Bag(items) => Nip::Bag(items.iter().map(starred).collect()),
                other => other.clone(),
            }
        }
        if matches_nip(&v, &p).unwrap() {
            prop_assert!(matches_nip(&v, &starred(&p)).unwrap());
        }
    }
}

#[test]
fn generated_cases_are_balanced() {
    let hits = (0..1000u64)
        .filter(|s| {
            let (v, p) = support::nip_case(*s);
            support::nip_oracle(&v, &p)
        })
        .count();
    assert!((100..900).contains(&hits), "{hits} of 1000 match");
}
