use super::value::{type_of, Bag, Value};
use crate::error::{Error, Result};

/// Size of the symmetric bag difference of top-level tuples, counting
/// multiplicities.
pub fn result_distance(r1: &Bag, r2: &Bag) -> Result<u64> {
    let t1 = type_of(&Value::Bag(r1.clone()))?;
    let t2 = type_of(&Value::Bag(r2.clone()))?;
    if !t1.compatible(&t2) {
        return Err(Error::TypeMismatch(format!("cannot compare {t1} with {t2}")));
    }
    Ok(bag_distance(r1, r2))
}

/// Untyped version of [`result_distance`].
pub fn bag_distance(r1: &Bag, r2: &Bag) -> u64 {
    let mut d = 0;
    for (t, m) in r1.iter() {
        d += m.abs_diff(r2.multiplicity(t));
    }
    for (t, m) in r2.iter() {
        if r1.multiplicity(t) == 0 {
            d += m;
        }
    }
    d
}
