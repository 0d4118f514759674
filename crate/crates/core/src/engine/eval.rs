use std::collections::{BTreeMap, HashMap};

use super::plan::{AggFn, FlattenKind, JoinKind, OpId, Operator, Params, QueryPlan};
use super::predicate::Predicate;
use super::schema::{infer_schema, Database};
use crate::error::{Error, Result};
use crate::model::{AttrPath, Bag, Tuple, TupleType, Value};

/// Result of the whole plan.
pub fn evaluate(plan: &QueryPlan, db: &Database) -> Result<Bag> {
    let mut all = evaluate_all(plan, db)?;
    Ok(all.remove(&plan.root()).expect("root is evaluated"))
}

/// Result of every operator, bottom-up.
pub fn evaluate_all(plan: &QueryPlan, db: &Database) -> Result<BTreeMap<OpId, Bag>> {
    let types = infer_schema(plan, &db.schema())?;
    let mut out: BTreeMap<OpId, Bag> = BTreeMap::new();
    for id in plan.postorder() {
        let op = plan.get(id);
        let inputs: Vec<&Bag> = op.inputs.iter().map(|i| &out[i]).collect();
        let in_types: Vec<&TupleType> = op.inputs.iter().map(|i| &types[i]).collect();
        let bag = eval_op(op, &inputs, &in_types, db)?;
        out.insert(id, bag);
    }
    Ok(out)
}

/// Evaluates one operator over already computed inputs.
pub fn eval_op(op: &Operator, inputs: &[&Bag], in_types: &[&TupleType], db: &Database) -> Result<Bag> {
    match &op.params {
        Params::Table { name } => Ok(db.relation(name)?.clone()),
        Params::Projection { attrs } => {
            let mut out = Bag::new();
            for (t, k) in inputs[0].iter() {
                out.insert(t.project(attrs), k);
            }
            Ok(out)
        }
        Params::Renaming { pairs } => {
            let mut out = Bag::new();
            for (t, k) in inputs[0].iter() {
                out.insert(rename_tuple(t, pairs), k);
            }
            Ok(out)
        }
        Params::Selection { pred } => Ok(inputs[0]
            .iter()
            .filter(|(t, _)| pred.eval(t))
            .map(|(t, k)| (t.clone(), k))
            .collect()),
        Params::Join { kind, pred } => Ok(join(
            inputs[0],
            inputs[1],
            *kind,
            pred,
            in_types[0],
            in_types[1],
        )),
        Params::Cross => Ok(join(
            inputs[0],
            inputs[1],
            JoinKind::Inner,
            &Predicate::True,
            in_types[0],
            in_types[1],
        )),
        Params::Flatten { kind, attr } => {
            let elem = flatten_element_type(in_types[0], *kind, attr)?;
            let mut out = Bag::new();
            for (t, k) in inputs[0].iter() {
                for (row, l, padded) in flatten_tuple(t, *kind, attr, &elem) {
                    if padded && *kind == FlattenKind::Inner {
                        continue;
                    }
                    out.insert(row, k * l);
                }
            }
            Ok(out)
        }
        Params::TupleNest { attrs, target } => {
            let mut out = Bag::new();
            for (t, k) in inputs[0].iter() {
                let mut row = t.without(attrs);
                row.push(target.clone(), Value::Tuple(t.project(attrs)));
                out.insert(row, k);
            }
            Ok(out)
        }
        Params::RelationNest { attrs, target } => {
            let mut groups: BTreeMap<Tuple, Bag> = BTreeMap::new();
            for (t, k) in inputs[0].iter() {
                groups
                    .entry(t.without(attrs))
                    .or_default()
                    .insert(t.project(attrs), k);
            }
            Ok(groups
                .into_iter()
                .map(|(mut key, members)| {
                    key.push(target.clone(), Value::Bag(members));
                    (key, 1)
                })
                .collect())
        }
        Params::Aggregation { func, source, target } => {
            let mut out = Bag::new();
            for (t, k) in inputs[0].iter() {
                let v = aggregate(*func, t.get_path(source))?;
                let mut row = t.clone();
                row.push(target.clone(), v);
                out.insert(row, k);
            }
            Ok(out)
        }
        Params::Union => {
            let names: Vec<&str> = in_types[0].names().collect();
            let mut out = inputs[0].clone();
            for (t, k) in inputs[1].iter() {
                out.insert(t.with_names(names.iter().copied()), k);
            }
            Ok(out)
        }
        Params::Difference => {
            let names: Vec<&str> = in_types[0].names().collect();
            let right: Bag = inputs[1]
                .iter()
                .map(|(t, k)| (t.with_names(names.iter().copied()), k))
                .collect();
            Ok(inputs[0]
                .iter()
                .map(|(t, k)| (t.clone(), k.saturating_sub(right.multiplicity(t))))
                .collect())
        }
        Params::Dedup => Ok(inputs[0].dedup()),
    }
}

pub fn rename_tuple(t: &Tuple, pairs: &[(String, String)]) -> Tuple {
    let names: Vec<&str> = t
        .names()
        .map(|n| {
            pairs
                .iter()
                .find(|(f, _)| f == n)
                .map(|(_, to)| to.as_str())
                .unwrap_or(n)
        })
        .collect();
    t.with_names(names)
}

/// Element type a flatten concatenates to its input.
pub fn flatten_element_type(input: &TupleType, kind: FlattenKind, attr: &AttrPath) -> Result<TupleType> {
    let ty = input
        .resolve(attr)
        .ok_or_else(|| Error::UnknownAttribute(attr.to_string()))?;
    let elem = match kind {
        FlattenKind::Tuple => ty.as_tuple(),
        _ => ty.bag_element(),
    };
    elem.cloned()
        .ok_or_else(|| Error::KindMismatch(format!("cannot flatten `{attr}` of type {ty}")))
}

/// Rows produced by flattening one tuple as an outer flatten: `(row, factor,
/// padded)` where the row's multiplicity is the input's times `factor` and
/// `padded` marks the null-padded row of an empty or missing collection.
pub fn flatten_tuple(
    t: &Tuple,
    kind: FlattenKind,
    attr: &AttrPath,
    elem: &TupleType,
) -> Vec<(Tuple, u64, bool)> {
    let v = t.get_path(attr).unwrap_or(&Value::Null);
    match (kind, v) {
        (FlattenKind::Tuple, Value::Tuple(u)) => vec![(t.concat(u), 1, false)],
        (FlattenKind::Inner | FlattenKind::Outer, Value::Bag(b)) if !b.is_empty() => {
            b.iter().map(|(u, l)| (t.concat(u), l, false)).collect()
        }
        _ => vec![(t.concat(&Tuple::nulls(elem)), 1, true)],
    }
}

/// Aggregates the single attribute of a bag of unary tuples. `⊥` values are
/// ignored; a missing or `⊥` bag counts as empty.
pub fn aggregate(func: AggFn, source: Option<&Value>) -> Result<Value> {
    let bag = match source {
        Some(Value::Bag(b)) => Some(b),
        Some(Value::Null) | None => None,
        Some(other) => return Err(Error::AggregationOnNonBag(other.to_string())),
    };
    let values: Vec<(&Value, u64)> = bag
        .map(|b| {
            b.iter()
                .filter_map(|(t, m)| t.fields().first().map(|(_, v)| (v, m)))
                .filter(|(v, _)| !v.is_null())
                .collect()
        })
        .unwrap_or_default();
    let count: u64 = values.iter().map(|(_, m)| m).sum();
    let sum = || -> i64 {
        values
            .iter()
            .map(|(v, m)| v.as_int().unwrap_or(0).saturating_mul(*m as i64))
            .fold(0i64, i64::saturating_add)
    };
    Ok(match func {
        AggFn::Count => Value::Int(count as i64),
        AggFn::Sum => Value::Int(sum()),
        // integer division, truncating toward zero
        AggFn::Avg if count == 0 => Value::Null,
        AggFn::Avg => Value::Int(sum() / count as i64),
        AggFn::Min => values
            .iter()
            .map(|(v, _)| *v)
            .min_by(|a, b| a.compare(b).unwrap_or(std::cmp::Ordering::Equal))
            .cloned()
            .unwrap_or(Value::Null),
        AggFn::Max => values
            .iter()
            .map(|(v, _)| *v)
            .max_by(|a, b| a.compare(b).unwrap_or(std::cmp::Ordering::Equal))
            .cloned()
            .unwrap_or(Value::Null),
    })
}

/// Pairs `(i, j)` of left and right tuples whose concatenation satisfies
/// `pred`. Attribute equalities across the two sides are hashed; everything
/// else is checked per candidate pair.
pub fn join_pairs(
    left: &[&Tuple],
    right: &[&Tuple],
    pred: &Predicate,
    left_ty: &TupleType,
) -> Vec<(usize, usize)> {
    let mut keys: Vec<(&AttrPath, &AttrPath)> = Vec::new();
    for (a, b) in pred.equi_pairs() {
        match (left_ty.resolve(a).is_some(), left_ty.resolve(b).is_some()) {
            (true, false) => keys.push((a, b)),
            (false, true) => keys.push((b, a)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    if keys.is_empty() {
        for (i, l) in left.iter().enumerate() {
            for (j, r) in right.iter().enumerate() {
                if pred.eval(&l.concat(r)) {
                    out.push((i, j));
                }
            }
        }
        return out;
    }
    let key_of = |t: &Tuple, left_side: bool| -> Option<Vec<Value>> {
        let mut k = Vec::with_capacity(keys.len());
        for (a, b) in &keys {
            let v = t.get_path(if left_side { a } else { b })?;
            if v.is_null() {
                return None;
            }
            k.push(v.clone());
        }
        Some(k)
    };
    let mut index: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (j, r) in right.iter().enumerate() {
        if let Some(k) = key_of(r, false) {
            index.entry(k).or_default().push(j);
        }
    }
    for (i, l) in left.iter().enumerate() {
        let Some(k) = key_of(l, true) else { continue };
        if let Some(js) = index.get(&k) {
            for &j in js {
                if pred.eval(&l.concat(right[j])) {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

fn join(
    l: &Bag,
    r: &Bag,
    kind: JoinKind,
    pred: &Predicate,
    left_ty: &TupleType,
    right_ty: &TupleType,
) -> Bag {
    let left: Vec<(&Tuple, u64)> = l.iter().collect();
    let right: Vec<(&Tuple, u64)> = r.iter().collect();
    let lt: Vec<&Tuple> = left.iter().map(|(t, _)| *t).collect();
    let rt: Vec<&Tuple> = right.iter().map(|(t, _)| *t).collect();
    let pairs = join_pairs(&lt, &rt, pred, left_ty);
    let mut out = Bag::new();
    let mut l_hit = vec![false; left.len()];
    let mut r_hit = vec![false; right.len()];
    for (i, j) in pairs {
        l_hit[i] = true;
        r_hit[j] = true;
        out.insert(left[i].0.concat(right[j].0), left[i].1 * right[j].1);
    }
    if kind.keeps_left() {
        let pad = Tuple::nulls(right_ty);
        for (i, (t, k)) in left.iter().enumerate() {
            if !l_hit[i] {
                out.insert(t.concat(&pad), *k);
            }
        }
    }
    if kind.keeps_right() {
        let pad = Tuple::nulls(left_ty);
        for (j, (t, k)) in right.iter().enumerate() {
            if !r_hit[j] {
                out.insert(pad.concat(t), *k);
            }
        }
    }
    out
}
