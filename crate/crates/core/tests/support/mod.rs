//! Seeded generators shared by the property and acceptance tests.
#![allow(dead_code)]

pub mod engine;

use nested_whynot::alternatives::AttributeAlternatives;
use nested_whynot::engine::{
    evaluate, infer_schema, AggFn, CmpOp, Database, FlattenKind, JoinKind, OpId, Operator, Params,
    Predicate, QueryPlan,
};
use nested_whynot::model::{Bag, NestedType, Nip, PrimKind, Tuple, TupleType, Value};
use nested_whynot::reparam::oracle::result_matches;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const STRS: [&str; 3] = ["x", "y", "z"];

pub fn r_type() -> TupleType {
    TupleType::from_json(&serde_json::json!({
        "k": "int",
        "g": "string",
        "g2": "string",
        "g3": "string",
        "items": [{"c": "int", "d": "string"}],
        "extra": [{"c": "int", "d": "string"}]
    }))
    .unwrap()
}

pub fn s_type() -> TupleType {
    TupleType::from_json(&serde_json::json!({"k2": "int", "h": "string"})).unwrap()
}

fn item(rng: &mut ChaCha8Rng) -> Tuple {
    Tuple::from_pairs([
        ("c", Value::Int(rng.gen_range(1..=3))),
        ("d", Value::from(*STRS[..2].choose(rng).unwrap())),
    ])
}

fn items(rng: &mut ChaCha8Rng) -> Value {
    let n = rng.gen_range(0..=3);
    Value::Bag(Bag::from_tuples((0..n).map(|_| item(rng))))
}

pub fn r_tuple(rng: &mut ChaCha8Rng) -> Tuple {
    Tuple::from_pairs([
        ("k", Value::Int(rng.gen_range(1..=3))),
        ("g", Value::from(*STRS.choose(rng).unwrap())),
        ("g2", Value::from(*STRS.choose(rng).unwrap())),
        ("g3", Value::from(*STRS.choose(rng).unwrap())),
        ("items", items(rng)),
        ("extra", items(rng)),
    ])
}

pub fn s_tuple(rng: &mut ChaCha8Rng) -> Tuple {
    Tuple::from_pairs([
        ("k2", Value::Int(rng.gen_range(1..=3))),
        ("h", Value::from(*STRS.choose(rng).unwrap())),
    ])
}

/// Relations `r` and `s` with at most `max` tuples in total.
pub fn database(rng: &mut ChaCha8Rng, max: usize) -> Database {
    let nr = rng.gen_range(1..=max * 2 / 3);
    let ns = rng.gen_range(1..=(max - nr).max(1));
    let r = Bag::from_tuples((0..nr).map(|_| r_tuple(rng)));
    let s = Bag::from_tuples((0..ns).map(|_| s_tuple(rng)));
    Database::new()
        .with("r", r_type(), r)
        .unwrap()
        .with("s", s_type(), s)
        .unwrap()
}

fn prims(ty: &TupleType) -> Vec<(String, PrimKind)> {
    ty.attrs()
        .iter()
        .filter_map(|(n, t)| t.prim().map(|k| (n.clone(), k)))
        .collect()
}

fn bags(ty: &TupleType) -> Vec<String> {
    ty.attrs()
        .iter()
        .filter(|(_, t)| t.is_bag())
        .map(|(n, _)| n.clone())
        .collect()
}

fn random_pred(rng: &mut ChaCha8Rng, ty: &TupleType) -> Option<Predicate> {
    let ps = prims(ty);
    let (name, kind) = ps.choose(rng)?.clone();
    Some(match kind {
        PrimKind::Int => {
            let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge].choose(rng).unwrap();
            Predicate::attr_const(&name, op, rng.gen_range(1..=3i64))
        }
        _ => {
            let op = *[CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
            Predicate::attr_const(&name, op, *STRS.choose(rng).unwrap())
        }
    })
}

fn subset(rng: &mut ChaCha8Rng, names: &[String], proper: bool) -> Vec<String> {
    loop {
        let s: Vec<String> = names.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if !s.is_empty() && (!proper || s.len() < names.len()) {
            return s;
        }
    }
}

/// Unary operator applicable to `ty`, if the dice find one.
fn unary(rng: &mut ChaCha8Rng, ty: &TupleType, fresh: &str) -> Option<Params> {
    let names: Vec<String> = ty.names().map(str::to_string).collect();
    let prim_names: Vec<String> = prims(ty).into_iter().map(|(n, _)| n).collect();
    match rng.gen_range(0..9) {
        0 | 1 => {
            let attr = bags(ty).choose(rng)?.clone();
            let kind = if rng.gen_bool(0.5) { FlattenKind::Inner } else { FlattenKind::Outer };
            Some(Params::Flatten { kind, attr: attr.as_str().into() })
        }
        2 | 3 => Some(Params::Selection { pred: random_pred(rng, ty)? }),
        4 => Some(Params::Projection { attrs: subset(rng, &names, false) }),
        5 if prim_names.len() >= 2 => Some(Params::RelationNest {
            attrs: subset(rng, &prim_names, true),
            target: fresh.into(),
        }),
        6 => Some(Params::Dedup),
        7 => {
            let from = prim_names.choose(rng)?.clone();
            Some(Params::Renaming { pairs: vec![(from.clone(), format!("{from}_r"))] })
        }
        8 => {
            let source = bags(ty).choose(rng)?.clone();
            Some(Params::Aggregation { func: AggFn::Count, source: source.as_str().into(), target: fresh.into() })
        }
        _ => None,
    }
}

/// Random plan over `r` (and sometimes `s`) with at most `max_ops` operators.
pub fn plan(rng: &mut ChaCha8Rng, db: &Database, max_ops: usize) -> QueryPlan {
    let schema = db.schema();
    loop {
        let mut ops = vec![Operator::new(1, Params::Table { name: "r".into() }, vec![])];
        let mut next: OpId = 2;
        let mut top: OpId = 1;
        let target = rng.gen_range(2..=max_ops);
        if target >= 4 && rng.gen_ratio(1, 5) {
            // r ∪ σ(r) or r − σ(r)
            let pred = random_pred(rng, &r_type()).unwrap();
            let set_op = if rng.gen_bool(0.5) { Params::Union } else { Params::Difference };
            ops.push(Operator::new(2, Params::Table { name: "r".into() }, vec![]));
            ops.push(Operator::new(3, Params::Selection { pred }, vec![2]));
            ops.push(Operator::new(4, set_op, vec![1, 3]));
            top = 4;
            next = 5;
        }
        let mut tries = 0;
        while ops.len() < target && tries < 30 {
            tries += 1;
            let current = QueryPlan::new(ops.clone()).unwrap();
            let ty = infer_schema(&current, &schema).unwrap()[&top].clone();
            let mut added = Vec::new();
            if rng.gen_ratio(1, 6) && ops.len() + 2 <= target && ty.contains("k") {
                let kind = *[JoinKind::Inner, JoinKind::Left, JoinKind::Right, JoinKind::Full]
                    .choose(rng)
                    .unwrap();
                let op = *[CmpOp::Eq, CmpOp::Lt].choose(rng).unwrap();
                let pred = Predicate::cmp(
                    nested_whynot::engine::Operand::attr("k"),
                    op,
                    nested_whynot::engine::Operand::attr("k2"),
                );
                added.push(Operator::new(next, Params::Table { name: "s".into() }, vec![]));
                added.push(Operator::new(next + 1, Params::Join { kind, pred }, vec![top, next]));
            } else if let Some(p) = unary(rng, &ty, &format!("n{next}")) {
                added.push(Operator::new(next, p, vec![top]));
            }
            if added.is_empty() {
                continue;
            }
            let mut candidate = ops.clone();
            candidate.extend(added.iter().cloned());
            let Ok(plan) = QueryPlan::new(candidate.clone()) else { continue };
            if infer_schema(&plan, &schema).is_ok() {
                ops = candidate;
                top = added.last().unwrap().id;
                next = top + 1;
            }
        }
        if ops.len() >= 2 {
            return QueryPlan::new(ops).unwrap();
        }
    }
}

/// Alternatives over `r`: the two item collections are interchangeable,
/// and sometimes so are `g` and `g2`; or `g` has two alternatives.
pub fn alternatives(rng: &mut ChaCha8Rng) -> AttributeAlternatives {
    if rng.gen_bool(0.3) {
        return AttributeAlternatives::new().with("g", &["g2", "g3"]);
    }
    let mut a = AttributeAlternatives::new()
        .with("items", &["extra"])
        .with("items.c", &["extra.c"])
        .with("items.d", &["extra.d"]);
    if rng.gen_bool(0.3) {
        a = a.with("g", &["g2"]);
    }
    a
}

/// Pattern that `v` matches, with some positions loosened to `?` or `*`.
pub fn loosen(rng: &mut ChaCha8Rng, v: &Value, ty: &NestedType) -> Nip {
    if rng.gen_ratio(1, 4) {
        return Nip::Any;
    }
    match (v, ty) {
        (Value::Tuple(t), NestedType::Tuple(tt)) => Nip::Tuple(
            tt.attrs()
                .iter()
                .map(|(n, aty)| (n.clone(), loosen(rng, t.get(n).unwrap(), aty)))
                .collect(),
        ),
        (Value::Bag(b), NestedType::Bag(elem)) => {
            let elem_ty = (**elem).clone();
            let mut items = Vec::new();
            for t in b.occurrences() {
                if rng.gen_bool(0.5) {
                    items.push(loosen(rng, &Value::Tuple(t.clone()), &elem_ty));
                }
            }
            if items.len() < b.total() as usize || rng.gen_bool(0.5) {
                items.push(Nip::Star);
            }
            Nip::Bag(items)
        }
        _ => Nip::Value(v.clone()),
    }
}

/// A root-type pattern the original result does not match, built from a
/// tuple of `alt_result`.
pub fn missing_question(
    rng: &mut ChaCha8Rng,
    original: &Bag,
    alt_result: &Bag,
    root: &TupleType,
) -> Option<Nip> {
    let candidates: Vec<&Tuple> = alt_result.iter().map(|(t, _)| t).filter(|t| original.multiplicity(t) == 0).collect();
    let ty = NestedType::Tuple(root.clone());
    for _ in 0..20 {
        let t = candidates.choose(rng)?;
        let p = loosen(rng, &Value::Tuple((*t).clone()), &ty);
        let p = if p.is_any() { Nip::Value(Value::Tuple((*t).clone())) } else { p };
        if !result_matches(original, &p) {
            return Some(p);
        }
    }
    None
}

/// Question for a traced run: loosened from the original result, or all `?`.
pub fn any_question(rng: &mut ChaCha8Rng, plan: &QueryPlan, db: &Database) -> Nip {
    let root = infer_schema(plan, &db.schema()).unwrap()[&plan.root()].clone();
    let res = evaluate(plan, db).unwrap();
    match res.occurrences().choose(rng) {
        Some(t) => match loosen(rng, &Value::Tuple((*t).clone()), &NestedType::Tuple(root.clone())) {
            Nip::Any => Nip::any_tuple(&root),
            p => p,
        },
        None => Nip::any_tuple(&root),
    }
}

/// Schema alternatives for `t`, dropping the optional `g` alternative when
/// there would be more than `max`.
pub fn small_sas(
    plan: &QueryPlan,
    db: &Database,
    t: &Nip,
    alts: &AttributeAlternatives,
    max: usize,
) -> Vec<nested_whynot::alternatives::SchemaAlternative> {
    use nested_whynot::alternatives::enumerate_sas;
    let schema = db.schema();
    match enumerate_sas(plan, &schema, t, alts, max) {
        Ok(s) => s,
        Err(_) => {
            let fewer = AttributeAlternatives::new()
                .with("items", &["extra"])
                .with("items.c", &["extra.c"])
                .with("items.d", &["extra.d"]);
            enumerate_sas(plan, &schema, t, &fewer, max).unwrap()
        }
    }
}

/// Traces a random instance and compares every operator's strict bag per
/// alternative with plain evaluation of the substituted plan.
pub fn check_faithful(seed: u64) -> Result<usize, String> {
    use nested_whynot::backtrace::check_question;
    use nested_whynot::engine::evaluate_all;
    use nested_whynot::tracing::trace;
    let mut rng = rng(seed);
    let db = database(&mut rng, 20);
    let plan = plan(&mut rng, &db, 6);
    let alts = alternatives(&mut rng);
    let t = any_question(&mut rng, &plan, &db);
    let t = check_question(&plan, &db.schema(), &t).map_err(|e| e.to_string())?;
    let sas = small_sas(&plan, &db, &t, &alts, 3);
    let tr = trace(&plan, &db, &sas).map_err(|e| format!("{e} on {}", plan.to_json()))?;
    for sa in &sas {
        let expected = evaluate_all(&sa.plan, &db).map_err(|e| e.to_string())?;
        for id in plan.postorder() {
            let got = tr.snapshot(id).strict_bag(sa.index);
            if got != expected[&id] {
                return Err(format!(
                    "seed {seed}: op {id} under S{}: traced {} vs evaluated {}\nplan {}",
                    sa.index,
                    got.to_json(),
                    expected[&id].to_json(),
                    sa.plan.to_json()
                ));
            }
        }
    }
    Ok(sas.len())
}

pub const SOUNDNESS_BUDGET: u128 = 20_000;

/// Outcome of one soundness instance: `Ok(None)` when the seed gave no
/// usable instance, else the number of explanations checked.
pub fn check_sound(seed: u64) -> Result<Option<usize>, String> {
    use nested_whynot::explain::whynot_pipeline;
    use nested_whynot::reparam::{enumerate_reparameterizations, exact_explanations_oracle, ActiveDomain};
    let mut rng = rng(seed);
    let db = database(&mut rng, 12);
    let plan = plan(&mut rng, &db, 5);
    let alts = alternatives(&mut rng);
    let schema = db.schema();
    let adom = ActiveDomain::from_database(&db, &plan);
    let Ok(cands) = enumerate_reparameterizations(&plan, &schema, &adom, SOUNDNESS_BUDGET) else {
        return Ok(None);
    };
    let original = evaluate(&plan, &db).unwrap();
    let root = infer_schema(&plan, &schema).unwrap()[&plan.root()].clone();
    let mut order: Vec<usize> = (1..cands.len()).collect();
    order.shuffle(&mut rng);
    let mut question = None;
    for i in order.into_iter().take(40) {
        let Ok(res) = evaluate(&cands[i], &db) else { continue };
        if let Some(t) = missing_question(&mut rng, &original, &res, &root) {
            question = Some(t);
            break;
        }
    }
    let Some(t) = question else { return Ok(None) };
    let res = match whynot_pipeline(&plan, &db, &t, &alts, 3) {
        Ok(r) => r,
        Err(nested_whynot::Error::TooManyAlternatives { .. }) => return Ok(None),
        Err(e) => return Err(format!("seed {seed}: pipeline failed: {e}")),
    };
    let oracle = exact_explanations_oracle(&plan, &db, &t, SOUNDNESS_BUDGET).map_err(|e| e.to_string())?;
    for e in &res.explanations {
        let Some(entry) = oracle.get(&e.ops) else {
            return Err(format!(
                "seed {seed}: explanation {:?} (S{}) is not a successful reparameterization\nplan {}\nwhy-not {t}",
                e.ops,
                e.sa,
                plan.to_json()
            ));
        };
        if entry.d < e.lb() || entry.d > e.ub() {
            return Err(format!(
                "seed {seed}: {:?} has d = {} outside [{}, {}]\nplan {}\nwhy-not {t}",
                e.ops,
                entry.d,
                e.lb(),
                e.ub(),
                plan.to_json()
            ));
        }
    }
    Ok(Some(res.explanations.len()))
}

fn nested_type(rng: &mut ChaCha8Rng, depth: u32) -> TupleType {
    let n = rng.gen_range(1..=3);
    let attrs = (0..n)
        .map(|i| {
            let ty = match rng.gen_range(0..3) {
                0 => NestedType::int(),
                1 => NestedType::string(),
                _ if depth > 0 => NestedType::bag_of(nested_type(rng, depth - 1)),
                _ => NestedType::int(),
            };
            (format!("a{i}"), ty)
        })
        .collect();
    TupleType::new(attrs).unwrap()
}

fn value_of(rng: &mut ChaCha8Rng, ty: &NestedType, budget: &mut usize) -> Value {
    match ty {
        NestedType::Tuple(tt) => Value::Tuple(Tuple::new(
            tt.attrs().iter().map(|(n, t)| (n.clone(), value_of(rng, t, budget))).collect(),
        ).unwrap()),
        NestedType::Bag(elem) => {
            let n = rng.gen_range(0..=(*budget).min(3));
            *budget -= n;
            let mut b = Bag::new();
            for _ in 0..n {
                if let Value::Tuple(t) = value_of(rng, elem, budget) {
                    b.insert(t, 1);
                }
            }
            Value::Bag(b)
        }
        _ if ty.prim() == Some(PrimKind::Int) => Value::Int(rng.gen_range(0..2)),
        _ => Value::from(*["a", "b"].choose(rng).unwrap()),
    }
}

fn pattern_for(rng: &mut ChaCha8Rng, v: &Value, ty: &NestedType) -> Nip {
    match rng.gen_range(0..20) {
        0..=3 => return Nip::Any,
        4..=5 => return Nip::Value(v.clone()),
        6 => return Nip::Value(value_of(rng, ty, &mut 2)),
        _ => {}
    }
    match (v, ty) {
        (Value::Tuple(t), NestedType::Tuple(tt)) => Nip::Tuple(
            tt.attrs()
                .iter()
                .map(|(n, aty)| (n.clone(), pattern_for(rng, t.get(n).unwrap(), aty)))
                .collect(),
        ),
        (Value::Bag(b), NestedType::Bag(elem)) => {
            let mut items = Vec::new();
            for t in b.occurrences() {
                if rng.gen_bool(0.7) {
                    items.push(pattern_for(rng, &Value::Tuple(t.clone()), elem));
                }
            }
            if rng.gen_bool(0.3) {
                let fresh = value_of(rng, elem, &mut 1);
                items.push(pattern_for(rng, &fresh, elem));
            }
            if rng.gen_bool(0.5) {
                items.push(Nip::Star);
            }
            items.shuffle(rng);
            Nip::Bag(items)
        }
        _ => Nip::Value(v.clone()),
    }
}

/// A random nested tuple (bags hold at most 5 tuples in total) and a
/// pattern of the same type.
pub fn nip_case(seed: u64) -> (Value, Nip) {
    let mut rng = rng(seed);
    let ty = NestedType::Tuple(nested_type(&mut rng, 2));
    let v = value_of(&mut rng, &ty, &mut 5);
    let p = pattern_for(&mut rng, &v, &ty);
    (v, p)
}

/// Matching by trying every assignment of pattern elements to bag
/// occurrences.
pub fn nip_oracle(v: &Value, p: &Nip) -> bool {
    match p {
        Nip::Any => true,
        Nip::Star => false,
        Nip::Value(x) => x == v,
        Nip::Tuple(attrs) => match v {
            Value::Tuple(t) => {
                t.len() == attrs.len()
                    && attrs.iter().all(|(n, q)| t.get(n).is_some_and(|x| nip_oracle(x, q)))
            }
            _ => false,
        },
        Nip::Bag(items) => {
            let Value::Bag(b) = v else { return false };
            let occ: Vec<Value> = b.occurrences().into_iter().map(|t| Value::Tuple(t.clone())).collect();
            let star = items.iter().any(|q| matches!(q, Nip::Star));
            let pats: Vec<&Nip> = items.iter().filter(|q| !matches!(q, Nip::Star)).collect();
            if pats.len() > occ.len() || (!star && pats.len() != occ.len()) {
                return false;
            }
            fn assign(pats: &[&Nip], occ: &[Value], used: &mut Vec<bool>) -> bool {
                let Some((first, rest)) = pats.split_first() else { return true };
                for i in 0..occ.len() {
                    if !used[i] && nip_oracle(&occ[i], first) {
                        used[i] = true;
                        if assign(rest, occ, used) {
                            return true;
                        }
                        used[i] = false;
                    }
                }
                false
            }
            assign(&pats, &occ, &mut vec![false; occ.len()])
        }
    }
}
