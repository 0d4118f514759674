//! Engine properties over one seeded random instance each.

use nested_whynot::engine::{
    evaluate, evaluate_all, infer_schema, CmpOp, Database, FlattenKind, JoinKind, Operand,
    Operator, Params, Predicate, QueryPlan,
};
use nested_whynot::model::{AttrPath, Bag, Tuple, Value};

type Check = Result<(), String>;

fn bag_size(t: &Tuple, attr: &AttrPath) -> u64 {
    t.get_path(attr).and_then(Value::as_bag).map_or(0, Bag::total)
}

fn check_counts(op: &Operator, out: &Bag, ins: &[&Bag], db: &Database) -> Check {
    let ok = match &op.params {
        Params::Table { name } => out == db.relation(name).unwrap(),
        Params::Projection { .. }
        | Params::Renaming { .. }
        | Params::TupleNest { .. }
        | Params::Aggregation { .. } => out.total() == ins[0].total(),
        Params::Selection { .. } => out.total() <= ins[0].total(),
        Params::Flatten { kind, attr } => {
            let expected: u64 = ins[0]
                .iter()
                .map(|(t, m)| {
                    let n = bag_size(t, attr);
                    m * if *kind == FlattenKind::Outer { n.max(1) } else { n }
                })
                .sum();
            out.total() == expected
        }
        Params::RelationNest { target, .. } => {
            let nested: u64 = out
                .iter()
                .map(|(t, m)| m * bag_size(t, &target.as_str().into()))
                .sum();
            nested == ins[0].total() && out.iter().all(|(_, m)| m == 1)
        }
        Params::Dedup => out.total() == ins[0].distinct() as u64,
        Params::Union => out.total() == ins[0].total() + ins[1].total(),
        Params::Difference => {
            out.total() <= ins[0].total() && out.total() + ins[1].total() >= ins[0].total()
        }
        Params::Cross => out.total() == ins[0].total() * ins[1].total(),
        Params::Join { kind, .. } => {
            let (l, r) = (ins[0].total(), ins[1].total());
            let lower = match kind {
                JoinKind::Inner => 0,
                JoinKind::Left => l,
                JoinKind::Right => r,
                JoinKind::Full => l.max(r),
            };
            out.total() >= lower && out.total() <= l * r + l + r
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("op {} ({}) gave {} tuples", op.id, op.kind().name(), out.total()))
    }
}

fn extend(plan: &QueryPlan, params: Params) -> QueryPlan {
    let mut ops: Vec<Operator> = plan.ops().cloned().collect();
    let id = plan.ids().max().unwrap() + 1;
    ops.push(Operator::new(id, params, vec![plan.root()]));
    QueryPlan::new(ops).unwrap()
}

fn instance(seed: u64, max_ops: usize) -> (Database, QueryPlan) {
    let mut rng = super::rng(seed);
    let db = super::database(&mut rng, 20);
    let plan = super::plan(&mut rng, &db, max_ops);
    (db, plan)
}

/// Output sizes follow from input sizes operator by operator.
pub fn multiplicities_conserved(seed: u64) -> Check {
    let (db, plan) = instance(seed, 6);
    let all = evaluate_all(&plan, &db).unwrap();
    for op in plan.ops() {
        let ins: Vec<&Bag> = op.inputs.iter().map(|i| &all[i]).collect();
        check_counts(op, &all[&op.id], &ins, &db).map_err(|e| format!("seed {seed}: {e} in {}", plan.to_json()))?;
    }
    Ok(())
}

pub fn join_is_selection_over_cross(seed: u64) -> Check {
    let (db, _) = instance(seed, 2);
    for op in [CmpOp::Eq, CmpOp::Lt, CmpOp::Ne] {
        let pred = Predicate::cmp(Operand::attr("k"), op, Operand::attr("k2"));
        let tables = || {
            vec![
                Operator::new(1, Params::Table { name: "r".into() }, vec![]),
                Operator::new(2, Params::Table { name: "s".into() }, vec![]),
            ]
        };
        let mut join = tables();
        join.push(Operator::new(3, Params::Join { kind: JoinKind::Inner, pred: pred.clone() }, vec![1, 2]));
        let mut cross = tables();
        cross.push(Operator::new(3, Params::Cross, vec![1, 2]));
        cross.push(Operator::new(4, Params::Selection { pred }, vec![3]));
        let a = evaluate(&QueryPlan::new(join).unwrap(), &db).unwrap();
        let b = evaluate(&QueryPlan::new(cross).unwrap(), &db).unwrap();
        if a != b {
            return Err(format!("seed {seed}: join on {} differs from selection over cross", op.symbol()));
        }
    }
    Ok(())
}

pub fn dedup_idempotent(seed: u64) -> Check {
    let (db, plan) = instance(seed, 6);
    let once = extend(&plan, Params::Dedup);
    let twice = extend(&once, Params::Dedup);
    let a = evaluate(&once, &db).unwrap();
    if a.iter().any(|(_, m)| m != 1) || a != evaluate(&twice, &db).unwrap() {
        return Err(format!("seed {seed}: dedup is not idempotent on {}", plan.to_json()));
    }
    Ok(())
}

pub fn outer_flatten_contains_inner(seed: u64) -> Check {
    let (db, plan) = instance(seed, 5);
    let ty = infer_schema(&plan, &db.schema()).unwrap()[&plan.root()].clone();
    for (name, t) in ty.attrs() {
        if !t.is_bag() {
            continue;
        }
        let with = |kind| extend(&plan, Params::Flatten { kind, attr: name.as_str().into() });
        if infer_schema(&with(FlattenKind::Inner), &db.schema()).is_err() {
            continue;
        }
        let inner = evaluate(&with(FlattenKind::Inner), &db).unwrap();
        let outer = evaluate(&with(FlattenKind::Outer), &db).unwrap();
        if inner.iter().any(|(t, m)| outer.multiplicity(t) < m) {
            return Err(format!("seed {seed}: inner flatten of {name} not contained in outer"));
        }
    }
    Ok(())
}

/// Nesting a duplicate-free relation and flattening it again gives it back.
/// Every non-empty proper subset of the attributes is tried as nest key.
pub fn nest_flatten_round_trip(seed: u64) -> Check {
    let (db, plan) = instance(seed, 5);
    let base = extend(&plan, Params::Dedup);
    let ty = infer_schema(&base, &db.schema()).unwrap()[&base.root()].clone();
    let names: Vec<String> = ty.names().map(str::to_string).collect();
    let original = evaluate(&base, &db).unwrap();
    let n = names.len().min(5);
    for mask in 1u32..(1 << n) {
        let attrs: Vec<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| names[i].clone()).collect();
        if attrs.len() == names.len() {
            continue;
        }
        let nested = extend(&base, Params::RelationNest { attrs, target: "grp".into() });
        let flat = extend(&nested, Params::Flatten { kind: FlattenKind::Inner, attr: "grp".into() });
        // flatten keeps the bag attribute, so project it away again
        let back = extend(&flat, Params::Projection { attrs: names.clone() });
        if evaluate(&back, &db).unwrap() != original {
            return Err(format!("seed {seed}: nest/flatten with mask {mask:b} lost tuples of {}", plan.to_json()));
        }
    }
    Ok(())
}

pub fn all(seed: u64) -> Check {
    multiplicities_conserved(seed)?;
    join_is_selection_over_cross(seed)?;
    dedup_idempotent(seed)?;
    outer_flatten_contains_inner(seed)?;
    nest_flatten_round_trip(seed)
}
