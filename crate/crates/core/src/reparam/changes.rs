use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::engine::plan::{AggFn, FlattenKind, JoinKind, OpId, Operator, Params, QueryPlan};
use crate::engine::predicate::{CmpOp, Operand, Side};
use crate::engine::schema::{agg_output_type, infer_schema, DbSchema};
use crate::engine::Database;
use crate::error::{Error, Result};
use crate::model::{AttrPath, NestedType, PrimKind, Tuple, TupleType, Value};

/// One attribute reference inside an operator's parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// Attribute operand of a selection or join comparison.
    Pred { atom: usize, side: Side },
    Projection(usize),
    Flatten,
    Nest(usize),
    AggSource,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Pred { atom, side } => {
                let s = if *side == Side::Lhs { "lhs" } else { "rhs" };
                write!(f, "pred[{atom}].{s}")
            }
            Slot::Projection(i) => write!(f, "attrs[{i}]"),
            Slot::Flatten => f.write_str("attr"),
            Slot::Nest(i) => write!(f, "attrs[{i}]"),
            Slot::AggSource => f.write_str("source"),
        }
    }
}

/// Attribute references of an operator with their slots.
pub fn slots(op: &Operator) -> Vec<(Slot, AttrPath)> {
    match &op.params {
        Params::Selection { pred } | Params::Join { pred, .. } => pred
            .attr_refs()
            .into_iter()
            .map(|(atom, side, p)| (Slot::Pred { atom, side }, p.clone()))
            .collect(),
        Params::Projection { attrs } => attrs
            .iter()
            .enumerate()
            .map(|(i, a)| (Slot::Projection(i), AttrPath::single(a)))
            .collect(),
        Params::Flatten { attr, .. } => vec![(Slot::Flatten, attr.clone())],
        Params::TupleNest { attrs, .. } | Params::RelationNest { attrs, .. } => attrs
            .iter()
            .enumerate()
            .map(|(i, a)| (Slot::Nest(i), AttrPath::single(a)))
            .collect(),
        Params::Aggregation { source, .. } => vec![(Slot::AggSource, source.clone())],
        _ => Vec::new(),
    }
}

/// Parameters with the reference at `slot` replaced by `path`.
pub fn set_slot(params: &Params, slot: Slot, path: &AttrPath) -> Result<Params> {
    let bad = || Error::InadmissibleChange(format!("slot {slot} does not exist"));
    let top = || {
        if path.len() == 1 {
            Ok(path.segments()[0].clone())
        } else {
            Err(Error::InadmissibleChange(format!(
                "slot {slot} takes a top-level attribute, got `{path}`"
            )))
        }
    };
    let mut p = params.clone();
    match (&mut p, slot) {
        (Params::Selection { pred } | Params::Join { pred, .. }, Slot::Pred { atom, side }) => {
            let c = pred.atom_mut(atom).ok_or_else(bad)?;
            let operand = if side == Side::Lhs { &mut c.lhs } else { &mut c.rhs };
            match operand {
                Operand::Attr(a) => *a = path.clone(),
                Operand::Const(_) => return Err(bad()),
            }
        }
        (Params::Projection { attrs }, Slot::Projection(i)) => {
            *attrs.get_mut(i).ok_or_else(bad)? = top()?;
        }
        (Params::Flatten { attr, .. }, Slot::Flatten) => *attr = path.clone(),
        (
            Params::TupleNest { attrs, .. } | Params::RelationNest { attrs, .. },
            Slot::Nest(i),
        ) => {
            *attrs.get_mut(i).ok_or_else(bad)? = top()?;
        }
        (Params::Aggregation { source, .. }, Slot::AggSource) => *source = path.clone(),
        _ => return Err(bad()),
    }
    Ok(p)
}

/// A single admissible parameter change.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Change {
    SwapAttr { slot: Slot, to: AttrPath },
    CmpOp { atom: usize, op: CmpOp },
    Constant { atom: usize, side: Side, value: Value },
    JoinKind(JoinKind),
    FlattenKind(FlattenKind),
    AggFunction(AggFn),
    /// New output names of a renaming, in pair order.
    RenameTargets(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamChange {
    pub op: OpId,
    pub change: Change,
}

impl fmt::Display for ParamChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.change {
            Change::SwapAttr { slot, to } => write!(f, "op {}: {slot} := {to}", self.op),
            Change::CmpOp { atom, op } => write!(f, "op {}: pred[{atom}].op := {}", self.op, op.symbol()),
            Change::Constant { atom, value, .. } => write!(f, "op {}: pred[{atom}] const := {value}", self.op),
            Change::JoinKind(k) => write!(f, "op {}: kind := {}", self.op, k.name()),
            Change::FlattenKind(k) => write!(f, "op {}: kind := {}", self.op, k.name()),
            Change::AggFunction(a) => write!(f, "op {}: function := {}", self.op, a.name()),
            Change::RenameTargets(ns) => write!(f, "op {}: targets := {}", self.op, ns.join(", ")),
        }
    }
}

/// Applies one change to an operator's parameters.
pub fn apply_change(params: &Params, change: &Change) -> Result<Params> {
    let bad = || Error::InadmissibleChange(format!("{change:?} does not apply to {}", params.kind().name()));
    let mut p = params.clone();
    match (change, &mut p) {
        (Change::SwapAttr { slot, to }, _) => return set_slot(params, *slot, to),
        (Change::CmpOp { atom, op }, Params::Selection { pred }) => {
            pred.atom_mut(*atom).ok_or_else(bad)?.op = *op;
        }
        (Change::Constant { atom, side, value }, Params::Selection { pred }) => {
            let c = pred.atom_mut(*atom).ok_or_else(bad)?;
            let operand = if *side == Side::Lhs { &mut c.lhs } else { &mut c.rhs };
            match operand {
                Operand::Const(v) => *v = value.clone(),
                Operand::Attr(_) => return Err(bad()),
            }
        }
        (Change::JoinKind(k), Params::Join { kind, .. }) => *kind = *k,
        (Change::FlattenKind(k), Params::Flatten { kind, .. }) => {
            if (*kind == FlattenKind::Tuple) != (*k == FlattenKind::Tuple) {
                return Err(bad());
            }
            *kind = *k;
        }
        (Change::AggFunction(f), Params::Aggregation { func, .. }) => *func = *f,
        (Change::RenameTargets(names), Params::Renaming { pairs }) => {
            if names.len() != pairs.len() {
                return Err(bad());
            }
            for ((_, to), n) in pairs.iter_mut().zip(names) {
                *to = n.clone();
            }
        }
        _ => return Err(bad()),
    }
    Ok(p)
}

/// Applies a sequence of changes. Only the final plan is validated: it must
/// type-check and keep the original output type.
pub fn apply_changes(plan: &QueryPlan, db: &DbSchema, changes: &[ParamChange]) -> Result<QueryPlan> {
    let mut out = plan.clone();
    for c in changes {
        let op = out
            .op(c.op)
            .ok_or_else(|| Error::InadmissibleChange(format!("unknown operator {}", c.op)))?;
        let params = apply_change(&op.params, &c.change)?;
        out.set_params(c.op, params)?;
    }
    let original = infer_schema(plan, db)?;
    let types = infer_schema(&out, db).map_err(|e| Error::SchemaBroken(e.to_string()))?;
    if types[&out.root()] != original[&plan.root()] {
        return Err(Error::RootSchemaChanged(format!(
            "{} instead of {}",
            types[&out.root()],
            original[&plan.root()]
        )));
    }
    Ok(out)
}

/// Primitive values of a database and plan, grouped by kind (int and date
/// share a domain).
#[derive(Clone, Debug, Default)]
pub struct ActiveDomain {
    values: BTreeMap<PrimKind, BTreeSet<Value>>,
}

impl ActiveDomain {
    pub fn from_database(db: &Database, plan: &QueryPlan) -> ActiveDomain {
        let mut adom = ActiveDomain::default();
        for name in db.names() {
            if let Ok(b) = db.relation(name) {
                for (t, _) in b.iter() {
                    adom.add_tuple(t);
                }
            }
        }
        for op in plan.ops() {
            if let Params::Selection { pred } | Params::Join { pred, .. } = &op.params {
                for v in pred.constants() {
                    adom.add(v);
                }
            }
        }
        adom
    }

    fn add_tuple(&mut self, t: &Tuple) {
        for (_, v) in t.fields() {
            self.add(v);
        }
    }

    pub fn add(&mut self, v: &Value) {
        match v {
            Value::Tuple(t) => self.add_tuple(t),
            Value::Bag(b) => {
                for (t, _) in b.iter() {
                    self.add_tuple(t);
                }
            }
            Value::Null => {}
            prim => {
                if let Some(k) = prim.prim_kind() {
                    self.values.entry(k).or_default().insert(prim.clone());
                }
            }
        }
    }

    pub fn values(&self, kind: PrimKind) -> impl Iterator<Item = &Value> {
        let k = normalize(kind);
        self.values.get(&k).into_iter().flatten()
    }

    /// Candidate constants for a comparison over `kind`: the active domain
    /// plus one value below and one above it.
    pub fn constant_grid(&self, kind: PrimKind) -> Vec<Value> {
        let k = normalize(kind);
        let mut out: BTreeSet<Value> = self.values.get(&k).cloned().unwrap_or_default();
        match k {
            PrimKind::Int => {
                let ints: Vec<i64> = out.iter().filter_map(Value::as_int).collect();
                if let (Some(lo), Some(hi)) = (ints.iter().min(), ints.iter().max()) {
                    out.insert(Value::Int(lo.saturating_sub(1)));
                    out.insert(Value::Int(hi.saturating_add(1)));
                }
            }
            PrimKind::Str => {
                if let Some(Value::Str(hi)) = out.iter().next_back().cloned() {
                    out.insert(Value::Str(String::new()));
                    out.insert(Value::Str(format!("{hi}\u{0}")));
                }
            }
            PrimKind::Bool => {
                out.insert(Value::Bool(false));
                out.insert(Value::Bool(true));
            }
            PrimKind::Date => unreachable!("dates are normalized to ints"),
        }
        out.into_iter().collect()
    }
}

fn normalize(k: PrimKind) -> PrimKind {
    if k == PrimKind::Date {
        PrimKind::Int
    } else {
        k
    }
}

/// Options per independent parameter dimension of one operator; the first
/// option of every dimension is the current setting.
pub fn change_dimensions(op: &Operator, inputs: &[&TupleType], adom: &ActiveDomain) -> Vec<Vec<Change>> {
    let mut dims: Vec<Vec<Change>> = Vec::new();
    for (slot, path) in slots(op) {
        let mut opts = vec![Change::SwapAttr { slot, to: path.clone() }];
        for alt in swap_candidates(op, slot, &path, inputs) {
            opts.push(Change::SwapAttr { slot, to: alt });
        }
        dims.push(opts);
    }
    match &op.params {
        Params::Selection { pred } => {
            for (i, c) in pred.atoms().into_iter().enumerate() {
                let mut ops = vec![Change::CmpOp { atom: i, op: c.op }];
                ops.extend(
                    CmpOp::ALL
                        .into_iter()
                        .filter(|o| *o != c.op)
                        .map(|o| Change::CmpOp { atom: i, op: o }),
                );
                dims.push(ops);
                for (side, operand, other) in [(Side::Lhs, &c.lhs, &c.rhs), (Side::Rhs, &c.rhs, &c.lhs)] {
                    let Operand::Const(v) = operand else { continue };
                    let kind = match other {
                        Operand::Attr(p) => inputs[0].resolve(p).and_then(NestedType::prim),
                        Operand::Const(w) => w.prim_kind(),
                    }
                    .or_else(|| v.prim_kind());
                    let mut consts = vec![Change::Constant { atom: i, side, value: v.clone() }];
                    if let Some(k) = kind {
                        consts.extend(
                            adom.constant_grid(k)
                                .into_iter()
                                .filter(|x| x != v)
                                .map(|x| Change::Constant { atom: i, side, value: x }),
                        );
                    }
                    dims.push(consts);
                }
            }
        }
        Params::Join { kind, .. } => {
            let mut ks = vec![Change::JoinKind(*kind)];
            ks.extend(JoinKind::ALL.into_iter().filter(|k| k != kind).map(Change::JoinKind));
            dims.push(ks);
        }
        Params::Flatten { kind, .. } => match kind {
            FlattenKind::Inner => dims.push(vec![
                Change::FlattenKind(FlattenKind::Inner),
                Change::FlattenKind(FlattenKind::Outer),
            ]),
            FlattenKind::Outer => dims.push(vec![
                Change::FlattenKind(FlattenKind::Outer),
                Change::FlattenKind(FlattenKind::Inner),
            ]),
            FlattenKind::Tuple => {}
        },
        Params::Aggregation { func, .. } => {
            let mut fs = vec![Change::AggFunction(*func)];
            fs.extend(AggFn::ALL.into_iter().filter(|f| f != func).map(Change::AggFunction));
            dims.push(fs);
        }
        Params::Renaming { pairs } => {
            let names: Vec<String> = pairs.iter().map(|(_, to)| to.clone()).collect();
            let mut perms = vec![Change::RenameTargets(names.clone())];
            for p in permutations(&names) {
                if p != names {
                    perms.push(Change::RenameTargets(p));
                }
            }
            dims.push(perms);
        }
        _ => {}
    }
    dims
}

/// Single-step changes admissible for `op` over the given input types.
pub fn admissible_changes(op: &Operator, inputs: &[&TupleType], adom: &ActiveDomain) -> Vec<ParamChange> {
    change_dimensions(op, inputs, adom)
        .into_iter()
        .flat_map(|d| d.into_iter().skip(1))
        .map(|change| ParamChange { op: op.id, change })
        .collect()
}

/// Every parameter setting reachable by combining admissible changes,
/// the original setting first.
pub fn param_grid(op: &Operator, inputs: &[&TupleType], adom: &ActiveDomain) -> Vec<Params> {
    let dims = change_dimensions(op, inputs, adom);
    let mut out = vec![op.params.clone()];
    let mut seen: HashSet<Params> = HashSet::new();
    seen.insert(op.params.clone());
    let mut idx = vec![0usize; dims.len()];
    loop {
        // advance the mixed-radix counter
        let mut k = 0;
        while k < dims.len() {
            idx[k] += 1;
            if idx[k] < dims[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dims.len() {
            break;
        }
        let mut p = op.params.clone();
        let mut ok = true;
        for (d, &i) in dims.iter().zip(&idx) {
            match apply_change(&p, &d[i]) {
                Ok(q) => p = q,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

/// Number of settings [`param_grid`] would produce, before deduplication.
pub fn grid_size(op: &Operator, inputs: &[&TupleType], adom: &ActiveDomain) -> u128 {
    change_dimensions(op, inputs, adom)
        .iter()
        .map(|d| d.len() as u128)
        .product()
}

/// Same-kind alternatives for the reference at `slot`.
pub fn swap_candidates(op: &Operator, slot: Slot, current: &AttrPath, inputs: &[&TupleType]) -> Vec<AttrPath> {
    let mut out = Vec::new();
    match (&op.params, slot) {
        (Params::Selection { .. }, Slot::Pred { .. }) => {
            let Some(kind) = inputs[0].resolve(current).and_then(NestedType::prim) else {
                return out;
            };
            for (p, ty) in inputs[0].value_paths() {
                if &p != current && ty.prim().map(|k| k.comparable(kind)).unwrap_or(false) {
                    out.push(p);
                }
            }
        }
        (Params::Join { pred, .. }, Slot::Pred { atom, .. }) => {
            // equi-join attribute swaps only, within the same input
            let c = pred.atoms()[atom];
            if c.op != CmpOp::Eq || !matches!((&c.lhs, &c.rhs), (Operand::Attr(_), Operand::Attr(_))) {
                return out;
            }
            for input in inputs {
                let Some(kind) = input.resolve(current).and_then(NestedType::prim) else {
                    continue;
                };
                for (p, ty) in input.value_paths() {
                    if &p != current && ty.prim().map(|k| k.comparable(kind)).unwrap_or(false) {
                        out.push(p);
                    }
                }
            }
        }
        (Params::Projection { attrs }, Slot::Projection(_)) => {
            let Some(ty) = inputs[0].resolve(current) else { return out };
            for (n, t) in inputs[0].attrs() {
                if !attrs.contains(n) && t.compatible(ty) {
                    out.push(AttrPath::single(n));
                }
            }
        }
        (Params::Flatten { kind, .. }, Slot::Flatten) => {
            for (p, ty) in inputs[0].value_paths() {
                let fits = match kind {
                    FlattenKind::Tuple => matches!(ty, NestedType::Tuple(_)),
                    _ => ty.bag_element().is_some(),
                };
                if fits && &p != current {
                    out.push(p);
                }
            }
        }
        (Params::TupleNest { attrs, .. } | Params::RelationNest { attrs, .. }, Slot::Nest(_)) => {
            for n in inputs[0].names() {
                if !attrs.iter().any(|a| a == n) {
                    out.push(AttrPath::single(n));
                }
            }
        }
        (Params::Aggregation { func, .. }, Slot::AggSource) => {
            for (p, ty) in inputs[0].value_paths() {
                let Some(e) = ty.bag_element() else { continue };
                if &p != current && e.len() == 1 && agg_output_type(*func, &e.attrs()[0].1).is_some() {
                    out.push(p);
                }
            }
        }
        _ => {}
    }
    out
}

fn permutations(names: &[String]) -> Vec<Vec<String>> {
    if names.len() <= 1 {
        return vec![names.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..names.len() {
        let mut rest = names.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first.clone());
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::predicate::Predicate;

    fn flat() -> TupleType {
        TupleType::new(vec![
            ("name".into(), NestedType::string()),
            ("city".into(), NestedType::string()),
            ("year".into(), NestedType::int()),
        ])
        .unwrap()
    }

    fn selection() -> Operator {
        Operator::new(3, Params::Selection { pred: Predicate::attr_const("year", CmpOp::Ge, 2019) }, vec![2])
    }

    fn adom() -> ActiveDomain {
        let mut a = ActiveDomain::default();
        for y in [2010, 2018, 2019] {
            a.add(&Value::Int(y));
        }
        a
    }

    #[test]
    fn selection_constant_change_is_admissible() {
        let ty = flat();
        let changes = admissible_changes(&selection(), &[&ty], &adom());
        assert!(changes.contains(&ParamChange {
            op: 3,
            change: Change::Constant { atom: 0, side: Side::Rhs, value: Value::Int(2018) }
        }));
        // no swap: `year` is the only int attribute
        assert!(!changes.iter().any(|c| matches!(c.change, Change::SwapAttr { .. })));
        // 5 other operators, 4 other constants (2010, 2018, 2009, 2020)
        assert_eq!(changes.len(), 5 + 4);
    }

    #[test]
    fn parameter_free_operators_have_no_changes() {
        let ty = flat();
        for p in [Params::Union, Params::Difference, Params::Cross, Params::Dedup] {
            let arity = p.kind().arity();
            let op = Operator::new(9, p, (0..arity as u32).collect());
            let inputs: Vec<&TupleType> = (0..arity).map(|_| &ty).collect();
            assert!(admissible_changes(&op, &inputs, &adom()).is_empty());
            assert_eq!(param_grid(&op, &inputs, &adom()).len(), 1);
        }
    }

    #[test]
    fn grid_is_product_of_dimensions() {
        let ty = flat();
        let grid = param_grid(&selection(), &[&ty], &adom());
        assert_eq!(grid.len(), 6 * 5);
        assert_eq!(grid[0], selection().params);
        assert_eq!(grid_size(&selection(), &[&ty], &adom()), 30);
    }

    #[test]
    fn constant_grid_adds_boundaries() {
        let g = adom().constant_grid(PrimKind::Date);
        assert_eq!(g, [2009, 2010, 2018, 2019, 2020].map(Value::Int).to_vec());
    }

    #[test]
    fn renaming_permutations() {
        let op = Operator::new(
            2,
            Params::Renaming { pairs: vec![("a".into(), "x".into()), ("b".into(), "y".into())] },
            vec![1],
        );
        let ty = TupleType::new(vec![("a".into(), NestedType::int()), ("b".into(), NestedType::int())]).unwrap();
        let changes = admissible_changes(&op, &[&ty], &adom());
        assert_eq!(
            changes,
            vec![ParamChange { op: 2, change: Change::RenameTargets(vec!["y".into(), "x".into()]) }]
        );
    }
}
