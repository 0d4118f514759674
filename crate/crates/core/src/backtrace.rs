//! Schema backtracing: pushes the why-not pattern down to the base relations
//! and records which source attributes the question and the operators refer to.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::plan::{FlattenKind, OpId, OpKind, Operator, Params, QueryPlan};
use crate::engine::schema::{infer_schema, DbSchema};
use crate::error::{Error, Result};
use crate::model::{generalize, AttrPath, NestedType, Nip, TupleType};
use crate::reparam::slots;

/// An attribute of a base relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceAttr {
    pub relation: String,
    pub path: AttrPath,
}

impl fmt::Display for SourceAttr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path)
    }
}

/// Where an attribute of an intermediate result comes from. Collections built
/// by nesting keep the origins of their members in `fields`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub sources: Vec<SourceAttr>,
    pub fields: Option<Vec<(String, Origin)>>,
}

impl Origin {
    fn base(relation: &str, name: &str) -> Origin {
        Origin {
            sources: vec![SourceAttr { relation: relation.to_string(), path: AttrPath::single(name) }],
            fields: None,
        }
    }

    fn group(fields: Vec<(String, Origin)>) -> Origin {
        let mut sources = Vec::new();
        for (_, o) in &fields {
            for s in &o.sources {
                if !sources.contains(s) {
                    sources.push(s.clone());
                }
            }
        }
        Origin { sources, fields: Some(fields) }
    }

    fn merge(&self, other: &Origin) -> Origin {
        let mut sources = self.sources.clone();
        for s in &other.sources {
            if !sources.contains(s) {
                sources.push(s.clone());
            }
        }
        Origin { sources, fields: self.fields.clone() }
    }

    /// Origin of `rest` below this attribute.
    fn descend(&self, rest: &[String]) -> Origin {
        let Some((first, more)) = rest.split_first() else {
            return self.clone();
        };
        if let Some(fields) = &self.fields {
            return match fields.iter().find(|(n, _)| n == first) {
                Some((_, o)) => o.descend(more),
                None => Origin { sources: Vec::new(), fields: None },
            };
        }
        let tail = AttrPath::new(rest.iter().cloned());
        Origin {
            sources: self
                .sources
                .iter()
                .map(|s| SourceAttr { relation: s.relation.clone(), path: s.path.join(&tail) })
                .collect(),
            fields: None,
        }
    }
}

/// Origins of the attributes of one operator's output, in schema order.
pub type Origins = Vec<(String, Origin)>;

pub fn resolve_origin(origins: &Origins, path: &AttrPath) -> Option<Origin> {
    let (first, rest) = path.segments().split_first()?;
    origins
        .iter()
        .find(|(n, _)| n == first)
        .map(|(_, o)| o.descend(rest))
}

/// Origins of every operator's output attributes.
pub fn attribute_origins(plan: &QueryPlan, db: &DbSchema) -> Result<BTreeMap<OpId, Origins>> {
    let types = infer_schema(plan, db)?;
    let mut out: BTreeMap<OpId, Origins> = BTreeMap::new();
    for id in plan.postorder() {
        let op = plan.get(id);
        let inputs: Vec<&Origins> = op.inputs.iter().map(|i| &out[i]).collect();
        let o = op_origins(op, &inputs, &types[&id]);
        out.insert(id, o);
    }
    Ok(out)
}

fn op_origins(op: &Operator, inputs: &[&Origins], out_ty: &TupleType) -> Origins {
    let get = |o: &Origins, n: &str| -> Origin {
        o.iter()
            .find(|(m, _)| m == n)
            .map(|(_, x)| x.clone())
            .unwrap_or(Origin { sources: Vec::new(), fields: None })
    };
    match &op.params {
        Params::Table { name } => out_ty.names().map(|n| (n.to_string(), Origin::base(name, n))).collect(),
        Params::Projection { attrs } => attrs.iter().map(|a| (a.clone(), get(inputs[0], a))).collect(),
        Params::Renaming { pairs } => inputs[0]
            .iter()
            .map(|(n, o)| {
                let to = pairs.iter().find(|(f, _)| f == n).map(|(_, t)| t.clone());
                (to.unwrap_or_else(|| n.clone()), o.clone())
            })
            .collect(),
        Params::Selection { .. } | Params::Dedup => inputs[0].clone(),
        Params::Join { .. } | Params::Cross => {
            inputs[0].iter().chain(inputs[1].iter()).cloned().collect()
        }
        Params::Flatten { attr, .. } => {
            let mut o = inputs[0].clone();
            let coll = resolve_origin(inputs[0], attr).unwrap_or(Origin { sources: Vec::new(), fields: None });
            for (n, _) in out_ty.attrs().iter().skip(inputs[0].len()) {
                o.push((n.clone(), coll.descend(std::slice::from_ref(n))));
            }
            o
        }
        Params::TupleNest { attrs, target } | Params::RelationNest { attrs, target } => {
            let mut o: Origins = inputs[0]
                .iter()
                .filter(|(n, _)| !attrs.contains(n))
                .cloned()
                .collect();
            let fields = attrs.iter().map(|a| (a.clone(), get(inputs[0], a))).collect();
            o.push((target.clone(), Origin::group(fields)));
            o
        }
        Params::Aggregation { source, target, .. } => {
            let mut o = inputs[0].clone();
            let src = resolve_origin(inputs[0], source).unwrap_or(Origin { sources: Vec::new(), fields: None });
            o.push((target.clone(), Origin { sources: src.sources, fields: None }));
            o
        }
        Params::Union | Params::Difference => inputs[0]
            .iter()
            .zip(inputs[1].iter())
            .map(|((n, a), (_, b))| (n.clone(), a.merge(b)))
            .collect(),
    }
}

/// What refers to a source attribute: an attribute of the why-not tuple
/// (blue) or a parameter of an operator (red).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AssocKind {
    WhyNot(AttrPath),
    OperatorRef { op: OpId, param: String, attr: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Association {
    pub source: SourceAttr,
    pub kind: AssocKind,
}

/// Short operator symbol used in association labels.
pub fn op_symbol(kind: OpKind) -> &'static str {
    match kind {
        OpKind::Table => "table",
        OpKind::Projection => "pi",
        OpKind::Renaming => "rho",
        OpKind::Selection => "sigma",
        OpKind::Join => "join",
        OpKind::Flatten => "F",
        OpKind::TupleNest | OpKind::RelationNest => "N",
        OpKind::Aggregation => "gamma",
        OpKind::Union => "union",
        OpKind::Difference => "minus",
        OpKind::Cross => "cross",
        OpKind::Dedup => "delta",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BacktraceResult {
    /// Pattern per accessed base relation.
    pub nips: BTreeMap<String, Nip>,
    /// Pattern every operator's output tuples are checked against.
    pub op_nips: BTreeMap<OpId, Nip>,
    pub assoc: Vec<Association>,
    pub warnings: Vec<String>,
}

impl BacktraceResult {
    /// Debug rendering: one entry per source attribute with the blue and red
    /// references to it.
    pub fn to_json(&self, plan: &QueryPlan) -> serde_json::Value {
        let mut kinds: BTreeMap<OpKind, usize> = BTreeMap::new();
        for op in plan.ops() {
            *kinds.entry(op.kind()).or_default() += 1;
        }
        let label = |op: OpId, attr: &str| {
            let kind = plan.get(op).kind();
            if kinds[&kind] > 1 {
                format!("{}#{op}.{attr}", op_symbol(kind))
            } else {
                format!("{}.{attr}", op_symbol(kind))
            }
        };
        let mut by_src: BTreeMap<&SourceAttr, (Vec<String>, Vec<String>)> = BTreeMap::new();
        for a in &self.assoc {
            let e = by_src.entry(&a.source).or_default();
            match &a.kind {
                AssocKind::WhyNot(p) => e.0.push(format!("t.{p}")),
                AssocKind::OperatorRef { op, attr, .. } => e.1.push(label(*op, attr)),
            }
        }
        let assoc: Vec<serde_json::Value> = by_src
            .into_iter()
            .map(|(s, (blue, red))| {
                serde_json::json!({"src": s.path.to_string(), "relation": s.relation, "blue": blue, "red": red})
            })
            .collect();
        let nips: serde_json::Map<String, serde_json::Value> = self
            .nips
            .iter()
            .map(|(r, n)| (r.clone(), serde_json::Value::String(n.to_string())))
            .collect();
        serde_json::json!({"nips": nips, "assoc": assoc, "warnings": self.warnings})
    }
}

/// Rewrites the why-not pattern `t` into one pattern per operator output and
/// per base relation, top-down from the root.
pub fn schema_backtrace(plan: &QueryPlan, db: &DbSchema, t: &Nip) -> Result<BacktraceResult> {
    let types = infer_schema(plan, db)?;
    let origins = attribute_origins(plan, db)?;
    let root = plan.root();
    let root_ty = NestedType::Tuple(types[&root].clone());
    let t = t.conform(&root_ty)?;

    let mut op_nips: BTreeMap<OpId, Nip> = BTreeMap::new();
    let mut warnings = Vec::new();
    op_nips.insert(root, t.clone());
    let mut order = plan.postorder();
    order.reverse();
    for id in &order {
        let op = plan.get(*id);
        let out = op_nips[id].clone();
        let in_types: Vec<&TupleType> = op.inputs.iter().map(|i| &types[i]).collect();
        let ins = push_down(op, &out, &in_types, &types[id], &mut warnings)?;
        for (c, n) in op.inputs.iter().zip(ins) {
            op_nips.insert(*c, n);
        }
    }

    let mut nips: BTreeMap<String, Nip> = BTreeMap::new();
    for (id, name) in plan.tables() {
        let n = op_nips[&id].clone();
        let merged = match nips.get(name) {
            Some(prev) => generalize(prev, &n),
            None => n,
        };
        nips.insert(name.to_string(), merged);
    }

    let mut assoc = Vec::new();
    for (n, o) in &origins[&root] {
        for s in &o.sources {
            assoc.push(Association { source: s.clone(), kind: AssocKind::WhyNot(AttrPath::single(n)) });
        }
    }
    for op in plan.ops() {
        let input_origins: Origins = op
            .inputs
            .iter()
            .flat_map(|i| origins[i].iter().cloned())
            .collect();
        let mut refs: Vec<(String, AttrPath, Origin)> = slots(op)
            .into_iter()
            .filter_map(|(slot, p)| {
                resolve_origin(&input_origins, &p).map(|o| (slot.to_string(), p, o))
            })
            .collect();
        match &op.params {
            Params::TupleNest { target, .. }
            | Params::RelationNest { target, .. }
            | Params::Aggregation { target, .. } => {
                if let Some(o) = resolve_origin(&origins[&op.id], &AttrPath::single(target)) {
                    refs.push(("target".into(), AttrPath::single(target), o));
                }
            }
            _ => {}
        }
        for (param, p, o) in refs {
            for s in o.sources {
                let kind = AssocKind::OperatorRef { op: op.id, param: param.clone(), attr: p.to_string() };
                let a = Association { source: s, kind };
                if !assoc.contains(&a) {
                    assoc.push(a);
                }
            }
        }
    }
    Ok(BacktraceResult { nips, op_nips, assoc, warnings })
}

fn attrs_of(n: &Nip, ty: &TupleType) -> Vec<(String, Nip)> {
    match n.tuple_attrs() {
        Some(a) => a,
        None => ty.names().map(|x| (x.to_string(), Nip::Any)).collect(),
    }
}

fn attr(attrs: &[(String, Nip)], name: &str) -> Nip {
    attrs
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, p)| p.clone())
        .unwrap_or(Nip::Any)
}

fn restrict(attrs: &[(String, Nip)], ty: &TupleType) -> Nip {
    Nip::Tuple(ty.names().map(|n| (n.to_string(), attr(attrs, n))).collect())
}

fn all_any(n: &Nip) -> bool {
    match n {
        Nip::Any => true,
        Nip::Tuple(a) => a.iter().all(|(_, p)| all_any(p)),
        _ => false,
    }
}

/// Replaces the pattern at `path` inside a tuple pattern of type `ty`.
fn set_at(n: &Nip, ty: &TupleType, path: &[String], value: Nip) -> Nip {
    let Some((first, rest)) = path.split_first() else {
        return value;
    };
    let attrs = attrs_of(n, ty);
    Nip::Tuple(
        attrs
            .into_iter()
            .map(|(name, p)| {
                if &name != first {
                    return (name, p);
                }
                if rest.is_empty() {
                    return (name, value.clone());
                }
                let inner = match ty.get(&name) {
                    Some(NestedType::Tuple(it)) => set_at(&p, it, rest, value.clone()),
                    _ => p,
                };
                (name, inner)
            })
            .collect(),
    )
}

fn get_at(n: &Nip, path: &[String]) -> Nip {
    match path.split_first() {
        None => n.clone(),
        Some((first, rest)) => match n.attr(first) {
            Some(p) => get_at(&p, rest),
            None => Nip::Any,
        },
    }
}

/// Patterns for the inputs of `op` given the pattern of its output.
fn push_down(
    op: &Operator,
    out: &Nip,
    in_types: &[&TupleType],
    out_ty: &TupleType,
    warnings: &mut Vec<String>,
) -> Result<Vec<Nip>> {
    let o = attrs_of(out, out_ty);
    Ok(match &op.params {
        Params::Table { .. } => Vec::new(),
        Params::Projection { .. } | Params::Selection { .. } | Params::Dedup => {
            vec![restrict(&o, in_types[0])]
        }
        Params::Renaming { pairs } => {
            let back: Vec<(String, Nip)> = o
                .iter()
                .map(|(n, p)| {
                    let from = pairs.iter().find(|(_, to)| to == n).map(|(f, _)| f.clone());
                    (from.unwrap_or_else(|| n.clone()), p.clone())
                })
                .collect();
            vec![restrict(&back, in_types[0])]
        }
        Params::Join { .. } | Params::Cross => {
            vec![restrict(&o, in_types[0]), restrict(&o, in_types[1])]
        }
        Params::Flatten { kind, attr: a } => {
            let input = in_types[0];
            let base = restrict(&o, input);
            let elem_names: Vec<&str> = out_ty.names().skip(input.len()).collect();
            let elem = Nip::Tuple(
                elem_names
                    .iter()
                    .map(|n| (n.to_string(), attr(&o, n)))
                    .collect(),
            );
            if all_any(&elem) {
                vec![base]
            } else {
                let current = get_at(&base, a.segments());
                let replaced = if !current.is_any() {
                    current
                } else if *kind == FlattenKind::Tuple {
                    elem
                } else {
                    Nip::Bag(vec![elem, Nip::Star])
                };
                vec![set_at(&base, input, a.segments(), replaced)]
            }
        }
        Params::TupleNest { attrs, target } => {
            let inner = attr(&o, target);
            let mut all: Vec<(String, Nip)> = o.clone();
            let nested_ty = in_types[0].project(attrs)?;
            for (n, p) in attrs_of(&inner, &nested_ty) {
                all.push((n, p));
            }
            vec![restrict(&all, in_types[0])]
        }
        Params::RelationNest { attrs, target } => {
            let inner = attr(&o, target);
            let nested_ty = in_types[0].project(attrs)?;
            let member = match inner.bag_elements() {
                Some(items) if !items.iter().any(|p| matches!(p, Nip::Star)) && !items.is_empty() => {
                    let conformed: Vec<Nip> = items
                        .iter()
                        .map(|p| p.conform(&NestedType::Tuple(nested_ty.clone())))
                        .collect::<Result<_>>()?;
                    conformed
                        .iter()
                        .skip(1)
                        .fold(conformed[0].clone(), |acc, p| generalize(&acc, p))
                }
                _ => Nip::Any,
            };
            let mut all: Vec<(String, Nip)> = o.clone();
            for (n, p) in attrs_of(&member, &nested_ty) {
                all.push((n, p));
            }
            vec![restrict(&all, in_types[0])]
        }
        Params::Aggregation { target, .. } => {
            let c = attr(&o, target);
            if !c.is_any() {
                warnings.push(format!(
                    "constraint {c} on aggregation output `{target}` (operator {}) relaxed to ?",
                    op.id
                ));
            }
            vec![restrict(&o, in_types[0])]
        }
        Params::Union => {
            let right: Vec<(String, Nip)> = in_types[1]
                .names()
                .zip(o.iter())
                .map(|(n, (_, p))| (n.to_string(), p.clone()))
                .collect();
            vec![restrict(&o, in_types[0]), restrict(&right, in_types[1])]
        }
        Params::Difference => vec![restrict(&o, in_types[0]), Nip::any_tuple(in_types[1])],
    })
}

/// Fails when `t` does not describe tuples of the plan's output type.
pub fn check_question(plan: &QueryPlan, db: &DbSchema, t: &Nip) -> Result<Nip> {
    let types = infer_schema(plan, db)?;
    let ty = NestedType::Tuple(types[&plan.root()].clone());
    match t {
        Nip::Tuple(_) | Nip::Value(_) | Nip::Any => t.conform(&ty),
        other => Err(Error::InvalidPattern(format!("a why-not question is a tuple pattern, got {other}"))),
    }
}
