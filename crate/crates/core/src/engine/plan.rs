use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::predicate::Predicate;
use crate::error::{Error, Result};
use crate::model::AttrPath;

pub type OpId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Full,
}

impl JoinKind {
    pub const ALL: [JoinKind; 4] = [JoinKind::Inner, JoinKind::Left, JoinKind::Right, JoinKind::Full];

    pub fn name(self) -> &'static str {
        match self {
            JoinKind::Inner => "inner",
            JoinKind::Left => "left",
            JoinKind::Right => "right",
            JoinKind::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<JoinKind> {
        JoinKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn keeps_left(self) -> bool {
        matches!(self, JoinKind::Left | JoinKind::Full)
    }

    pub fn keeps_right(self) -> bool {
        matches!(self, JoinKind::Right | JoinKind::Full)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlattenKind {
    Tuple,
    Inner,
    Outer,
}

impl FlattenKind {
    pub fn name(self) -> &'static str {
        match self {
            FlattenKind::Tuple => "tuple",
            FlattenKind::Inner => "inner",
            FlattenKind::Outer => "outer",
        }
    }

    pub fn parse(s: &str) -> Option<FlattenKind> {
        [FlattenKind::Tuple, FlattenKind::Inner, FlattenKind::Outer]
            .into_iter()
            .find(|k| k.name() == s)
    }

    fn symbol(self) -> &'static str {
        match self {
            FlattenKind::Tuple => "T",
            FlattenKind::Inner => "I",
            FlattenKind::Outer => "O",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggFn {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggFn {
    pub const ALL: [AggFn; 5] = [AggFn::Count, AggFn::Sum, AggFn::Min, AggFn::Max, AggFn::Avg];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Option<AggFn> {
        AggFn::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Table,
    Projection,
    Renaming,
    Selection,
    Join,
    Flatten,
    TupleNest,
    RelationNest,
    Aggregation,
    Union,
    Difference,
    Cross,
    Dedup,
}

impl OpKind {
    pub const ALL: [OpKind; 13] = [
        OpKind::Table,
        OpKind::Projection,
        OpKind::Renaming,
        OpKind::Selection,
        OpKind::Join,
        OpKind::Flatten,
        OpKind::TupleNest,
        OpKind::RelationNest,
        OpKind::Aggregation,
        OpKind::Union,
        OpKind::Difference,
        OpKind::Cross,
        OpKind::Dedup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Table => "table",
            OpKind::Projection => "projection",
            OpKind::Renaming => "renaming",
            OpKind::Selection => "selection",
            OpKind::Join => "join",
            OpKind::Flatten => "flatten",
            OpKind::TupleNest => "tuple_nest",
            OpKind::RelationNest => "relation_nest",
            OpKind::Aggregation => "aggregation",
            OpKind::Union => "union",
            OpKind::Difference => "difference",
            OpKind::Cross => "cross",
            OpKind::Dedup => "dedup",
        }
    }

    pub fn parse(s: &str) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            OpKind::Table => 0,
            OpKind::Join | OpKind::Union | OpKind::Difference | OpKind::Cross => 2,
            _ => 1,
        }
    }
}

/// Operator parameters; everything a reparameterization may change lives here.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Params {
    Table { name: String },
    Projection { attrs: Vec<String> },
    /// `(from, to)` pairs, applied simultaneously.
    Renaming { pairs: Vec<(String, String)> },
    Selection { pred: Predicate },
    Join { kind: JoinKind, pred: Predicate },
    Flatten { kind: FlattenKind, attr: AttrPath },
    TupleNest { attrs: Vec<String>, target: String },
    RelationNest { attrs: Vec<String>, target: String },
    Aggregation { func: AggFn, source: AttrPath, target: String },
    Union,
    Difference,
    Cross,
    Dedup,
}

impl Params {
    pub fn kind(&self) -> OpKind {
        match self {
            Params::Table { .. } => OpKind::Table,
            Params::Projection { .. } => OpKind::Projection,
            Params::Renaming { .. } => OpKind::Renaming,
            Params::Selection { .. } => OpKind::Selection,
            Params::Join { .. } => OpKind::Join,
            Params::Flatten { .. } => OpKind::Flatten,
            Params::TupleNest { .. } => OpKind::TupleNest,
            Params::RelationNest { .. } => OpKind::RelationNest,
            Params::Aggregation { .. } => OpKind::Aggregation,
            Params::Union => OpKind::Union,
            Params::Difference => OpKind::Difference,
            Params::Cross => OpKind::Cross,
            Params::Dedup => OpKind::Dedup,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Operator {
    pub id: OpId,
    pub params: Params,
    pub inputs: Vec<OpId>,
}

impl Operator {
    pub fn new(id: OpId, params: Params, inputs: Vec<OpId>) -> Operator {
        Operator { id, params, inputs }
    }

    pub fn kind(&self) -> OpKind {
        self.params.kind()
    }
}

/// A tree of operators identified by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPlan {
    ops: BTreeMap<OpId, Operator>,
    root: OpId,
}

impl QueryPlan {
    pub fn new(ops: Vec<Operator>) -> Result<QueryPlan> {
        let mut map = BTreeMap::new();
        for op in ops {
            if op.inputs.len() != op.kind().arity() {
                return Err(Error::InvalidPlan(format!(
                    "operator {} ({}) expects {} inputs, got {}",
                    op.id,
                    op.kind().name(),
                    op.kind().arity(),
                    op.inputs.len()
                )));
            }
            let id = op.id;
            if map.insert(id, op).is_some() {
                return Err(Error::InvalidPlan(format!("duplicate operator id {id}")));
            }
        }
        let mut referenced = BTreeSet::new();
        for op in map.values() {
            for i in &op.inputs {
                if !map.contains_key(i) {
                    return Err(Error::InvalidPlan(format!(
                        "operator {} references unknown input {i}",
                        op.id
                    )));
                }
                if !referenced.insert(*i) {
                    return Err(Error::InvalidPlan(format!(
                        "operator {i} is used as input more than once"
                    )));
                }
            }
        }
        let roots: Vec<OpId> = map.keys().filter(|k| !referenced.contains(k)).copied().collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::InvalidPlan("plan has no root".into())),
            _ => return Err(Error::InvalidPlan(format!("plan has several roots: {roots:?}"))),
        };
        let plan = QueryPlan { ops: map, root };
        if plan.postorder().len() != plan.ops.len() {
            return Err(Error::InvalidPlan("plan contains a cycle".into()));
        }
        Ok(plan)
    }

    pub fn root(&self) -> OpId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, id: OpId) -> Option<&Operator> {
        self.ops.get(&id)
    }

    /// Panicking lookup for ids known to belong to the plan.
    pub fn get(&self, id: OpId) -> &Operator {
        &self.ops[&id]
    }

    pub fn ops(&self) -> impl Iterator<Item = &Operator> {
        self.ops.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = OpId> + '_ {
        self.ops.keys().copied()
    }

    pub fn parent(&self, id: OpId) -> Option<OpId> {
        self.ops.values().find(|o| o.inputs.contains(&id)).map(|o| o.id)
    }

    /// Children before parents, left input first.
    pub fn postorder(&self) -> Vec<OpId> {
        let mut out = Vec::with_capacity(self.ops.len());
        let mut seen = BTreeSet::new();
        self.visit(self.root, &mut seen, &mut out);
        out
    }

    fn visit(&self, id: OpId, seen: &mut BTreeSet<OpId>, out: &mut Vec<OpId>) {
        if !seen.insert(id) {
            return;
        }
        for i in &self.ops[&id].inputs {
            self.visit(*i, seen, out);
        }
        out.push(id);
    }

    /// Operators of the subtree rooted at `id`.
    pub fn subtree(&self, id: OpId) -> Vec<OpId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.visit(id, &mut seen, &mut out);
        out
    }

    /// The plan restricted to the subtree rooted at `id`.
    pub fn prefix(&self, id: OpId) -> QueryPlan {
        let ops = self
            .subtree(id)
            .into_iter()
            .map(|i| (i, self.ops[&i].clone()))
            .collect();
        QueryPlan { ops, root: id }
    }

    pub fn tables(&self) -> Vec<(OpId, &str)> {
        self.ops
            .values()
            .filter_map(|o| match &o.params {
                Params::Table { name } => Some((o.id, name.as_str())),
                _ => None,
            })
            .collect()
    }

    pub fn set_params(&mut self, id: OpId, params: Params) -> Result<()> {
        let op = self
            .ops
            .get_mut(&id)
            .ok_or_else(|| Error::InvalidPlan(format!("unknown operator {id}")))?;
        if op.kind() != params.kind() {
            return Err(Error::InadmissibleChange(format!(
                "operator {id} cannot become a {}",
                params.kind().name()
            )));
        }
        op.params = params;
        Ok(())
    }

    /// Ids whose parameters differ from `other`'s.
    pub fn changed_ops(&self, other: &QueryPlan) -> BTreeSet<OpId> {
        self.ops
            .iter()
            .filter(|(id, op)| other.op(**id).map(|o| o.params != op.params).unwrap_or(true))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Same ids, kinds and tree shape.
    pub fn same_structure(&self, other: &QueryPlan) -> bool {
        self.root == other.root
            && self.ops.len() == other.ops.len()
            && self.ops.iter().all(|(id, op)| {
                other
                    .op(*id)
                    .map(|o| o.kind() == op.kind() && o.inputs == op.inputs)
                    .unwrap_or(false)
            })
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.params {
            Params::Table { name } => write!(f, "{name}"),
            Params::Projection { attrs } => write!(f, "π[{}]", attrs.join(", ")),
            Params::Renaming { pairs } => {
                let ps: Vec<String> = pairs.iter().map(|(a, b)| format!("{b}←{a}")).collect();
                write!(f, "ρ[{}]", ps.join(", "))
            }
            Params::Selection { pred } => write!(f, "σ[{pred}]"),
            Params::Join { kind, pred } => write!(f, "⋈{}[{pred}]", kind.name()),
            Params::Flatten { kind, attr } => write!(f, "F{}[{attr}]", kind.symbol()),
            Params::TupleNest { attrs, target } => {
                write!(f, "NT[{}→{target}]", attrs.join(", "))
            }
            Params::RelationNest { attrs, target } => {
                write!(f, "NR[{}→{target}]", attrs.join(", "))
            }
            Params::Aggregation { func, source, target } => {
                write!(f, "γ[{}({source})→{target}]", func.name())
            }
            Params::Union => f.write_str("∪"),
            Params::Difference => f.write_str("−"),
            Params::Cross => f.write_str("×"),
            Params::Dedup => f.write_str("δ"),
        }
    }
}

impl fmt::Display for QueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(self.root, f)
    }
}

impl QueryPlan {
    fn fmt_node(&self, id: OpId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = &self.ops[&id];
        write!(f, "{op}")?;
        if op.inputs.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, c) in op.inputs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            self.fmt_node(*c, f)?;
        }
        f.write_str(")")
    }
}

// Plan JSON: [{"id": 1, "kind": "table", "params": {"name": "person"}, "inputs": []}, ...]

impl Params {
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Params::Table { name } => json!({"name": name}),
            Params::Projection { attrs } => json!({"attrs": attrs}),
            Params::Renaming { pairs } => json!({
                "pairs": pairs.iter().map(|(a, b)| json!({"from": a, "to": b})).collect::<Vec<_>>()
            }),
            Params::Selection { pred } => json!({"predicate": pred.to_json()}),
            Params::Join { kind, pred } => json!({"kind": kind.name(), "predicate": pred.to_json()}),
            Params::Flatten { kind, attr } => json!({"kind": kind.name(), "attr": attr.to_string()}),
            Params::TupleNest { attrs, target } | Params::RelationNest { attrs, target } => {
                json!({"attrs": attrs, "target": target})
            }
            Params::Aggregation { func, source, target } => json!({
                "function": func.name(), "source": source.to_string(), "target": target
            }),
            Params::Union | Params::Difference | Params::Cross | Params::Dedup => json!({}),
        }
    }

    pub fn from_json(kind: OpKind, v: &serde_json::Value) -> Result<Params> {
        let field = |name: &str| {
            v.get(name)
                .ok_or_else(|| Error::Parse(format!("{} operator needs `{name}`", kind.name())))
        };
        let string = |name: &str| -> Result<String> {
            field(name)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("`{name}` must be a string")))
        };
        let strings = |name: &str| -> Result<Vec<String>> {
            field(name)?
                .as_array()
                .ok_or_else(|| Error::Parse(format!("`{name}` must be an array")))?
                .iter()
                .map(|s| {
                    s.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Parse(format!("`{name}` must hold strings")))
                })
                .collect()
        };
        let pred = || -> Result<Predicate> {
            match v.get("predicate") {
                Some(p) => Predicate::from_json(p),
                None => Ok(Predicate::True),
            }
        };
        Ok(match kind {
            OpKind::Table => Params::Table { name: string("name")? },
            OpKind::Projection => Params::Projection { attrs: strings("attrs")? },
            OpKind::Renaming => {
                let mut pairs = Vec::new();
                for p in field("pairs")?
                    .as_array()
                    .ok_or_else(|| Error::Parse("`pairs` must be an array".into()))?
                {
                    let get = |k: &str| {
                        p.get(k)
                            .and_then(|x| x.as_str())
                            .map(str::to_string)
                            .ok_or_else(|| Error::Parse(format!("renaming pair needs `{k}`")))
                    };
                    pairs.push((get("from")?, get("to")?));
                }
                Params::Renaming { pairs }
            }
            OpKind::Selection => Params::Selection { pred: pred()? },
            OpKind::Join => {
                let k = match v.get("kind") {
                    Some(k) => k
                        .as_str()
                        .and_then(JoinKind::parse)
                        .ok_or_else(|| Error::Parse(format!("unknown join kind {k}")))?,
                    None => JoinKind::Inner,
                };
                Params::Join { kind: k, pred: pred()? }
            }
            OpKind::Flatten => {
                let k = string("kind")?;
                Params::Flatten {
                    kind: FlattenKind::parse(&k)
                        .ok_or_else(|| Error::Parse(format!("unknown flatten kind `{k}`")))?,
                    attr: AttrPath::parse(&string("attr")?),
                }
            }
            OpKind::TupleNest => Params::TupleNest {
                attrs: strings("attrs")?,
                target: string("target")?,
            },
            OpKind::RelationNest => Params::RelationNest {
                attrs: strings("attrs")?,
                target: string("target")?,
            },
            OpKind::Aggregation => {
                let f = string("function")?;
                Params::Aggregation {
                    func: AggFn::parse(&f)
                        .ok_or_else(|| Error::Parse(format!("unknown aggregation function `{f}`")))?,
                    source: AttrPath::parse(&string("source")?),
                    target: string("target")?,
                }
            }
            OpKind::Union => Params::Union,
            OpKind::Difference => Params::Difference,
            OpKind::Cross => Params::Cross,
            OpKind::Dedup => Params::Dedup,
        })
    }
}

impl QueryPlan {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.postorder()
                .into_iter()
                .map(|id| {
                    let op = &self.ops[&id];
                    serde_json::json!({
                        "id": op.id,
                        "kind": op.kind().name(),
                        "params": op.params.to_json(),
                        "inputs": op.inputs,
                    })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<QueryPlan> {
        let nodes = v
            .as_array()
            .ok_or_else(|| Error::Parse("a plan is an array of operator nodes".into()))?;
        let mut ops = Vec::with_capacity(nodes.len());
        for n in nodes {
            let id = n
                .get("id")
                .and_then(|x| x.as_u64())
                .and_then(|x| OpId::try_from(x).ok())
                .ok_or_else(|| Error::Parse(format!("operator node without a valid id: {n}")))?;
            let kind_name = n
                .get("kind")
                .and_then(|x| x.as_str())
                .ok_or_else(|| Error::Parse(format!("operator {id} has no kind")))?;
            let kind = OpKind::parse(kind_name)
                .ok_or_else(|| Error::Parse(format!("unknown operator kind `{kind_name}`")))?;
            let empty = serde_json::json!({});
            let params = Params::from_json(kind, n.get("params").unwrap_or(&empty))?;
            let inputs = match n.get("inputs") {
                None => Vec::new(),
                Some(i) => i
                    .as_array()
                    .ok_or_else(|| Error::Parse(format!("operator {id}: inputs must be an array")))?
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .and_then(|x| OpId::try_from(x).ok())
                            .ok_or_else(|| Error::Parse(format!("operator {id}: bad input id {x}")))
                    })
                    .collect::<Result<_>>()?,
            };
            ops.push(Operator::new(id, params, inputs));
        }
        QueryPlan::new(ops)
    }
}

impl Serialize for QueryPlan {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QueryPlan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        QueryPlan::from_json(&v).map_err(D::Error::custom)
    }
}
