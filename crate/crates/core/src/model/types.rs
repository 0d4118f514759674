use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::path::AttrPath;
use super::value::Value;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimKind {
    Int,
    Str,
    Bool,
    /// Dates are plain integers (`20190315`, or just a year).
    Date,
}

impl PrimKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimKind::Int => "int",
            PrimKind::Str => "string",
            PrimKind::Bool => "bool",
            PrimKind::Date => "date",
        }
    }

    pub fn parse(s: &str) -> Option<PrimKind> {
        match s {
            "int" | "integer" => Some(PrimKind::Int),
            "string" | "str" => Some(PrimKind::Str),
            "bool" | "boolean" => Some(PrimKind::Bool),
            "date" => Some(PrimKind::Date),
            _ => None,
        }
    }

    /// Int and date share a representation and compare with each other.
    pub fn comparable(self, other: PrimKind) -> bool {
        use PrimKind::*;
        matches!(
            (self, other),
            (Int, Int) | (Int, Date) | (Date, Int) | (Date, Date) | (Str, Str) | (Bool, Bool)
        )
    }
}

/// Schema of a nested value.
///
/// `Null` is the bottom type: the type of `⊥`, unifiable with anything. A bag's
/// element is always a tuple type, except for bags whose element type is
/// unknown (empty bags), where it is `Null`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NestedType {
    Null,
    Prim(PrimKind),
    Tuple(TupleType),
    Bag(Box<NestedType>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TupleType {
    attrs: Vec<(String, NestedType)>,
}

impl TupleType {
    pub fn new(attrs: Vec<(String, NestedType)>) -> Result<Self> {
        for (i, (name, _)) in attrs.iter().enumerate() {
            if attrs[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateAttribute(name.clone()));
            }
        }
        Ok(TupleType { attrs })
    }

    pub fn empty() -> Self {
        TupleType { attrs: Vec::new() }
    }

    pub fn attrs(&self) -> &[(String, NestedType)] {
        &self.attrs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attrs.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&NestedType> {
        self.attrs.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn concat(&self, other: &TupleType) -> Result<TupleType> {
        let mut attrs = self.attrs.clone();
        attrs.extend(other.attrs.iter().cloned());
        TupleType::new(attrs)
    }

    pub fn push(&mut self, name: &str, ty: NestedType) -> Result<()> {
        if self.contains(name) {
            return Err(Error::DuplicateAttribute(name.to_string()));
        }
        self.attrs.push((name.to_string(), ty));
        Ok(())
    }

    pub fn project(&self, names: &[String]) -> Result<TupleType> {
        let mut attrs = Vec::with_capacity(names.len());
        for n in names {
            let ty = self
                .get(n)
                .ok_or_else(|| Error::UnknownAttribute(n.clone()))?;
            attrs.push((n.clone(), ty.clone()));
        }
        TupleType::new(attrs)
    }

    pub fn without(&self, names: &[String]) -> TupleType {
        TupleType {
            attrs: self
                .attrs
                .iter()
                .filter(|(n, _)| !names.contains(n))
                .cloned()
                .collect(),
        }
    }

    /// Resolves a path through nested tuple attributes only.
    pub fn resolve(&self, path: &AttrPath) -> Option<&NestedType> {
        let (first, rest) = path.segments().split_first()?;
        let ty = self.get(first)?;
        if rest.is_empty() {
            return Some(ty);
        }
        match ty {
            NestedType::Tuple(inner) => inner.resolve(&path.tail()),
            _ => None,
        }
    }

    /// Resolves a schema path, descending into bag element types as well.
    pub fn resolve_schema(&self, path: &AttrPath) -> Option<&NestedType> {
        let (first, rest) = path.segments().split_first()?;
        let ty = self.get(first)?;
        if rest.is_empty() {
            return Some(ty);
        }
        match ty {
            NestedType::Tuple(inner) => inner.resolve_schema(&path.tail()),
            NestedType::Bag(elem) => match elem.as_ref() {
                NestedType::Tuple(inner) => inner.resolve_schema(&path.tail()),
                _ => None,
            },
            _ => None,
        }
    }

    /// Every schema path (including paths below bags), in declaration order.
    pub fn schema_paths(&self) -> Vec<AttrPath> {
        let mut out = Vec::new();
        self.collect_paths(&AttrPath::new(Vec::<String>::new()), &mut out);
        out
    }

    fn collect_paths(&self, prefix: &AttrPath, out: &mut Vec<AttrPath>) {
        for (name, ty) in &self.attrs {
            let p = prefix.child(name);
            out.push(p.clone());
            match ty {
                NestedType::Tuple(inner) => inner.collect_paths(&p, out),
                NestedType::Bag(elem) => {
                    if let NestedType::Tuple(inner) = elem.as_ref() {
                        inner.collect_paths(&p, out);
                    }
                }
                _ => {}
            }
        }
    }

    /// Paths reachable through tuples only (usable in predicates).
    pub fn value_paths(&self) -> Vec<(AttrPath, NestedType)> {
        let mut out = Vec::new();
        self.collect_value_paths(&AttrPath::new(Vec::<String>::new()), &mut out);
        out
    }

    fn collect_value_paths(&self, prefix: &AttrPath, out: &mut Vec<(AttrPath, NestedType)>) {
        for (name, ty) in &self.attrs {
            let p = prefix.child(name);
            out.push((p.clone(), ty.clone()));
            if let NestedType::Tuple(inner) = ty {
                inner.collect_value_paths(&p, out);
            }
        }
    }

    pub fn rename(&self, from: &str, to: &str) -> TupleType {
        TupleType {
            attrs: self
                .attrs
                .iter()
                .map(|(n, t)| {
                    if n == from {
                        (to.to_string(), t.clone())
                    } else {
                        (n.clone(), t.clone())
                    }
                })
                .collect(),
        }
    }

    pub fn conforms(&self, other: &TupleType) -> bool {
        self.attrs.len() == other.attrs.len()
            && self
                .attrs
                .iter()
                .zip(other.attrs.iter())
                .all(|((n1, t1), (n2, t2))| n1 == n2 && t1.compatible(t2))
    }
}

impl NestedType {
    pub fn bag_of(elem: TupleType) -> NestedType {
        NestedType::Bag(Box::new(NestedType::Tuple(elem)))
    }

    pub fn int() -> NestedType {
        NestedType::Prim(PrimKind::Int)
    }

    pub fn string() -> NestedType {
        NestedType::Prim(PrimKind::Str)
    }

    pub fn bool() -> NestedType {
        NestedType::Prim(PrimKind::Bool)
    }

    pub fn date() -> NestedType {
        NestedType::Prim(PrimKind::Date)
    }

    pub fn as_tuple(&self) -> Option<&TupleType> {
        match self {
            NestedType::Tuple(t) => Some(t),
            _ => None,
        }
    }

    /// Element tuple type of a bag type.
    pub fn bag_element(&self) -> Option<&TupleType> {
        match self {
            NestedType::Bag(elem) => elem.as_tuple(),
            _ => None,
        }
    }

    pub fn is_bag(&self) -> bool {
        matches!(self, NestedType::Bag(_))
    }

    pub fn is_prim(&self) -> bool {
        matches!(self, NestedType::Prim(_))
    }

    pub fn prim(&self) -> Option<PrimKind> {
        match self {
            NestedType::Prim(k) => Some(*k),
            _ => None,
        }
    }

    /// Structural compatibility where `Null` unifies with anything and int
    /// unifies with date.
    pub fn compatible(&self, other: &NestedType) -> bool {
        self.unify(other).is_some()
    }

    pub fn unify(&self, other: &NestedType) -> Option<NestedType> {
        use NestedType::*;
        match (self, other) {
            (Null, t) | (t, Null) => Some(t.clone()),
            (Prim(a), Prim(b)) => {
                if a == b {
                    Some(Prim(*a))
                } else if a.comparable(*b) {
                    // int ~ date
                    Some(Prim(PrimKind::Date))
                } else {
                    None
                }
            }
            (Tuple(a), Tuple(b)) => {
                if a.attrs.len() != b.attrs.len() {
                    return None;
                }
                let mut attrs = Vec::with_capacity(a.attrs.len());
                for ((n1, t1), (n2, t2)) in a.attrs.iter().zip(b.attrs.iter()) {
                    if n1 != n2 {
                        return None;
                    }
                    attrs.push((n1.clone(), t1.unify(t2)?));
                }
                Some(Tuple(TupleType { attrs }))
            }
            (Bag(a), Bag(b)) => Some(Bag(Box::new(a.unify(b)?))),
            _ => None,
        }
    }

    /// Does `v` conform to this type? `⊥` conforms to every type.
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (_, Value::Null) => true,
            (NestedType::Null, _) => false,
            (NestedType::Prim(k), Value::Int(_)) => matches!(k, PrimKind::Int | PrimKind::Date),
            (NestedType::Prim(k), Value::Str(_)) => *k == PrimKind::Str,
            (NestedType::Prim(k), Value::Bool(_)) => *k == PrimKind::Bool,
            (NestedType::Tuple(tt), Value::Tuple(t)) => tt.admits(t),
            (NestedType::Bag(elem), Value::Bag(b)) => b.iter().all(|(t, _)| match elem.as_ref() {
                NestedType::Null => true,
                NestedType::Tuple(tt) => tt.admits(t),
                _ => false,
            }),
            _ => false,
        }
    }
}

impl TupleType {
    /// Does tuple `t` have exactly these attributes, each conforming?
    pub fn admits(&self, t: &super::value::Tuple) -> bool {
        t.len() == self.attrs.len()
            && self
                .attrs
                .iter()
                .all(|(n, ty)| t.get(n).map(|x| ty.admits(x)).unwrap_or(false))
    }
}

impl fmt::Display for NestedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NestedType::Null => f.write_str("⊥"),
            NestedType::Prim(k) => f.write_str(k.name()),
            NestedType::Tuple(t) => write!(f, "{t}"),
            NestedType::Bag(elem) => match elem.as_ref() {
                NestedType::Tuple(t) => {
                    f.write_str("Bag")?;
                    write!(f, "{t}")
                }
                other => write!(f, "Bag<{other}>"),
            },
        }
    }
}

impl fmt::Display for TupleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, (n, t)) in self.attrs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}: {t}")?;
        }
        f.write_str("⟩")
    }
}

// Schemas in JSON: `"int" | "string" | "bool" | "date"` for primitives, an
// object for a tuple and a one-element array holding an object for a bag.

impl NestedType {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            NestedType::Null => serde_json::Value::Null,
            NestedType::Prim(k) => serde_json::Value::String(k.name().to_string()),
            NestedType::Tuple(t) => t.to_json(),
            NestedType::Bag(elem) => serde_json::Value::Array(vec![elem.to_json()]),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<NestedType> {
        match v {
            serde_json::Value::Null => Ok(NestedType::Null),
            serde_json::Value::String(s) => PrimKind::parse(s)
                .map(NestedType::Prim)
                .ok_or_else(|| Error::Parse(format!("unknown primitive type `{s}`"))),
            serde_json::Value::Object(_) => Ok(NestedType::Tuple(TupleType::from_json(v)?)),
            serde_json::Value::Array(items) => match items.as_slice() {
                [elem @ serde_json::Value::Object(_)] => {
                    Ok(NestedType::bag_of(TupleType::from_json(elem)?))
                }
                _ => Err(Error::Parse(
                    "a bag type is a one-element array holding a tuple type".into(),
                )),
            },
            other => Err(Error::Parse(format!("invalid type description: {other}"))),
        }
    }
}

impl TupleType {
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (n, t) in &self.attrs {
            map.insert(n.clone(), t.to_json());
        }
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<TupleType> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("a tuple type must be a JSON object".into()))?;
        let mut attrs = Vec::with_capacity(obj.len());
        for (k, t) in obj {
            attrs.push((k.clone(), NestedType::from_json(t)?));
        }
        TupleType::new(attrs)
    }
}

impl Serialize for NestedType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NestedType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        NestedType::from_json(&v).map_err(D::Error::custom)
    }
}

impl Serialize for TupleType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TupleType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        TupleType::from_json(&v).map_err(D::Error::custom)
    }
}
