use std::collections::BTreeMap;
use std::fmt;

use super::path::AttrPath;
use super::types::{NestedType, PrimKind, TupleType};
use crate::error::{Error, Result};

static NULL: Value = Value::Null;

/// A nested instance. Bags are canonical (sorted, multiplicities merged), so
/// derived equality and ordering are structural and deterministic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
    Tuple(Tuple),
    Bag(Bag),
}

/// Ordered attribute values.
///
/// Equality is positional over `(name, value)` pairs. Every tuple produced by
/// the engine or the loaders follows its schema's attribute order, so within
/// one relation this coincides with equality by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    fields: Vec<(String, Value)>,
}

/// Bag of tuples with positive multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bag {
    items: BTreeMap<Tuple, u64>,
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_tuple(&self) -> Option<&Tuple> {
        match self {
            Value::Tuple(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_bag(&self) -> Option<&Bag> {
        match self {
            Value::Bag(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Comparison used by predicates: `None` when either side is `⊥` or the
    /// kinds differ.
    pub fn compare(&self, other: &Value) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Tuple(a), Value::Tuple(b)) => Some(a.cmp(b)),
            (Value::Bag(a), Value::Bag(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    pub fn prim_kind(&self) -> Option<PrimKind> {
        match self {
            Value::Int(_) => Some(PrimKind::Int),
            Value::Str(_) => Some(PrimKind::Str),
            Value::Bool(_) => Some(PrimKind::Bool),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<Tuple> for Value {
    fn from(t: Tuple) -> Self {
        Value::Tuple(t)
    }
}

impl From<Bag> for Value {
    fn from(b: Bag) -> Self {
        Value::Bag(b)
    }
}

impl Tuple {
    pub fn new(fields: Vec<(String, Value)>) -> Result<Tuple> {
        for (i, (name, _)) in fields.iter().enumerate() {
            if fields[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateAttribute(name.clone()));
            }
        }
        Ok(Tuple { fields })
    }

    /// Builds a tuple from pairs; panics on duplicate names. Meant for
    /// literals in tests and examples.
    pub fn from_pairs<I, S, V>(pairs: I) -> Tuple
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: Into<Value>,
    {
        Tuple::new(
            pairs
                .into_iter()
                .map(|(n, v)| (n.into(), v.into()))
                .collect(),
        )
        .expect("duplicate attribute in tuple literal")
    }

    /// All-null tuple of the given type.
    pub fn nulls(ty: &TupleType) -> Tuple {
        Tuple {
            fields: ty
                .names()
                .map(|n| (n.to_string(), Value::Null))
                .collect(),
        }
    }

    pub fn fields(&self) -> &[(String, Value)] {
        &self.fields
    }

    pub fn into_fields(self) -> Vec<(String, Value)> {
        self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Follows a path through nested tuples. A `⊥` on the way yields `⊥`.
    pub fn get_path(&self, path: &AttrPath) -> Option<&Value> {
        let (first, rest) = path.segments().split_first()?;
        let v = self.get(first)?;
        if rest.is_empty() {
            return Some(v);
        }
        match v {
            Value::Tuple(t) => t.get_path(&path.tail()),
            Value::Null => Some(&NULL),
            _ => None,
        }
    }

    /// Replaces the value at `path`; intermediate attributes must be tuples.
    pub fn set_path(&mut self, path: &AttrPath, value: Value) -> bool {
        let Some((first, rest)) = path.segments().split_first() else {
            return false;
        };
        let Some(slot) = self.fields.iter_mut().find(|(n, _)| n == first) else {
            return false;
        };
        if rest.is_empty() {
            slot.1 = value;
            return true;
        }
        match &mut slot.1 {
            Value::Tuple(t) => t.set_path(&path.tail(), value),
            _ => false,
        }
    }

    pub fn concat(&self, other: &Tuple) -> Tuple {
        let mut fields = self.fields.clone();
        fields.extend(other.fields.iter().cloned());
        Tuple { fields }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Value) {
        self.fields.push((name.into(), value));
    }

    pub fn project(&self, names: &[String]) -> Tuple {
        Tuple {
            fields: names
                .iter()
                .map(|n| (n.clone(), self.get(n).cloned().unwrap_or(Value::Null)))
                .collect(),
        }
    }

    pub fn without(&self, names: &[String]) -> Tuple {
        Tuple {
            fields: self
                .fields
                .iter()
                .filter(|(n, _)| !names.contains(n))
                .cloned()
                .collect(),
        }
    }

    pub fn rename(&self, from: &str, to: &str) -> Tuple {
        Tuple {
            fields: self
                .fields
                .iter()
                .map(|(n, v)| {
                    if n == from {
                        (to.to_string(), v.clone())
                    } else {
                        (n.clone(), v.clone())
                    }
                })
                .collect(),
        }
    }

    /// Positional renaming onto `names` (used by union and difference).
    pub fn with_names<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Tuple {
        Tuple {
            fields: self
                .fields
                .iter()
                .zip(names)
                .map(|((_, v), n)| (n.to_string(), v.clone()))
                .collect(),
        }
    }

    /// Reorders attributes to follow `ty`, recursively.
    pub fn reorder(&self, ty: &TupleType) -> Result<Tuple> {
        if self.len() != ty.len() {
            return Err(Error::TypeMismatch(format!(
                "tuple {self} does not have the attributes of {ty}"
            )));
        }
        let mut fields = Vec::with_capacity(ty.len());
        for (name, aty) in ty.attrs() {
            let v = self
                .get(name)
                .ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
            fields.push((name.clone(), v.reorder(aty)?));
        }
        Ok(Tuple { fields })
    }
}

impl Value {
    fn reorder(&self, ty: &NestedType) -> Result<Value> {
        match (self, ty) {
            (Value::Tuple(t), NestedType::Tuple(tt)) => Ok(Value::Tuple(t.reorder(tt)?)),
            (Value::Bag(b), NestedType::Bag(elem)) => match elem.as_ref() {
                NestedType::Tuple(tt) => {
                    let mut out = Bag::new();
                    for (t, m) in b.iter() {
                        out.insert(t.reorder(tt)?, m);
                    }
                    Ok(Value::Bag(out))
                }
                _ => Ok(self.clone()),
            },
            _ => Ok(self.clone()),
        }
    }
}

impl Bag {
    pub fn new() -> Bag {
        Bag::default()
    }

    pub fn from_tuples<I: IntoIterator<Item = Tuple>>(tuples: I) -> Bag {
        let mut b = Bag::new();
        for t in tuples {
            b.insert(t, 1);
        }
        b
    }

    pub fn from_counted<I: IntoIterator<Item = (Tuple, u64)>>(items: I) -> Bag {
        let mut b = Bag::new();
        for (t, m) in items {
            b.insert(t, m);
        }
        b
    }

    /// Adds `m` copies of `t`; zero is a no-op.
    pub fn insert(&mut self, t: Tuple, m: u64) {
        if m == 0 {
            return;
        }
        *self.items.entry(t).or_insert(0) += m;
    }

    pub fn multiplicity(&self, t: &Tuple) -> u64 {
        self.items.get(t).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, u64)> + '_ {
        self.items.iter().map(|(t, m)| (t, *m))
    }

    /// Number of distinct tuples.
    pub fn distinct(&self) -> usize {
        self.items.len()
    }

    /// Number of tuples counting multiplicities.
    pub fn total(&self) -> u64 {
        self.items.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn union(&self, other: &Bag) -> Bag {
        let mut out = self.clone();
        for (t, m) in other.iter() {
            out.insert(t.clone(), m);
        }
        out
    }

    pub fn dedup(&self) -> Bag {
        Bag {
            items: self.items.keys().map(|t| (t.clone(), 1)).collect(),
        }
    }

    /// Every occurrence listed separately, in canonical order.
    pub fn occurrences(&self) -> Vec<&Tuple> {
        let mut out = Vec::new();
        for (t, m) in self.iter() {
            for _ in 0..m {
                out.push(t);
            }
        }
        out
    }
}

impl FromIterator<(Tuple, u64)> for Bag {
    fn from_iter<I: IntoIterator<Item = (Tuple, u64)>>(iter: I) -> Self {
        Bag::from_counted(iter)
    }
}

/// Minimal type of a value. `⊥` has the bottom type.
pub fn type_of(v: &Value) -> Result<NestedType> {
    match v {
        Value::Null => Ok(NestedType::Null),
        Value::Int(_) => Ok(NestedType::Prim(PrimKind::Int)),
        Value::Str(_) => Ok(NestedType::Prim(PrimKind::Str)),
        Value::Bool(_) => Ok(NestedType::Prim(PrimKind::Bool)),
        Value::Tuple(t) => Ok(NestedType::Tuple(tuple_type_of(t)?)),
        Value::Bag(b) => {
            let mut elem = NestedType::Null;
            for (t, _) in b.iter() {
                let ty = NestedType::Tuple(tuple_type_of(t)?);
                elem = elem.unify(&ty).ok_or_else(|| {
                    Error::HeterogeneousBag(format!("{elem} vs {ty}"))
                })?;
            }
            Ok(NestedType::Bag(Box::new(elem)))
        }
    }
}

pub fn tuple_type_of(t: &Tuple) -> Result<TupleType> {
    let mut attrs = Vec::with_capacity(t.len());
    for (n, v) in t.fields() {
        attrs.push((n.clone(), type_of(v)?));
    }
    TupleType::new(attrs)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("⊥"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
            Value::Tuple(t) => write!(f, "{t}"),
            Value::Bag(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, (n, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}: {v}")?;
        }
        f.write_str("⟩")
    }
}

impl fmt::Display for Bag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, m)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if m == 1 {
                write!(f, "{t}")?;
            } else {
                write!(f, "{t}^{m}")?;
            }
        }
        f.write_str("}")
    }
}

// JSON: `null`, numbers, strings, booleans, objects for tuples and arrays for
// bags (duplicates repeated).

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Str(s) => serde_json::Value::String(s.clone()),
            Value::Tuple(t) => t.to_json(),
            Value::Bag(b) => b.to_json(),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value> {
        match v {
            serde_json::Value::Null => Ok(Value::Null),
            serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| Error::Parse(format!("only integers are supported, got {n}"))),
            serde_json::Value::String(s) => Ok(Value::Str(s.clone())),
            serde_json::Value::Object(_) => Ok(Value::Tuple(Tuple::from_json(v)?)),
            serde_json::Value::Array(items) => {
                let mut bag = Bag::new();
                for item in items {
                    match Value::from_json(item)? {
                        Value::Tuple(t) => bag.insert(t, 1),
                        other => {
                            return Err(Error::Parse(format!(
                                "bag elements must be tuples, got {other}"
                            )))
                        }
                    }
                }
                Ok(Value::Bag(bag))
            }
        }
    }

    /// Parses and checks against `ty`, reordering attributes to the schema.
    pub fn from_json_typed(v: &serde_json::Value, ty: &NestedType) -> Result<Value> {
        let value = Value::from_json(v)?.reorder(ty)?;
        if !ty.admits(&value) {
            return Err(Error::TypeMismatch(format!("{value} is not of type {ty}")));
        }
        Ok(value)
    }
}

impl Tuple {
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (n, v) in &self.fields {
            map.insert(n.clone(), v.to_json());
        }
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Tuple> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse(format!("expected a JSON object, got {v}")))?;
        let mut fields = Vec::with_capacity(obj.len());
        for (k, x) in obj {
            fields.push((k.clone(), Value::from_json(x)?));
        }
        Tuple::new(fields)
    }

    pub fn from_json_typed(v: &serde_json::Value, ty: &TupleType) -> Result<Tuple> {
        match Value::from_json_typed(v, &NestedType::Tuple(ty.clone()))? {
            Value::Tuple(t) => Ok(t),
            other => Err(Error::TypeMismatch(format!("expected a tuple, got {other}"))),
        }
    }
}

impl Bag {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.occurrences()
                .into_iter()
                .map(Tuple::to_json)
                .collect(),
        )
    }

    pub fn from_json_typed(v: &serde_json::Value, elem: &TupleType) -> Result<Bag> {
        match Value::from_json_typed(v, &NestedType::bag_of(elem.clone()))? {
            Value::Bag(b) => Ok(b),
            Value::Null => Ok(Bag::new()),
            other => Err(Error::TypeMismatch(format!("expected a bag, got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(city: &str, year: i64) -> Tuple {
        Tuple::from_pairs([("city", Value::from(city)), ("year", Value::Int(year))])
    }

    #[test]
    fn primitive_and_tuple_types() {
        assert_eq!(type_of(&Value::Int(5)).unwrap(), NestedType::int());
        let t = Value::Tuple(Tuple::from_pairs([("name", "Sue")]));
        assert_eq!(
            type_of(&t).unwrap(),
            NestedType::Tuple(TupleType::new(vec![("name".into(), NestedType::string())]).unwrap())
        );
    }

    #[test]
    fn person_tuple_type() {
        let addresses = Bag::from_tuples([addr("LA", 2019), addr("NY", 2018)]);
        let person = Value::Tuple(Tuple::from_pairs([
            ("name", Value::from("Sue")),
            ("address1", Value::Bag(Bag::from_tuples([addr("LA", 2010)]))),
            ("address2", Value::Bag(addresses)),
        ]));
        let addr_ty = NestedType::bag_of(
            TupleType::new(vec![
                ("city".into(), NestedType::string()),
                ("year".into(), NestedType::int()),
            ])
            .unwrap(),
        );
        let expected = NestedType::Tuple(
            TupleType::new(vec![
                ("name".into(), NestedType::string()),
                ("address1".into(), addr_ty.clone()),
                ("address2".into(), addr_ty),
            ])
            .unwrap(),
        );
        assert_eq!(type_of(&person).unwrap(), expected);
    }

    #[test]
    fn heterogeneous_bag_is_rejected() {
        let b = Bag::from_tuples([
            Tuple::from_pairs([("a", Value::Int(1))]),
            Tuple::from_pairs([("a", Value::from("x"))]),
        ]);
        assert!(matches!(
            type_of(&Value::Bag(b)),
            Err(Error::HeterogeneousBag(_))
        ));
    }

    #[test]
    fn null_unifies_inside_bags() {
        let b = Bag::from_tuples([
            Tuple::from_pairs([("a", Value::Int(1))]),
            Tuple::from_pairs([("a", Value::Null)]),
        ]);
        let ty = type_of(&Value::Bag(b)).unwrap();
        assert_eq!(ty.bag_element().unwrap().get("a"), Some(&NestedType::int()));
    }

    #[test]
    fn multiplicities_merge() {
        let mut b = Bag::new();
        b.insert(addr("NY", 1), 1);
        b.insert(addr("NY", 1), 2);
        b.insert(addr("LA", 1), 0);
        assert_eq!(b.multiplicity(&addr("NY", 1)), 3);
        assert_eq!(b.multiplicity(&addr("LA", 1)), 0);
        assert_eq!(b.distinct(), 1);
        assert_eq!(b.total(), 3);
    }

    #[test]
    fn json_reorders_to_schema() {
        let ty = TupleType::new(vec![
            ("city".into(), NestedType::string()),
            ("year".into(), NestedType::int()),
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::json!([{"year": 2019, "city": "LA"}, {"city": "LA", "year": 2019}]);
        let bag = Bag::from_json_typed(&v, &ty).unwrap();
        assert_eq!(bag.multiplicity(&addr("LA", 2019)), 2);
        assert_eq!(bag.to_json().as_array().unwrap().len(), 2);
    }

    #[test]
    fn path_lookup_through_null() {
        let t = Tuple::from_pairs([("a", Value::Null)]);
        assert_eq!(t.get_path(&AttrPath::parse("a.b")), Some(&Value::Null));
        assert_eq!(t.get_path(&AttrPath::parse("c")), None);
    }
}
