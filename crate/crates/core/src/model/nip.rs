use std::fmt;

use super::types::NestedType;
use super::value::{Bag, Tuple, Value};
use crate::error::{Error, Result};

/// Nested instance with placeholders.
///
/// `Any` is `?` (any single instance), `Star` is `*` (any number of further
/// bag elements) and may only appear as a bag element, at most once per bag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nip {
    Any,
    Star,
    Value(Value),
    Tuple(Vec<(String, Nip)>),
    Bag(Vec<Nip>),
}

impl Nip {
    pub fn tuple<I, S>(attrs: I) -> Nip
    where
        I: IntoIterator<Item = (S, Nip)>,
        S: Into<String>,
    {
        Nip::Tuple(attrs.into_iter().map(|(n, p)| (n.into(), p)).collect())
    }

    pub fn val(v: impl Into<Value>) -> Nip {
        Nip::Value(v.into())
    }

    /// Tuple pattern with `?` for every attribute of `ty`.
    pub fn any_tuple(ty: &super::types::TupleType) -> Nip {
        Nip::Tuple(ty.names().map(|n| (n.to_string(), Nip::Any)).collect())
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Nip::Any)
    }

    pub fn has_star(&self) -> bool {
        matches!(self, Nip::Bag(items) if items.iter().any(|p| matches!(p, Nip::Star)))
    }

    /// Attribute of a tuple pattern. A concrete tuple is viewed attribute-wise
    /// and `?` yields `?` for every attribute.
    pub fn attr(&self, name: &str) -> Option<Nip> {
        match self {
            Nip::Any => Some(Nip::Any),
            Nip::Tuple(attrs) => attrs.iter().find(|(n, _)| n == name).map(|(_, p)| p.clone()),
            Nip::Value(Value::Tuple(t)) => t.get(name).cloned().map(Nip::Value),
            _ => None,
        }
    }

    /// Attribute-wise view of a tuple pattern (concrete tuples are expanded).
    pub fn tuple_attrs(&self) -> Option<Vec<(String, Nip)>> {
        match self {
            Nip::Tuple(attrs) => Some(attrs.clone()),
            Nip::Value(Value::Tuple(t)) => Some(
                t.fields()
                    .iter()
                    .map(|(n, v)| (n.clone(), Nip::Value(v.clone())))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Element view of a bag pattern (concrete bags are expanded per occurrence).
    pub fn bag_elements(&self) -> Option<Vec<Nip>> {
        match self {
            Nip::Bag(items) => Some(items.clone()),
            Nip::Value(Value::Bag(b)) => Some(
                b.occurrences()
                    .into_iter()
                    .map(|t| Nip::Value(Value::Tuple(t.clone())))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Checks the structural rules on placeholders.
    pub fn validate(&self) -> Result<()> {
        self.validate_at(false)
    }

    fn validate_at(&self, in_bag: bool) -> Result<()> {
        match self {
            Nip::Star if !in_bag => Err(Error::InvalidPattern(
                "`*` may only appear as a bag element".into(),
            )),
            Nip::Tuple(attrs) => {
                for (i, (n, p)) in attrs.iter().enumerate() {
                    if attrs[..i].iter().any(|(m, _)| m == n) {
                        return Err(Error::DuplicateAttribute(n.clone()));
                    }
                    p.validate_at(false)?;
                }
                Ok(())
            }
            Nip::Bag(items) => {
                if items.iter().filter(|p| matches!(p, Nip::Star)).count() > 1 {
                    return Err(Error::InvalidPattern("at most one `*` per bag".into()));
                }
                for p in items {
                    match p {
                        Nip::Star | Nip::Any | Nip::Tuple(_) | Nip::Value(Value::Tuple(_)) => {
                            p.validate_at(true)?
                        }
                        other => {
                            return Err(Error::InvalidPattern(format!(
                                "bag elements must be tuples, `?` or `*`, got {other}"
                            )))
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Conforms the pattern to `ty`: attribute order follows the schema,
    /// omitted tuple attributes become `?`, and shapes are checked.
    pub fn conform(&self, ty: &NestedType) -> Result<Nip> {
        let mismatch = || Error::TypeMismatch(format!("pattern {self} does not fit type {ty}"));
        match (self, ty) {
            (Nip::Any, _) => Ok(Nip::Any),
            (Nip::Star, _) => Err(Error::InvalidPattern(
                "`*` may only appear as a bag element".into(),
            )),
            (Nip::Value(v), _) => {
                if ty.admits(v) {
                    Ok(self.clone())
                } else {
                    Err(mismatch())
                }
            }
            (Nip::Tuple(attrs), NestedType::Tuple(tt)) => {
                for (n, _) in attrs {
                    if !tt.contains(n) {
                        return Err(Error::UnknownAttribute(n.clone()));
                    }
                }
                let mut out = Vec::with_capacity(tt.len());
                for (n, aty) in tt.attrs() {
                    let p = attrs
                        .iter()
                        .find(|(m, _)| m == n)
                        .map(|(_, p)| p.conform(aty))
                        .transpose()?
                        .unwrap_or(Nip::Any);
                    out.push((n.clone(), p));
                }
                Ok(Nip::Tuple(out))
            }
            (Nip::Bag(items), NestedType::Bag(elem)) => {
                let mut out = Vec::with_capacity(items.len());
                for p in items {
                    out.push(match p {
                        Nip::Star => Nip::Star,
                        other => other.conform(elem)?,
                    });
                }
                let nip = Nip::Bag(out);
                nip.validate()?;
                Ok(nip)
            }
            _ => Err(mismatch()),
        }
    }

    /// Replaces concrete tuples and bags by their attribute/element-wise
    /// patterns, so every nested position can be inspected uniformly.
    pub fn expanded(&self) -> Nip {
        match self {
            Nip::Value(Value::Tuple(_)) | Nip::Tuple(_) => Nip::Tuple(
                self.tuple_attrs()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(n, p)| (n, p.expanded()))
                    .collect(),
            ),
            Nip::Value(Value::Bag(_)) | Nip::Bag(_) => Nip::Bag(
                self.bag_elements()
                    .unwrap_or_default()
                    .iter()
                    .map(Nip::expanded)
                    .collect(),
            ),
            other => other.clone(),
        }
    }
}

/// `v ≃ p`. Shapes that cannot match (a tuple pattern against a bag, say)
/// simply do not match; use [`matches_nip`] to have them reported.
pub fn matches(v: &Value, p: &Nip) -> bool {
    match p {
        Nip::Any => true,
        Nip::Star => false,
        Nip::Value(x) => x == v,
        Nip::Tuple(attrs) => match v {
            Value::Tuple(t) => matches_tuple(t, attrs),
            _ => false,
        },
        Nip::Bag(items) => match v {
            Value::Bag(b) => matches_bag(b, items),
            _ => false,
        },
    }
}

pub fn matches_tuple(t: &Tuple, attrs: &[(String, Nip)]) -> bool {
    t.len() == attrs.len()
        && attrs
            .iter()
            .all(|(n, p)| t.get(n).map(|x| matches(x, p)).unwrap_or(false))
}

/// Tuple-level match against any pattern (`?`, tuple pattern or concrete tuple).
pub fn matches_tuple_nip(t: &Tuple, p: &Nip) -> bool {
    match p {
        Nip::Any => true,
        Nip::Tuple(attrs) => matches_tuple(t, attrs),
        Nip::Value(Value::Tuple(x)) => x == t,
        _ => false,
    }
}

/// Type-checked matching: fails with `TypeMismatch` when the pattern's shape
/// cannot describe values of `v`'s type.
pub fn matches_nip(v: &Value, p: &Nip) -> Result<bool> {
    shape_check(v, p)?;
    Ok(matches(v, p))
}

fn shape_check(v: &Value, p: &Nip) -> Result<()> {
    let bad = || Error::TypeMismatch(format!("value {v} cannot be matched against {p}"));
    match (v, p) {
        (_, Nip::Any) | (Value::Null, _) => Ok(()),
        (_, Nip::Star) => Err(bad()),
        (_, Nip::Value(x)) => {
            let ok = matches!(
                (v, x),
                (_, Value::Null)
                    | (Value::Int(_), Value::Int(_))
                    | (Value::Str(_), Value::Str(_))
                    | (Value::Bool(_), Value::Bool(_))
                    | (Value::Tuple(_), Value::Tuple(_))
                    | (Value::Bag(_), Value::Bag(_))
            );
            if ok {
                Ok(())
            } else {
                Err(bad())
            }
        }
        (Value::Tuple(t), Nip::Tuple(attrs)) => {
            if t.len() != attrs.len() {
                return Err(bad());
            }
            for (n, q) in attrs {
                let x = t.get(n).ok_or_else(bad)?;
                shape_check(x, q)?;
            }
            Ok(())
        }
        (Value::Bag(b), Nip::Bag(items)) => {
            for (t, _) in b.iter() {
                for q in items {
                    if !matches!(q, Nip::Star) {
                        shape_check(&Value::Tuple(t.clone()), q)?;
                    }
                }
            }
            Ok(())
        }
        _ => Err(bad()),
    }
}

/// Bag matching as a b-matching between pattern slots and distinct tuples.
///
/// Each non-`*` element is a slot that must receive exactly one tuple
/// occurrence it matches; a distinct tuple offers as many occurrences as its
/// multiplicity. Without `*` every occurrence must be used, so the total
/// multiplicity must equal the number of slots; with `*` the leftovers go to
/// the star.
pub fn matches_bag(b: &Bag, items: &[Nip]) -> bool {
    let star = items.iter().any(|p| matches!(p, Nip::Star));
    let slots: Vec<&Nip> = items.iter().filter(|p| !matches!(p, Nip::Star)).collect();
    let total = b.total();
    if (slots.len() as u64) > total || (!star && slots.len() as u64 != total) {
        return false;
    }
    let tuples: Vec<(&Tuple, u64)> = b.iter().collect();
    let adj: Vec<Vec<usize>> = slots
        .iter()
        .map(|p| {
            tuples
                .iter()
                .enumerate()
                .filter(|(_, (t, _))| matches_tuple_nip(t, p))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let caps: Vec<u64> = tuples.iter().map(|(_, m)| *m).collect();
    max_b_matching(&adj, &caps) == slots.len()
}

/// Maximum matching where left vertices have capacity 1 and right vertex `j`
/// has capacity `caps[j]`, via augmenting paths.
pub fn max_b_matching(adj: &[Vec<usize>], caps: &[u64]) -> usize {
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); caps.len()];
    let mut size = 0;
    for left in 0..adj.len() {
        let mut seen = vec![false; caps.len()];
        if augment(left, adj, caps, &mut assigned, &mut seen) {
            size += 1;
        }
    }
    size
}

fn augment(
    left: usize,
    adj: &[Vec<usize>],
    caps: &[u64],
    assigned: &mut [Vec<usize>],
    seen: &mut [bool],
) -> bool {
    for &r in &adj[left] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if (assigned[r].len() as u64) < caps[r] {
            assigned[r].push(left);
            return true;
        }
        for k in 0..assigned[r].len() {
            let other = assigned[r][k];
            if augment(other, adj, caps, assigned, seen) {
                assigned[r][k] = left;
                return true;
            }
        }
    }
    false
}

/// Least general generalization of two patterns: keeps what they agree on
/// and turns every disagreement into `?`.
pub fn generalize(a: &Nip, b: &Nip) -> Nip {
    if a == b {
        return a.clone();
    }
    match (a.tuple_attrs(), b.tuple_attrs()) {
        (Some(xs), Some(ys))
            if xs.len() == ys.len() && xs.iter().zip(&ys).all(|((n, _), (m, _))| n == m) =>
        {
            Nip::Tuple(
                xs.iter()
                    .zip(&ys)
                    .map(|((n, p), (_, q))| (n.clone(), generalize(p, q)))
                    .collect(),
            )
        }
        _ => Nip::Any,
    }
}

pub fn generalize_all<'a, I: IntoIterator<Item = &'a Nip>>(items: I) -> Option<Nip> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, p| generalize(&acc, p)))
}

impl fmt::Display for Nip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nip::Any => f.write_str("?"),
            Nip::Star => f.write_str("*"),
            Nip::Value(v) => write!(f, "{v}"),
            Nip::Tuple(attrs) => {
                f.write_str("⟨")?;
                for (i, (n, p)) in attrs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {p}")?;
                }
                f.write_str("⟩")
            }
            Nip::Bag(items) => {
                f.write_str("{")?;
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl Nip {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Nip::Any => serde_json::json!({"$any": true}),
            Nip::Star => serde_json::json!({"$star": true}),
            Nip::Value(v) => v.to_json(),
            Nip::Tuple(attrs) => {
                let mut map = serde_json::Map::new();
                for (n, p) in attrs {
                    map.insert(n.clone(), p.to_json());
                }
                serde_json::Value::Object(map)
            }
            Nip::Bag(items) => serde_json::Value::Array(items.iter().map(Nip::to_json).collect()),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Nip> {
        let nip = Nip::from_json_inner(v)?;
        nip.validate()?;
        Ok(nip)
    }

    fn from_json_inner(v: &serde_json::Value) -> Result<Nip> {
        match v {
            serde_json::Value::Object(obj) => {
                if obj.len() == 1 {
                    if let Some(flag) = obj.get("$any") {
                        return marker(flag, Nip::Any);
                    }
                    if let Some(flag) = obj.get("$star") {
                        return marker(flag, Nip::Star);
                    }
                }
                let mut attrs = Vec::with_capacity(obj.len());
                for (k, x) in obj {
                    attrs.push((k.clone(), Nip::from_json_inner(x)?));
                }
                Ok(Nip::Tuple(attrs))
            }
            serde_json::Value::Array(items) => Ok(Nip::Bag(
                items
                    .iter()
                    .map(Nip::from_json_inner)
                    .collect::<Result<_>>()?,
            )),
            other => Ok(Nip::Value(Value::from_json(other)?)),
        }
    }
}

fn marker(flag: &serde_json::Value, nip: Nip) -> Result<Nip> {
    if flag == &serde_json::Value::Bool(true) {
        Ok(nip)
    } else {
        Err(Error::Parse(format!("placeholder marker must be `true`, got {flag}")))
    }
}
