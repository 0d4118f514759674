use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{AttrPath, NestedType, PrimKind, Tuple, TupleType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<CmpOp> {
        match s {
            "=" | "==" => Some(CmpOp::Eq),
            "!=" | "<>" | "≠" => Some(CmpOp::Ne),
            "<" => Some(CmpOp::Lt),
            "<=" | "≤" => Some(CmpOp::Le),
            ">" => Some(CmpOp::Gt),
            ">=" | "≥" => Some(CmpOp::Ge),
            _ => None,
        }
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Attr(AttrPath),
    Const(Value),
}

impl Operand {
    pub fn attr(p: &str) -> Operand {
        Operand::Attr(AttrPath::parse(p))
    }

    fn eval<'a>(&'a self, t: &'a Tuple) -> &'a Value {
        static NULL: Value = Value::Null;
        match self {
            Operand::Attr(p) => t.get_path(p).unwrap_or(&NULL),
            Operand::Const(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

/// Boolean combination of comparisons.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    True,
    Cmp(Comparison),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

/// Which side of a comparison an attribute reference sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Predicate {
    pub fn cmp(lhs: Operand, op: CmpOp, rhs: Operand) -> Predicate {
        Predicate::Cmp(Comparison { lhs, op, rhs })
    }

    /// `attr op const`.
    pub fn attr_const(attr: &str, op: CmpOp, c: impl Into<Value>) -> Predicate {
        Predicate::cmp(Operand::attr(attr), op, Operand::Const(c.into()))
    }

    /// `a = b` over two attributes.
    pub fn attr_eq(a: &str, b: &str) -> Predicate {
        Predicate::cmp(Operand::attr(a), CmpOp::Eq, Operand::attr(b))
    }

    /// Three-valued evaluation; `None` is unknown.
    pub fn eval3(&self, t: &Tuple) -> Option<bool> {
        match self {
            Predicate::True => Some(true),
            Predicate::Cmp(c) => {
                let l = c.lhs.eval(t);
                let r = c.rhs.eval(t);
                l.compare(r).map(|o| c.op.holds(o))
            }
            Predicate::And(ps) => {
                let mut unknown = false;
                for p in ps {
                    match p.eval3(t) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            Predicate::Or(ps) => {
                let mut unknown = false;
                for p in ps {
                    match p.eval3(t) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            Predicate::Not(p) => p.eval3(t).map(|b| !b),
        }
    }

    /// Only a definite `true` satisfies the predicate.
    pub fn eval(&self, t: &Tuple) -> bool {
        self.eval3(t) == Some(true)
    }

    /// Comparisons in depth-first order; their positions are the atom indices
    /// used by parameter slots.
    pub fn atoms(&self) -> Vec<&Comparison> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Comparison>) {
        match self {
            Predicate::True => {}
            Predicate::Cmp(c) => out.push(c),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect_atoms(out)),
            Predicate::Not(p) => p.collect_atoms(out),
        }
    }

    pub fn atom_mut(&mut self, index: usize) -> Option<&mut Comparison> {
        let mut i = 0;
        self.find_atom_mut(index, &mut i)
    }

    fn find_atom_mut(&mut self, index: usize, i: &mut usize) -> Option<&mut Comparison> {
        match self {
            Predicate::True => None,
            Predicate::Cmp(c) => {
                if *i == index {
                    Some(c)
                } else {
                    *i += 1;
                    None
                }
            }
            Predicate::And(ps) | Predicate::Or(ps) => {
                for p in ps {
                    if let Some(c) = p.find_atom_mut(index, i) {
                        return Some(c);
                    }
                }
                None
            }
            Predicate::Not(p) => p.find_atom_mut(index, i),
        }
    }

    /// All attribute references with their position.
    pub fn attr_refs(&self) -> Vec<(usize, Side, &AttrPath)> {
        let mut out = Vec::new();
        for (i, c) in self.atoms().into_iter().enumerate() {
            if let Operand::Attr(p) = &c.lhs {
                out.push((i, Side::Lhs, p));
            }
            if let Operand::Attr(p) = &c.rhs {
                out.push((i, Side::Rhs, p));
            }
        }
        out
    }

    /// Type-checks every comparison against `ty`.
    pub fn check(&self, ty: &TupleType) -> Result<()> {
        for c in self.atoms() {
            let l = operand_kind(&c.lhs, ty)?;
            let r = operand_kind(&c.rhs, ty)?;
            if let (Some(l), Some(r)) = (l, r) {
                if !l.comparable(r) {
                    return Err(Error::TypeMismatch(format!(
                        "cannot compare {} with {} in `{c}`",
                        l.name(),
                        r.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Equality atoms of a top-level conjunction whose sides are attribute
    /// references (the hashable part of a join condition).
    pub fn equi_pairs(&self) -> Vec<(&AttrPath, &AttrPath)> {
        let conjuncts: Vec<&Predicate> = match self {
            Predicate::And(ps) => ps.iter().collect(),
            other => vec![other],
        };
        conjuncts
            .into_iter()
            .filter_map(|p| match p {
                Predicate::Cmp(Comparison {
                    lhs: Operand::Attr(a),
                    op: CmpOp::Eq,
                    rhs: Operand::Attr(b),
                }) => Some((a, b)),
                _ => None,
            })
            .collect()
    }

    pub fn constants(&self) -> Vec<&Value> {
        let mut out = Vec::new();
        for c in self.atoms() {
            if let Operand::Const(v) = &c.lhs {
                out.push(v);
            }
            if let Operand::Const(v) = &c.rhs {
                out.push(v);
            }
        }
        out
    }
}

fn operand_kind(o: &Operand, ty: &TupleType) -> Result<Option<PrimKind>> {
    match o {
        Operand::Const(Value::Null) => Ok(None),
        Operand::Const(v) => v
            .prim_kind()
            .map(Some)
            .ok_or_else(|| Error::KindMismatch(format!("constant {v} is not primitive"))),
        Operand::Attr(p) => match ty.resolve(p) {
            None => Err(Error::UnknownAttribute(p.to_string())),
            Some(NestedType::Prim(k)) => Ok(Some(*k)),
            Some(NestedType::Null) => Ok(None),
            Some(other) => Err(Error::KindMismatch(format!(
                "attribute `{p}` of type {other} cannot be compared"
            ))),
        },
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Attr(p) => write!(f, "{p}"),
            Operand::Const(Value::Str(s)) => write!(f, "'{s}'"),
            Operand::Const(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, ps: &[Predicate], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        };
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Cmp(c) => write!(f, "{c}"),
            Predicate::And(ps) => join(f, ps, " and "),
            Predicate::Or(ps) => join(f, ps, " or "),
            Predicate::Not(p) => write!(f, "not {p}"),
        }
    }
}

// JSON: {"cmp": {"lhs": {"attr": "year"}, "op": ">=", "rhs": {"const": 2019}}},
// {"and": [..]}, {"or": [..]}, {"not": p} or "true".

impl Predicate {
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Predicate::True => json!("true"),
            Predicate::Cmp(c) => json!({"cmp": {
                "lhs": operand_json(&c.lhs),
                "op": c.op.symbol(),
                "rhs": operand_json(&c.rhs),
            }}),
            Predicate::And(ps) => json!({"and": ps.iter().map(Predicate::to_json).collect::<Vec<_>>()}),
            Predicate::Or(ps) => json!({"or": ps.iter().map(Predicate::to_json).collect::<Vec<_>>()}),
            Predicate::Not(p) => json!({"not": p.to_json()}),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Predicate> {
        let bad = || Error::Parse(format!("invalid predicate: {v}"));
        if v.as_str() == Some("true") || v == &serde_json::Value::Bool(true) {
            return Ok(Predicate::True);
        }
        let obj = v.as_object().ok_or_else(bad)?;
        if obj.len() != 1 {
            return Err(bad());
        }
        let (key, body) = obj.iter().next().ok_or_else(bad)?;
        match key.as_str() {
            "cmp" => {
                let op = body
                    .get("op")
                    .and_then(|o| o.as_str())
                    .and_then(CmpOp::parse)
                    .ok_or_else(bad)?;
                let lhs = operand_from_json(body.get("lhs").ok_or_else(bad)?)?;
                let rhs = operand_from_json(body.get("rhs").ok_or_else(bad)?)?;
                Ok(Predicate::cmp(lhs, op, rhs))
            }
            "and" | "or" => {
                let ps = body
                    .as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(Predicate::from_json)
                    .collect::<Result<Vec<_>>>()?;
                Ok(if key == "and" {
                    Predicate::And(ps)
                } else {
                    Predicate::Or(ps)
                })
            }
            "not" => Ok(Predicate::Not(Box::new(Predicate::from_json(body)?))),
            _ => Err(bad()),
        }
    }
}

fn operand_json(o: &Operand) -> serde_json::Value {
    match o {
        Operand::Attr(p) => serde_json::json!({"attr": p.to_string()}),
        Operand::Const(v) => serde_json::json!({"const": v.to_json()}),
    }
}

fn operand_from_json(v: &serde_json::Value) -> Result<Operand> {
    if let Some(a) = v.get("attr").and_then(|a| a.as_str()) {
        return Ok(Operand::Attr(AttrPath::parse(a)));
    }
    if let Some(c) = v.get("const") {
        return Ok(Operand::Const(Value::from_json(c)?));
    }
    Err(Error::Parse(format!("invalid operand: {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_comparisons_are_unknown() {
        let t = Tuple::from_pairs([("year", Value::Null)]);
        let p = Predicate::attr_const("year", CmpOp::Ge, 2019);
        assert_eq!(p.eval3(&t), None);
        assert!(!p.eval(&t));
        assert!(!Predicate::Not(Box::new(p)).eval(&t));
    }

    #[test]
    fn three_valued_connectives() {
        let t = Tuple::from_pairs([("a", Value::Null), ("b", Value::Int(1))]);
        let unknown = Predicate::attr_const("a", CmpOp::Eq, 1);
        let yes = Predicate::attr_const("b", CmpOp::Eq, 1);
        let no = Predicate::attr_const("b", CmpOp::Eq, 2);
        assert_eq!(Predicate::Or(vec![unknown.clone(), yes]).eval3(&t), Some(true));
        assert_eq!(Predicate::And(vec![unknown.clone(), no]).eval3(&t), Some(false));
        assert_eq!(Predicate::And(vec![unknown, Predicate::True]).eval3(&t), None);
    }

    #[test]
    fn atoms_are_addressable() {
        let mut p = Predicate::And(vec![
            Predicate::attr_const("a", CmpOp::Eq, 1),
            Predicate::Not(Box::new(Predicate::attr_eq("b", "c"))),
        ]);
        assert_eq!(p.attr_refs().len(), 3);
        p.atom_mut(1).unwrap().op = CmpOp::Lt;
        assert_eq!(p.to_string(), "(a = 1 and not b < c)");
    }

    #[test]
    fn json_round_trip() {
        let p = Predicate::Or(vec![
            Predicate::attr_const("address2.year", CmpOp::Ge, 2019),
            Predicate::True,
        ]);
        assert_eq!(Predicate::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn type_check() {
        let ty = TupleType::new(vec![
            ("name".into(), NestedType::string()),
            ("year".into(), NestedType::int()),
        ])
        .unwrap();
        assert!(Predicate::attr_const("year", CmpOp::Ge, 2019).check(&ty).is_ok());
        assert!(Predicate::attr_const("name", CmpOp::Ge, 2019).check(&ty).is_err());
        assert!(Predicate::attr_const("city", CmpOp::Eq, "NY").check(&ty).is_err());
    }
}
