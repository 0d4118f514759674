use std::collections::BTreeMap;

use super::plan::{AggFn, FlattenKind, OpId, Operator, Params, QueryPlan};
use crate::error::{Error, Result};
use crate::model::{Bag, NestedType, PrimKind, TupleType};

/// Declared element types of the base relations.
pub type DbSchema = BTreeMap<String, TupleType>;

/// Named base relations with their element types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, (TupleType, Bag)>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    /// Adds a relation after checking every tuple against `ty`.
    pub fn insert(&mut self, name: impl Into<String>, ty: TupleType, bag: Bag) -> Result<()> {
        if let Some((t, _)) = bag.iter().find(|(t, _)| !ty.admits(t)) {
            return Err(Error::TypeMismatch(format!("{t} does not conform to {ty}")));
        }
        self.relations.insert(name.into(), (ty, bag));
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, ty: TupleType, bag: Bag) -> Result<Database> {
        self.insert(name, ty, bag)?;
        Ok(self)
    }

    pub fn relation(&self, name: &str) -> Result<&Bag> {
        self.relations
            .get(name)
            .map(|(_, b)| b)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn relation_type(&self, name: &str) -> Result<&TupleType> {
        self.relations
            .get(name)
            .map(|(t, _)| t)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn schema(&self) -> DbSchema {
        self.relations
            .iter()
            .map(|(n, (t, _))| (n.clone(), t.clone()))
            .collect()
    }

    pub fn total_tuples(&self) -> u64 {
        self.relations.values().map(|(_, b)| b.total()).sum()
    }
}

/// Element type of every operator's output.
pub fn infer_schema(plan: &QueryPlan, db: &DbSchema) -> Result<BTreeMap<OpId, TupleType>> {
    let mut out: BTreeMap<OpId, TupleType> = BTreeMap::new();
    for id in plan.postorder() {
        let op = plan.get(id);
        let inputs: Vec<&TupleType> = op.inputs.iter().map(|i| &out[i]).collect();
        let ty = output_type(op, &inputs, db)?;
        out.insert(id, ty);
    }
    Ok(out)
}

/// Element type of the plan's result.
pub fn root_type(plan: &QueryPlan, db: &DbSchema) -> Result<TupleType> {
    let mut all = infer_schema(plan, db)?;
    Ok(all.remove(&plan.root()).expect("root is typed"))
}

/// Output element type of one operator given its input element types.
pub fn output_type(op: &Operator, inputs: &[&TupleType], db: &DbSchema) -> Result<TupleType> {
    let ctx = |e: Error| match e {
        Error::UnknownAttribute(a) => Error::UnknownAttribute(format!("{a} (operator {})", op.id)),
        other => other,
    };
    output_type_inner(op, inputs, db).map_err(ctx)
}

fn output_type_inner(op: &Operator, inputs: &[&TupleType], db: &DbSchema) -> Result<TupleType> {
    match &op.params {
        Params::Table { name } => db
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownRelation(name.clone())),
        Params::Projection { attrs } => inputs[0].project(attrs),
        Params::Renaming { pairs } => {
            let input = inputs[0];
            for (from, _) in pairs {
                if !input.contains(from) {
                    return Err(Error::UnknownAttribute(from.clone()));
                }
            }
            let attrs = input
                .attrs()
                .iter()
                .map(|(n, t)| {
                    let to = pairs
                        .iter()
                        .find(|(f, _)| f == n)
                        .map(|(_, to)| to.clone())
                        .unwrap_or_else(|| n.clone());
                    (to, t.clone())
                })
                .collect();
            TupleType::new(attrs)
        }
        Params::Selection { pred } => {
            pred.check(inputs[0])?;
            Ok(inputs[0].clone())
        }
        Params::Join { pred, .. } => {
            let ty = inputs[0].concat(inputs[1])?;
            pred.check(&ty)?;
            Ok(ty)
        }
        Params::Cross => inputs[0].concat(inputs[1]),
        Params::Flatten { kind, attr } => {
            let input = inputs[0];
            let aty = input
                .resolve(attr)
                .ok_or_else(|| Error::UnknownAttribute(attr.to_string()))?;
            let inner = match (kind, aty) {
                (FlattenKind::Tuple, NestedType::Tuple(t)) => t,
                (FlattenKind::Inner | FlattenKind::Outer, NestedType::Bag(_)) => {
                    aty.bag_element().ok_or_else(|| {
                        Error::KindMismatch(format!("`{attr}` has no known element type"))
                    })?
                }
                (FlattenKind::Tuple, other) => {
                    return Err(Error::KindMismatch(format!(
                        "tuple flatten needs a tuple attribute, `{attr}` is {other}"
                    )))
                }
                (_, other) => {
                    return Err(Error::KindMismatch(format!(
                        "relation flatten needs a bag attribute, `{attr}` is {other}"
                    )))
                }
            };
            input.concat(inner)
        }
        Params::TupleNest { attrs, target } | Params::RelationNest { attrs, target } => {
            let input = inputs[0];
            let nested = input.project(attrs)?;
            if attrs.is_empty() {
                return Err(Error::InvalidPlan("nesting needs at least one attribute".into()));
            }
            let mut out = input.without(attrs);
            let cty = if matches!(op.params, Params::TupleNest { .. }) {
                NestedType::Tuple(nested)
            } else {
                NestedType::bag_of(nested)
            };
            out.push(target, cty)?;
            Ok(out)
        }
        Params::Aggregation { func, source, target } => {
            let input = inputs[0];
            let sty = input
                .resolve(source)
                .ok_or_else(|| Error::UnknownAttribute(source.to_string()))?;
            let elem = match sty {
                NestedType::Bag(_) => sty.bag_element(),
                _ => return Err(Error::AggregationOnNonBag(source.to_string())),
            };
            let vty = match elem {
                Some(e) if e.len() == 1 => e.attrs()[0].1.clone(),
                Some(e) => {
                    return Err(Error::KindMismatch(format!(
                        "aggregation source `{source}` must hold unary tuples, found {e}"
                    )))
                }
                None => NestedType::Null,
            };
            let out_ty = agg_output_type(*func, &vty).ok_or_else(|| {
                Error::KindMismatch(format!("{} is not defined over {vty}", func.name()))
            })?;
            let mut out = input.clone();
            out.push(target, out_ty)?;
            Ok(out)
        }
        Params::Union | Params::Difference => {
            let (l, r) = (inputs[0], inputs[1]);
            if l.len() != r.len() {
                return Err(Error::TypeMismatch(format!("{l} and {r} are not union compatible")));
            }
            let mut attrs = Vec::with_capacity(l.len());
            for ((n, a), (_, b)) in l.attrs().iter().zip(r.attrs()) {
                let t = a.unify(b).ok_or_else(|| {
                    Error::TypeMismatch(format!("{l} and {r} are not union compatible"))
                })?;
                attrs.push((n.clone(), t));
            }
            TupleType::new(attrs)
        }
        Params::Dedup => Ok(inputs[0].clone()),
    }
}

pub fn agg_output_type(func: AggFn, value: &NestedType) -> Option<NestedType> {
    match func {
        AggFn::Count => Some(NestedType::int()),
        AggFn::Sum | AggFn::Avg => match value {
            NestedType::Prim(PrimKind::Int | PrimKind::Date) | NestedType::Null => {
                Some(NestedType::int())
            }
            _ => None,
        },
        AggFn::Min | AggFn::Max => match value {
            NestedType::Prim(_) | NestedType::Null => Some(value.clone()),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::predicate::{CmpOp, Predicate};
    use crate::model::AttrPath;

    fn addr() -> TupleType {
        TupleType::new(vec![
            ("city".into(), NestedType::string()),
            ("year".into(), NestedType::int()),
        ])
        .unwrap()
    }

    fn person() -> TupleType {
        TupleType::new(vec![
            ("name".into(), NestedType::string()),
            ("address1".into(), NestedType::bag_of(addr())),
            ("address2".into(), NestedType::bag_of(addr())),
        ])
        .unwrap()
    }

    fn db() -> DbSchema {
        BTreeMap::from([("person".to_string(), person())])
    }

    fn running_plan() -> QueryPlan {
        QueryPlan::new(vec![
            Operator::new(1, Params::Table { name: "person".into() }, vec![]),
            Operator::new(
                2,
                Params::Flatten { kind: FlattenKind::Inner, attr: AttrPath::parse("address2") },
                vec![1],
            ),
            Operator::new(
                3,
                Params::Selection { pred: Predicate::attr_const("year", CmpOp::Ge, 2019) },
                vec![2],
            ),
            Operator::new(4, Params::Projection { attrs: vec!["name".into(), "city".into()] }, vec![3]),
            Operator::new(
                5,
                Params::RelationNest { attrs: vec!["name".into()], target: "nList".into() },
                vec![4],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn running_example_root_type() {
        let types = infer_schema(&running_plan(), &db()).unwrap();
        let expected = TupleType::new(vec![
            ("city".into(), NestedType::string()),
            (
                "nList".into(),
                NestedType::bag_of(TupleType::new(vec![("name".into(), NestedType::string())]).unwrap()),
            ),
        ])
        .unwrap();
        assert_eq!(types[&5], expected);
        assert_eq!(types[&1], person());
    }

    #[test]
    fn inner_flatten_appends_element_attributes() {
        let types = infer_schema(&running_plan(), &db()).unwrap();
        let names: Vec<&str> = types[&2].names().collect();
        assert_eq!(names, ["name", "address1", "address2", "city", "year"]);
    }

    #[test]
    fn flatten_kind_mismatch() {
        let plan = QueryPlan::new(vec![
            Operator::new(1, Params::Table { name: "person".into() }, vec![]),
            Operator::new(
                2,
                Params::Flatten { kind: FlattenKind::Tuple, attr: AttrPath::parse("address2") },
                vec![1],
            ),
        ])
        .unwrap();
        assert!(matches!(infer_schema(&plan, &db()), Err(Error::KindMismatch(_))));
    }

    #[test]
    fn flatten_name_clash() {
        let plan = QueryPlan::new(vec![
            Operator::new(1, Params::Table { name: "person".into() }, vec![]),
            Operator::new(
                2,
                Params::Flatten { kind: FlattenKind::Inner, attr: AttrPath::parse("address2") },
                vec![1],
            ),
            Operator::new(
                3,
                Params::Flatten { kind: FlattenKind::Inner, attr: AttrPath::parse("address1") },
                vec![2],
            ),
        ])
        .unwrap();
        assert!(matches!(infer_schema(&plan, &db()), Err(Error::DuplicateAttribute(_))));
    }
}
