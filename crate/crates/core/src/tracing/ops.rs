//! Per-operator tracing rules.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::annotated::{AnnotatedRelation, AnnotatedTuple, AnnotationLabel, Base, SaView};
use crate::engine::eval::{eval_op, flatten_element_type, flatten_tuple, join_pairs};
use crate::engine::plan::{FlattenKind, JoinKind, Operator, Params};
use crate::engine::predicate::Predicate;
use crate::engine::schema::Database;
use crate::error::Result;
use crate::model::nip::matches_tuple_nip;
use crate::model::{Bag, Nip, Tuple, TupleType, Value};

/// One operator as it reads under one schema alternative.
pub struct SaOp<'a> {
    /// 1-based.
    pub sa: usize,
    pub op: &'a Operator,
    pub in_types: Vec<&'a TupleType>,
    pub nip: &'a Nip,
}

impl SaOp<'_> {
    fn flags(&self, consistent: bool, retained: bool) -> Vec<(AnnotationLabel, bool)> {
        vec![
            (AnnotationLabel::new(Base::Valid, self.sa, self.op.id), true),
            (AnnotationLabel::new(Base::Consistent, self.sa, self.op.id), consistent),
            (AnnotationLabel::new(Base::Retained, self.sa, self.op.id), retained),
        ]
    }

    fn view(&self, payload: Tuple, mult: u64, strict: Option<(Tuple, u64)>, retained: bool) -> SaView {
        let consistent = matches_tuple_nip(&payload, self.nip);
        SaView { payload, mult, strict, flags: self.flags(consistent, retained), members: Vec::new() }
    }
}

pub struct Tracer<'a> {
    pub db: &'a Database,
    next_id: u64,
}

impl<'a> Tracer<'a> {
    pub fn new(db: &'a Database) -> Tracer<'a> {
        Tracer { db, next_id: 1 }
    }

    fn fresh(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn trace_op(&mut self, sas: &[SaOp<'_>], inputs: &[&AnnotatedRelation]) -> Result<AnnotatedRelation> {
        let op = sas[0].op;
        let tuples = match &op.params {
            Params::Table { .. } => self.table(sas)?,
            Params::Selection { .. }
            | Params::Projection { .. }
            | Params::Renaming { .. }
            | Params::TupleNest { .. }
            | Params::Aggregation { .. } => self.per_tuple(sas, inputs[0])?,
            Params::Flatten { .. } => self.flatten(sas, inputs[0])?,
            Params::Join { .. } | Params::Cross => self.join(sas, inputs[0], inputs[1]),
            Params::RelationNest { .. } | Params::Dedup => self.group(sas, inputs[0]),
            Params::Union => self.union(sas, inputs[0], inputs[1]),
            Params::Difference => self.difference(sas, inputs[0], inputs[1]),
        };
        Ok(AnnotatedRelation { op: op.id, tuples })
    }

    fn table(&mut self, sas: &[SaOp<'_>]) -> Result<Vec<AnnotatedTuple>> {
        let Params::Table { name } = &sas[0].op.params else { unreachable!() };
        let bag = self.db.relation(name)?;
        let mut out = Vec::with_capacity(bag.distinct());
        for (t, m) in bag.iter() {
            let views = sas
                .iter()
                .map(|s| {
                    let label = AnnotationLabel::new(Base::Consistent, s.sa, s.op.id);
                    Some(SaView {
                        payload: t.clone(),
                        mult: m,
                        strict: Some((t.clone(), m)),
                        flags: vec![(label, matches_tuple_nip(t, s.nip))],
                        members: Vec::new(),
                    })
                })
                .collect();
            out.push(AnnotatedTuple { id: self.fresh(), views });
        }
        Ok(out)
    }

    /// Operators that map every tuple to at most one tuple and keep its id.
    fn per_tuple(&mut self, sas: &[SaOp<'_>], input: &AnnotatedRelation) -> Result<Vec<AnnotatedTuple>> {
        let db = self.db;
        input
            .tuples
            .par_iter()
            .map(|t| {
                let mut views = Vec::with_capacity(sas.len());
                for (s, v) in sas.iter().zip(&t.views) {
                    let Some(v) = v else {
                        views.push(None);
                        continue;
                    };
                    let mut nv = match &s.op.params {
                        Params::Selection { pred } => {
                            let retained = match &v.strict {
                                Some((st, _)) => pred.eval(st),
                                None => pred.eval(&v.payload),
                            };
                            let strict = v.strict.clone().filter(|(st, _)| pred.eval(st));
                            s.view(v.payload.clone(), v.mult, strict, retained)
                        }
                        _ => {
                            let payload = map_one(s, &v.payload, db)?;
                            let strict = match &v.strict {
                                Some((st, m)) => Some((map_one(s, st, db)?, *m)),
                                None => None,
                            };
                            s.view(payload, v.mult, strict, true)
                        }
                    };
                    let mut flags = v.flags.clone();
                    flags.append(&mut nv.flags);
                    nv.flags = flags;
                    nv.members = vec![t.id];
                    views.push(Some(nv));
                }
                Ok(AnnotatedTuple { id: t.id, views })
            })
            .collect()
    }

    fn flatten(&mut self, sas: &[SaOp<'_>], input: &AnnotatedRelation) -> Result<Vec<AnnotatedTuple>> {
        let mut elems = Vec::with_capacity(sas.len());
        for s in sas {
            let Params::Flatten { kind, attr } = &s.op.params else { unreachable!() };
            elems.push(flatten_element_type(s.in_types[0], *kind, attr)?);
        }
        let mut out = Vec::new();
        for t in &input.tuples {
            let mut per_sa: Vec<Vec<SaView>> = Vec::with_capacity(sas.len());
            for ((s, v), elem) in sas.iter().zip(&t.views).zip(&elems) {
                let Some(v) = v else {
                    per_sa.push(Vec::new());
                    continue;
                };
                let Params::Flatten { kind, attr } = &s.op.params else { unreachable!() };
                let relaxed_kind = if *kind == FlattenKind::Tuple { FlattenKind::Tuple } else { FlattenKind::Outer };
                let mut rows: Vec<SaView> = flatten_tuple(&v.payload, relaxed_kind, attr, elem)
                    .into_iter()
                    .map(|(row, f, padded)| {
                        let retained = !(padded && *kind == FlattenKind::Inner);
                        s.view(row, v.mult * f, None, retained)
                    })
                    .collect();
                if let Some((st, sm)) = &v.strict {
                    for (row, f, padded) in flatten_tuple(st, *kind, attr, elem) {
                        if padded && *kind == FlattenKind::Inner {
                            continue;
                        }
                        match rows.iter_mut().find(|r| r.strict.is_none() && r.payload == row) {
                            Some(r) => r.strict = Some((row, sm * f)),
                            None => {
                                let strict = Some((row.clone(), sm * f));
                                rows.push(s.view(row, sm * f, strict, true));
                            }
                        }
                    }
                }
                for r in &mut rows {
                    let mut flags = v.flags.clone();
                    flags.append(&mut r.flags);
                    r.flags = flags;
                    r.members = vec![t.id];
                }
                per_sa.push(rows);
            }
            // rows of different alternatives are paired by position
            let n = per_sa.iter().map(Vec::len).max().unwrap_or(0);
            let mut iters: Vec<_> = per_sa.into_iter().map(Vec::into_iter).collect();
            for _ in 0..n {
                let views = iters.iter_mut().map(Iterator::next).collect();
                out.push(AnnotatedTuple { id: self.fresh(), views });
            }
        }
        Ok(out)
    }

    fn join(&mut self, sas: &[SaOp<'_>], left: &AnnotatedRelation, right: &AnnotatedRelation) -> Vec<AnnotatedTuple> {
        type Key = (Option<u64>, Option<u64>);
        let mut rows: BTreeMap<Key, Vec<Option<SaView>>> = BTreeMap::new();
        let cross = matches!(sas[0].op.params, Params::Cross);
        for (k, s) in sas.iter().enumerate() {
            let (kind, pred) = match &s.op.params {
                Params::Join { kind, pred } => (*kind, pred.clone()),
                _ => (JoinKind::Inner, Predicate::True),
            };
            let ls: Vec<(u64, &SaView)> = left
                .tuples
                .iter()
                .filter_map(|t| t.views[k].as_ref().map(|v| (t.id, v)))
                .collect();
            let rs: Vec<(u64, &SaView)> = right
                .tuples
                .iter()
                .filter_map(|t| t.views[k].as_ref().map(|v| (t.id, v)))
                .collect();
            let lp: Vec<&Tuple> = ls.iter().map(|(_, v)| &v.payload).collect();
            let rp: Vec<&Tuple> = rs.iter().map(|(_, v)| &v.payload).collect();
            let relaxed: BTreeSet<(usize, usize)> = join_pairs(&lp, &rp, &pred, s.in_types[0]).into_iter().collect();
            let li: Vec<usize> = (0..ls.len()).filter(|i| ls[*i].1.strict.is_some()).collect();
            let ri: Vec<usize> = (0..rs.len()).filter(|j| rs[*j].1.strict.is_some()).collect();
            let lsp: Vec<&Tuple> = li.iter().map(|i| &ls[*i].1.strict.as_ref().unwrap().0).collect();
            let rsp: Vec<&Tuple> = ri.iter().map(|j| &rs[*j].1.strict.as_ref().unwrap().0).collect();
            let strict: BTreeSet<(usize, usize)> = join_pairs(&lsp, &rsp, &pred, s.in_types[0])
                .into_iter()
                .map(|(a, b)| (li[a], ri[b]))
                .collect();

            let mut put = |key: Key, view: SaView| {
                rows.entry(key).or_insert_with(|| vec![None; sas.len()])[k] = Some(view);
            };
            for &(a, b) in relaxed.union(&strict) {
                let (lid, l) = ls[a];
                let (rid, r) = rs[b];
                let both = l.strict.is_some() && r.strict.is_some();
                let st = match (&l.strict, &r.strict) {
                    (Some((x, m)), Some((y, n))) if strict.contains(&(a, b)) => Some((x.concat(y), m * n)),
                    _ => None,
                };
                let retained = if both { strict.contains(&(a, b)) } else { relaxed.contains(&(a, b)) };
                let mut v = s.view(l.payload.concat(&r.payload), l.mult * r.mult, st, retained);
                let mut flags = l.flags.clone();
                flags.extend(r.flags.iter().cloned());
                flags.append(&mut v.flags);
                v.flags = flags;
                v.members = vec![lid, rid];
                put((Some(lid), Some(rid)), v);
            }
            if cross {
                continue;
            }
            let right_nulls = Tuple::nulls(s.in_types[1]);
            let left_nulls = Tuple::nulls(s.in_types[0]);
            for (a, (lid, l)) in ls.iter().enumerate() {
                let has_rel = relaxed.iter().any(|p| p.0 == a);
                let has_strict = strict.iter().any(|p| p.0 == a);
                let pad_strict = kind.keeps_left() && l.strict.is_some() && !has_strict;
                if has_rel && !pad_strict {
                    continue;
                }
                let retained = kind.keeps_left() && if l.strict.is_some() { !has_strict } else { !has_rel };
                let st = l.strict.as_ref().filter(|_| pad_strict).map(|(x, m)| (x.concat(&right_nulls), *m));
                let mut v = s.view(l.payload.concat(&right_nulls), l.mult, st, retained);
                let mut flags = l.flags.clone();
                flags.append(&mut v.flags);
                v.flags = flags;
                v.members = vec![*lid];
                put((Some(*lid), None), v);
            }
            for (b, (rid, r)) in rs.iter().enumerate() {
                let has_rel = relaxed.iter().any(|p| p.1 == b);
                let has_strict = strict.iter().any(|p| p.1 == b);
                let pad_strict = kind.keeps_right() && r.strict.is_some() && !has_strict;
                if has_rel && !pad_strict {
                    continue;
                }
                let retained = kind.keeps_right() && if r.strict.is_some() { !has_strict } else { !has_rel };
                let st = r.strict.as_ref().filter(|_| pad_strict).map(|(y, m)| (left_nulls.concat(y), *m));
                let mut v = s.view(left_nulls.concat(&r.payload), r.mult, st, retained);
                let mut flags = r.flags.clone();
                flags.append(&mut v.flags);
                v.flags = flags;
                v.members = vec![*rid];
                put((None, Some(*rid)), v);
            }
        }
        rows.into_values()
            .map(|views| AnnotatedTuple { id: self.fresh(), views })
            .collect()
    }

    /// Relation nesting and duplicate elimination: groups per alternative,
    /// then merges groups of different alternatives that share their key.
    fn group(&mut self, sas: &[SaOp<'_>], input: &AnnotatedRelation) -> Vec<AnnotatedTuple> {
        let mut rows: BTreeMap<Tuple, Vec<Option<SaView>>> = BTreeMap::new();
        for (k, s) in sas.iter().enumerate() {
            let split = |t: &Tuple| -> (Tuple, Option<Tuple>) {
                match &s.op.params {
                    Params::RelationNest { attrs, .. } => (t.without(attrs), Some(t.project(attrs))),
                    _ => (t.clone(), None),
                }
            };
            let finish = |key: &Tuple, members: Bag| -> Tuple {
                let mut row = key.clone();
                if let Params::RelationNest { target, .. } = &s.op.params {
                    row.push(target.clone(), Value::Bag(members));
                }
                row
            };
            let mut relaxed: BTreeMap<Tuple, (Bag, Vec<u64>)> = BTreeMap::new();
            let mut strict: BTreeMap<Tuple, (Bag, Vec<u64>)> = BTreeMap::new();
            for t in &input.tuples {
                let Some(v) = &t.views[k] else { continue };
                let (key, member) = split(&v.payload);
                let e = relaxed.entry(key).or_default();
                if let Some(m) = member {
                    e.0.insert(m, v.mult);
                }
                e.1.push(t.id);
                if let Some((st, sm)) = &v.strict {
                    let (key, member) = split(st);
                    let e = strict.entry(key).or_default();
                    if let Some(m) = member {
                        e.0.insert(m, *sm);
                    }
                    e.1.push(t.id);
                }
            }
            let mut views: BTreeMap<Tuple, SaView> = BTreeMap::new();
            for (key, (members, ids)) in relaxed {
                let mut v = s.view(finish(&key, members), 1, None, true);
                v.members = ids;
                views.insert(key, v);
            }
            for (key, (members, ids)) in strict {
                let row = finish(&key, members);
                match views.get_mut(&key) {
                    Some(v) => {
                        v.strict = Some((row, 1));
                        for id in ids {
                            if !v.members.contains(&id) {
                                v.members.push(id);
                            }
                        }
                    }
                    None => {
                        let mut v = s.view(row.clone(), 1, Some((row, 1)), true);
                        v.members = ids;
                        views.insert(key, v);
                    }
                }
            }
            for (key, v) in views {
                rows.entry(key).or_insert_with(|| vec![None; sas.len()])[k] = Some(v);
            }
        }
        rows.into_values()
            .map(|views| AnnotatedTuple { id: self.fresh(), views })
            .collect()
    }

    fn union(&mut self, sas: &[SaOp<'_>], left: &AnnotatedRelation, right: &AnnotatedRelation) -> Vec<AnnotatedTuple> {
        let mut out = Vec::with_capacity(left.tuples.len() + right.tuples.len());
        for (side, rel) in [left, right].into_iter().enumerate() {
            for t in &rel.tuples {
                let views = sas
                    .iter()
                    .zip(&t.views)
                    .map(|(s, v)| {
                        let v = v.as_ref()?;
                        let names: Vec<&str> = s.in_types[0].names().collect();
                        let rename = |x: &Tuple| if side == 0 { x.clone() } else { x.with_names(names.iter().copied()) };
                        let strict = v.strict.as_ref().map(|(x, m)| (rename(x), *m));
                        let mut nv = s.view(rename(&v.payload), v.mult, strict, true);
                        let mut flags = v.flags.clone();
                        flags.append(&mut nv.flags);
                        nv.flags = flags;
                        nv.members = vec![t.id];
                        Some(nv)
                    })
                    .collect();
                out.push(AnnotatedTuple { id: t.id, views });
            }
        }
        out
    }

    /// Keeps every left tuple; only the strict view subtracts the right input.
    fn difference(&mut self, sas: &[SaOp<'_>], left: &AnnotatedRelation, right: &AnnotatedRelation) -> Vec<AnnotatedTuple> {
        let mut remaining: Vec<HashMap<Tuple, u64>> = sas
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let names: Vec<&str> = s.in_types[0].names().collect();
                let mut m: HashMap<Tuple, u64> = HashMap::new();
                for t in &right.tuples {
                    if let Some((x, c)) = t.views[k].as_ref().and_then(|v| v.strict.as_ref()) {
                        *m.entry(x.with_names(names.iter().copied())).or_default() += c;
                    }
                }
                m
            })
            .collect();
        left.tuples
            .iter()
            .map(|t| {
                let views = sas
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let v = t.views[k].as_ref()?;
                        let strict = v.strict.as_ref().and_then(|(x, m)| {
                            let r = remaining[k].entry(x.clone()).or_default();
                            let take = (*r).min(*m);
                            *r -= take;
                            (m - take > 0).then(|| (x.clone(), m - take))
                        });
                        let mut nv = s.view(v.payload.clone(), v.mult, strict, true);
                        let mut flags = v.flags.clone();
                        flags.append(&mut nv.flags);
                        nv.flags = flags;
                        nv.members = vec![t.id];
                        Some(nv)
                    })
                    .collect();
                AnnotatedTuple { id: t.id, views }
            })
            .collect()
    }
}

/// Applies a tuple-at-a-time operator to a single tuple.
fn map_one(s: &SaOp<'_>, t: &Tuple, db: &Database) -> Result<Tuple> {
    let bag = Bag::from_counted([(t.clone(), 1)]);
    let out = eval_op(s.op, &[&bag], &s.in_types, db)?;
    let t = out.iter().next().map(|(x, _)| x.clone()).expect("one output tuple");
    Ok(t)
}
