//! Schema alternatives: consistent substitutions of alternative source
//! attributes into operator parameters.

use std::collections::{BTreeMap, BTreeSet};

use crate::backtrace::{attribute_origins, resolve_origin, schema_backtrace, BacktraceResult, SourceAttr};
use crate::engine::plan::{OpId, QueryPlan};
use crate::engine::schema::{infer_schema, DbSchema};
use crate::error::{Error, Result};
use crate::model::{AttrPath, Nip, TupleType};
use crate::reparam::{set_slot, slots, Slot};

pub const DEFAULT_MAX_SAS: usize = 16;

/// Alternative paths per source attribute path, in configuration order. Keys
/// carry no relation name and apply to every relation that has the path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeAlternatives {
    entries: Vec<(AttrPath, Vec<AttrPath>)>,
}

impl AttributeAlternatives {
    pub fn new() -> AttributeAlternatives {
        AttributeAlternatives::default()
    }

    pub fn insert(&mut self, source: AttrPath, alts: Vec<AttrPath>) {
        match self.entries.iter_mut().find(|(s, _)| *s == source) {
            Some((_, v)) => {
                for a in alts {
                    if !v.contains(&a) {
                        v.push(a);
                    }
                }
            }
            None => self.entries.push((source, alts)),
        }
    }

    pub fn with(mut self, source: &str, alts: &[&str]) -> AttributeAlternatives {
        self.insert(AttrPath::parse(source), alts.iter().map(|a| AttrPath::parse(a)).collect());
        self
    }

    pub fn get(&self, source: &AttrPath) -> &[AttrPath] {
        self.entries
            .iter()
            .find(|(s, _)| s == source)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(AttrPath, Vec<AttrPath>)] {
        &self.entries
    }

    /// Every source and alternative must exist in a common relation with a
    /// compatible type.
    pub fn validate(&self, db: &DbSchema) -> Result<()> {
        for (src, alts) in &self.entries {
            let holders: Vec<&TupleType> = db.values().filter(|t| t.resolve_schema(src).is_some()).collect();
            if holders.is_empty() {
                return Err(Error::InvalidAlternative(format!("`{src}` is not an attribute of any relation")));
            }
            for a in alts {
                let ok = holders.iter().any(|t| {
                    match (t.resolve_schema(src), t.resolve_schema(a)) {
                        (Some(x), Some(y)) => x.compatible(y),
                        _ => false,
                    }
                });
                if !ok {
                    return Err(Error::InvalidAlternative(format!(
                        "`{a}` is not a type-compatible alternative of `{src}` in the same relation"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(v: &serde_json::Value) -> Result<AttributeAlternatives> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("`alternatives` must be an object".into()))?;
        let mut out = AttributeAlternatives::new();
        for (k, list) in obj {
            let items = list
                .as_array()
                .ok_or_else(|| Error::Config(format!("alternatives of `{k}` must be an array")))?;
            let alts = items
                .iter()
                .map(|x| {
                    x.as_str()
                        .map(AttrPath::parse)
                        .ok_or_else(|| Error::Config(format!("alternatives of `{k}` must be strings")))
                })
                .collect::<Result<_>>()?;
            out.insert(AttrPath::parse(k), alts);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(
                k.to_string(),
                serde_json::Value::Array(v.iter().map(|a| serde_json::Value::String(a.to_string())).collect()),
            );
        }
        serde_json::Value::Object(map)
    }
}

/// One schema alternative with its substituted plan and backtraced patterns.
#[derive(Clone, Debug)]
pub struct SchemaAlternative {
    /// 1 for the original schema.
    pub index: usize,
    pub substitutions: BTreeMap<(OpId, Slot), AttrPath>,
    pub plan: QueryPlan,
    pub backtrace: BacktraceResult,
}

impl SchemaAlternative {
    pub fn nips(&self) -> &BTreeMap<String, Nip> {
        &self.backtrace.nips
    }

    /// Operators whose parameters the substitutions change.
    pub fn prefix(&self) -> BTreeSet<OpId> {
        self.substitutions.keys().map(|(op, _)| *op).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let subs: Vec<serde_json::Value> = self
            .substitutions
            .iter()
            .map(|((op, slot), p)| serde_json::json!({"op": op, "slot": slot.to_string(), "attr": p.to_string()}))
            .collect();
        let nips: serde_json::Map<String, serde_json::Value> = self
            .nips()
            .iter()
            .map(|(r, n)| (r.clone(), serde_json::Value::String(n.to_string())))
            .collect();
        serde_json::json!({"index": self.index, "substitutions": subs, "nips": nips})
    }
}

/// Enumerates the schema alternatives of `plan` for question `t`, the
/// original first. Operators are visited bottom-up and every slot tries its
/// current attribute first, then the configured alternatives reachable in
/// its input.
pub fn enumerate_sas(
    plan: &QueryPlan,
    db: &DbSchema,
    t: &Nip,
    alts: &AttributeAlternatives,
    max: usize,
) -> Result<Vec<SchemaAlternative>> {
    alts.validate(db)?;
    let root_type = infer_schema(plan, db)?.remove(&plan.root()).expect("root typed");
    let mut search = SaSearch {
        original: plan,
        order: plan.postorder(),
        db,
        alts,
        root_type,
        found: Vec::new(),
    };
    let mut current = plan.clone();
    search.dfs(0, &mut current);
    if search.found.len() > max {
        return Err(Error::TooManyAlternatives { count: search.found.len(), max });
    }
    search
        .found
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let substitutions = substitutions(plan, &p);
            let backtrace = schema_backtrace(&p, db, t)?;
            Ok(SchemaAlternative { index: i + 1, substitutions, plan: p, backtrace })
        })
        .collect()
}

fn substitutions(original: &QueryPlan, p: &QueryPlan) -> BTreeMap<(OpId, Slot), AttrPath> {
    let mut out = BTreeMap::new();
    for op in p.ops() {
        let before = slots(original.get(op.id));
        for ((slot, path), (_, old)) in slots(op).into_iter().zip(before) {
            if path != old {
                out.insert((op.id, slot), path);
            }
        }
    }
    out
}

struct SaSearch<'a> {
    original: &'a QueryPlan,
    order: Vec<OpId>,
    db: &'a DbSchema,
    alts: &'a AttributeAlternatives,
    root_type: TupleType,
    found: Vec<QueryPlan>,
}

impl SaSearch<'_> {
    fn dfs(&mut self, k: usize, current: &mut QueryPlan) {
        if k == self.order.len() {
            if let Ok(types) = infer_schema(current, self.db) {
                if types[&current.root()] == self.root_type && !self.found.contains(current) {
                    self.found.push(current.clone());
                }
            }
            return;
        }
        let id = self.order[k];
        let op = current.get(id).clone();
        let op_slots = slots(&op);
        if op_slots.is_empty() {
            self.dfs(k + 1, current);
            return;
        }
        let Some(cands) = self.candidates(current, id) else {
            return;
        };
        let mut idx = vec![0usize; cands.len()];
        loop {
            let mut params = op.params.clone();
            let mut ok = true;
            for ((slot, _), (c, &i)) in op_slots.iter().zip(cands.iter().zip(&idx)) {
                match set_slot(&params, *slot, &c[i]) {
                    Ok(p) => params = p,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                current.set_params(id, params).expect("same kind");
                if infer_schema(&current.prefix(id), self.db).is_ok() {
                    self.dfs(k + 1, current);
                }
            }
            let mut d = 0;
            while d < idx.len() {
                idx[d] += 1;
                if idx[d] < cands[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == idx.len() {
                break;
            }
        }
        current.set_params(id, op.params).expect("same kind");
    }

    /// Candidate paths per slot of operator `id` over its current inputs.
    fn candidates(&self, current: &QueryPlan, id: OpId) -> Option<Vec<Vec<AttrPath>>> {
        let op = current.get(id);
        let mut origins = Vec::new();
        let mut types: Vec<TupleType> = Vec::new();
        for i in &op.inputs {
            let sub = current.prefix(*i);
            let o = attribute_origins(&sub, self.db).ok()?;
            origins.extend(o[i].iter().cloned());
            types.push(infer_schema(&sub, self.db).ok()?.remove(i).expect("typed"));
        }
        let mut paths: Vec<AttrPath> = Vec::new();
        for ty in &types {
            for (p, _) in ty.value_paths() {
                if !paths.contains(&p) {
                    paths.push(p);
                }
            }
        }
        let original_slots = slots(self.original.get(id));
        let mut out = Vec::new();
        for ((_, path), (_, orig)) in slots(op).into_iter().zip(original_slots) {
            let mut c = vec![orig.clone()];
            if path != orig {
                c.push(path.clone());
            }
            let sources: Vec<SourceAttr> = resolve_origin(&origins, &orig)
                .map(|o| o.sources)
                .unwrap_or_default();
            for s in sources {
                for alt in self.alts.get(&s.path) {
                    let target = SourceAttr { relation: s.relation.clone(), path: alt.clone() };
                    for p in &paths {
                        let hit = resolve_origin(&origins, p)
                            .map(|o| o.sources.contains(&target))
                            .unwrap_or(false);
                        if hit && !c.contains(p) {
                            c.push(p.clone());
                        }
                    }
                }
            }
            out.push(c);
        }
        Some(out)
    }
}
