use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::changes::{grid_size, param_grid, ActiveDomain};
use crate::engine::plan::{OpId, QueryPlan};
use crate::engine::schema::{infer_schema, output_type, Database, DbSchema};
use crate::engine::evaluate;
use crate::error::{Error, Result};
use crate::model::{bag_distance, matches, Bag, Nip, TupleType, Value};

pub const DEFAULT_BUDGET: u128 = 200_000;

/// Does some result tuple of `plan` match `t`?
pub fn is_successful(plan: &QueryPlan, db: &Database, t: &Nip) -> Result<bool> {
    let result = evaluate(plan, db)?;
    Ok(result_matches(&result, t))
}

pub fn result_matches(result: &Bag, t: &Nip) -> bool {
    result.iter().any(|(r, _)| matches(&Value::Tuple(r.clone()), t))
}

/// One changed-operator set with the smallest side effect found for it.
#[derive(Clone, Debug)]
pub struct SrEntry {
    pub ops: BTreeSet<OpId>,
    pub d: u64,
    pub witness: QueryPlan,
    /// No SR with a strictly smaller operator set has a distance ≤ `d`.
    pub msr: bool,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Every successful changed-operator set, ordered by size then ids.
    pub srs: Vec<SrEntry>,
    /// Number of reparameterizations evaluated.
    pub candidates: usize,
}

impl OracleResult {
    pub fn msrs(&self) -> impl Iterator<Item = &SrEntry> {
        self.srs.iter().filter(|e| e.msr)
    }

    pub fn get(&self, ops: &BTreeSet<OpId>) -> Option<&SrEntry> {
        self.srs.iter().find(|e| &e.ops == ops)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.msrs()
                .map(|e| {
                    serde_json::json!({
                        "ops": e.ops.iter().collect::<Vec<_>>(),
                        "d": e.d,
                        "witness": e.witness.to_json(),
                    })
                })
                .collect(),
        )
    }
}

/// Exhaustive search over all reparameterizations in the admissible grids.
pub fn exact_explanations_oracle(
    plan: &QueryPlan,
    db: &Database,
    t: &Nip,
    budget: u128,
) -> Result<OracleResult> {
    let original = evaluate(plan, db)?;
    if result_matches(&original, t) {
        return Err(Error::PreconditionViolated(
            "the original query already returns a matching tuple".into(),
        ));
    }
    let adom = ActiveDomain::from_database(db, plan);
    let candidates = enumerate_reparameterizations(plan, &db.schema(), &adom, budget)?;
    let scored: Vec<Option<(BTreeSet<OpId>, u64, usize)>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let result = evaluate(q, db).ok()?;
            if !result_matches(&result, t) {
                return None;
            }
            Some((plan.changed_ops(q), bag_distance(&original, &result), i))
        })
        .collect();
    let mut best: BTreeMap<BTreeSet<OpId>, (u64, usize)> = BTreeMap::new();
    for (ops, d, i) in scored.into_iter().flatten() {
        let e = best.entry(ops).or_insert((d, i));
        if (d, i) < *e {
            *e = (d, i);
        }
    }
    let mut srs: Vec<SrEntry> = best
        .iter()
        .map(|(ops, (d, i))| SrEntry {
            ops: ops.clone(),
            d: *d,
            witness: candidates[*i].clone(),
            msr: !best
                .iter()
                .any(|(o, (d2, _))| o != ops && o.is_subset(ops) && d2 <= d),
        })
        .collect();
    srs.sort_by(|a, b| (a.ops.len(), &a.ops).cmp(&(b.ops.len(), &b.ops)));
    Ok(OracleResult { srs, candidates: candidates.len() })
}

/// All type-correct reparameterizations that keep the output type, the
/// original plan first. Operators are enumerated bottom-up so that every
/// grid is computed over the types produced by the choices below it.
pub fn enumerate_reparameterizations(
    plan: &QueryPlan,
    db: &DbSchema,
    adom: &ActiveDomain,
    budget: u128,
) -> Result<Vec<QueryPlan>> {
    let types = infer_schema(plan, db)?;
    let needed: u128 = plan
        .postorder()
        .into_iter()
        .map(|id| {
            let op = plan.get(id);
            let inputs: Vec<&TupleType> = op.inputs.iter().map(|i| &types[i]).collect();
            grid_size(op, &inputs, adom)
        })
        .fold(1u128, |a, b| a.saturating_mul(b));
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut search = Search {
        order: plan.postorder(),
        db,
        adom,
        root_type: types[&plan.root()].clone(),
        out: Vec::new(),
    };
    let mut current = plan.clone();
    let mut current_types = BTreeMap::new();
    search.dfs(0, &mut current, &mut current_types);
    Ok(search.out)
}

struct Search<'a> {
    order: Vec<OpId>,
    db: &'a DbSchema,
    adom: &'a ActiveDomain,
    root_type: TupleType,
    out: Vec<QueryPlan>,
}

impl Search<'_> {
    fn dfs(&mut self, k: usize, current: &mut QueryPlan, types: &mut BTreeMap<OpId, TupleType>) {
        if k == self.order.len() {
            if types[&current.root()] == self.root_type {
                self.out.push(current.clone());
            }
            return;
        }
        let id = self.order[k];
        let op = current.get(id).clone();
        let inputs: Vec<TupleType> = op.inputs.iter().map(|i| types[i].clone()).collect();
        let input_refs: Vec<&TupleType> = inputs.iter().collect();
        for params in param_grid(&op, &input_refs, self.adom) {
            let mut candidate = op.clone();
            candidate.params = params.clone();
            let Ok(ty) = output_type(&candidate, &input_refs, self.db) else {
                continue;
            };
            types.insert(id, ty);
            current.set_params(id, params).expect("same kind");
            self.dfs(k + 1, current, types);
        }
        current.set_params(id, op.params).expect("same kind");
        types.remove(&id);
    }
}
