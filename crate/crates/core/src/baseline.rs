//! Lineage-based picky-operator baseline: follows the input tuples that match
//! the backtraced pattern through the unchanged query and reports where the
//! last of their successors disappear.

use std::collections::{BTreeSet, HashSet};

use crate::alternatives::{enumerate_sas, AttributeAlternatives};
use crate::engine::plan::{OpId, QueryPlan};
use crate::engine::Database;
use crate::error::Result;
use crate::explain::check_precondition;
use crate::model::{Nip, Tuple};
use crate::tracing::{trace, Base};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compatible {
    pub relation: String,
    pub id: u64,
    pub tuple: Tuple,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PickyReport {
    pub compatibles: Vec<Compatible>,
    pub picky_ops: BTreeSet<OpId>,
}

impl PickyReport {
    pub fn to_json(&self, plan: &QueryPlan) -> serde_json::Value {
        let comp: Vec<serde_json::Value> = self
            .compatibles
            .iter()
            .map(|c| serde_json::json!({"relation": c.relation, "id": c.id, "tuple": c.tuple.to_json()}))
            .collect();
        let picky: Vec<serde_json::Value> = self
            .picky_ops
            .iter()
            .map(|id| serde_json::json!({"id": id, "kind": plan.get(*id).kind().name()}))
            .collect();
        serde_json::json!({"compatibles": comp, "picky": picky})
    }
}

pub fn picky_operators(plan: &QueryPlan, db: &Database, t: &Nip) -> Result<PickyReport> {
    let (question, _) = check_precondition(plan, db, t)?;
    let sas = enumerate_sas(plan, &db.schema(), &question, &AttributeAlternatives::new(), 1)?;
    let traced = trace(plan, db, &sas)?;

    let mut survivors: std::collections::HashMap<OpId, HashSet<u64>> = Default::default();
    let mut compatibles = Vec::new();
    let mut picky = BTreeSet::new();
    for id in plan.postorder() {
        let op = plan.get(id);
        let below: HashSet<u64> = op
            .inputs
            .iter()
            .flat_map(|c| survivors[c].iter().copied())
            .collect();
        let mut here = HashSet::new();
        for tup in &traced.snapshot(id).tuples {
            let Some(v) = tup.view(1) else { continue };
            let consistent = v.flag(Base::Consistent, id).unwrap_or(false);
            let derived = op.inputs.is_empty() || v.members.iter().any(|m| below.contains(m));
            if v.strict.is_some() && consistent && derived {
                here.insert(tup.id);
            }
        }
        if let Some((_, name)) = plan.tables().into_iter().find(|(o, _)| *o == id) {
            for tup in &traced.snapshot(id).tuples {
                if here.contains(&tup.id) {
                    let tuple = tup.view(1).expect("base tuples are valid").payload.clone();
                    compatibles.push(Compatible { relation: name.to_string(), id: tup.id, tuple });
                }
            }
        }
        if here.is_empty() && op.inputs.iter().any(|c| !survivors[c].is_empty()) {
            picky.insert(id);
        }
        survivors.insert(id, here);
    }
    Ok(PickyReport { compatibles, picky_ops: picky })
}
