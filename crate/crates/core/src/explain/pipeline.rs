use std::collections::BTreeSet;

use super::bounds::{side_effect_bounds, BoundsBreakdown};
use super::msr::approximate_msrs;
use crate::alternatives::{enumerate_sas, AttributeAlternatives, SchemaAlternative};
use crate::backtrace::check_question;
use crate::engine::plan::{OpId, QueryPlan};
use crate::engine::{evaluate, Database};
use crate::error::{Error, Result};
use crate::model::{Bag, Nip};
use crate::reparam::oracle::result_matches;
use crate::tracing::{trace, Trace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explanation {
    pub ops: BTreeSet<OpId>,
    /// Schema alternative the explanation was found under.
    pub sa: usize,
    pub bounds: BoundsBreakdown,
    /// 1-based position after ordering, 0 before.
    pub rank: usize,
}

impl Explanation {
    pub fn lb(&self) -> u64 {
        self.bounds.lb()
    }

    pub fn ub(&self) -> u64 {
        self.bounds.ub()
    }

    pub fn to_json(&self, plan: &QueryPlan) -> serde_json::Value {
        let ops: Vec<serde_json::Value> = self
            .ops
            .iter()
            .map(|id| serde_json::json!({"id": id, "kind": plan.get(*id).kind().name()}))
            .collect();
        serde_json::json!({
            "rank": self.rank,
            "ops": ops,
            "sa": self.sa,
            "lb": self.lb(),
            "ub": self.ub(),
            "bounds": self.bounds.to_json(),
        })
    }
}

/// Sorts by operator count, then upper bound, lower bound and operator ids,
/// and assigns ranks. Ties keep their input order.
pub fn order_explanations(mut expls: Vec<Explanation>) -> Vec<Explanation> {
    expls.sort_by(|a, b| {
        (a.ops.len(), a.ub(), a.lb(), a.ops.iter().collect::<Vec<_>>())
            .cmp(&(b.ops.len(), b.ub(), b.lb(), b.ops.iter().collect::<Vec<_>>()))
    });
    for (i, e) in expls.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    expls
}

/// Everything the pipeline computed on the way to its explanations.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub original: Bag,
    pub question: Nip,
    pub sas: Vec<SchemaAlternative>,
    pub trace: Trace,
    pub explanations: Vec<Explanation>,
}

impl PipelineResult {
    pub fn explanations_json(&self, plan: &QueryPlan) -> serde_json::Value {
        serde_json::Value::Array(self.explanations.iter().map(|e| e.to_json(plan)).collect())
    }
}

/// Fails with `PreconditionViolated` when the original result already
/// contains a tuple matching `t`. Returns the conformed question and the
/// original result.
pub fn check_precondition(plan: &QueryPlan, db: &Database, t: &Nip) -> Result<(Nip, Bag)> {
    let t = check_question(plan, &db.schema(), t)?;
    let original = evaluate(plan, db)?;
    if result_matches(&original, &t) {
        return Err(Error::PreconditionViolated(format!(
            "the query result already contains a tuple matching {t}"
        )));
    }
    Ok((t, original))
}

/// Backtrace, schema alternatives, tracing, explanation search, bounds and
/// ordering.
pub fn whynot_pipeline(
    plan: &QueryPlan,
    db: &Database,
    t: &Nip,
    alts: &AttributeAlternatives,
    max_sas: usize,
) -> Result<PipelineResult> {
    let (question, original) = check_precondition(plan, db, t)?;
    let sas = enumerate_sas(plan, &db.schema(), &question, alts, max_sas)?;
    for sa in &sas {
        for w in &sa.backtrace.warnings {
            log::warn!("S{}: {w}", sa.index);
        }
    }
    let traced = trace(plan, db, &sas)?;
    let found = approximate_msrs(plan, &traced, &sas);
    let expls = found
        .into_iter()
        .map(|(ops, sa)| {
            let bounds = side_effect_bounds(plan, &ops, sa, &traced, &original);
            Explanation { ops, sa, bounds, rank: 0 }
        })
        .collect();
    Ok(PipelineResult {
        original,
        question,
        sas,
        trace: traced,
        explanations: order_explanations(expls),
    })
}
