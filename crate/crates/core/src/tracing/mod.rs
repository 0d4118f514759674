//! Annotated evaluation of a plan under every schema alternative at once.

pub mod annotated;
pub mod dump;
pub mod ops;

use std::collections::BTreeMap;

pub use annotated::{
    annotate, AnnotatedRelation, AnnotatedTuple, AnnotationLabel, Base, LineageMap, SaView,
};
pub use dump::{dump_trace, relation_to_jsonl};

use crate::alternatives::SchemaAlternative;
use crate::engine::plan::{OpId, QueryPlan};
use crate::engine::schema::{infer_schema, Database};
use crate::error::{Error, Result};
use ops::{SaOp, Tracer};

/// Annotated output of every operator.
#[derive(Clone, Debug)]
pub struct Trace {
    pub snapshots: BTreeMap<OpId, AnnotatedRelation>,
    pub root: OpId,
    pub sa_count: usize,
}

impl Trace {
    pub fn root(&self) -> &AnnotatedRelation {
        &self.snapshots[&self.root]
    }

    pub fn snapshot(&self, op: OpId) -> &AnnotatedRelation {
        &self.snapshots[&op]
    }

    pub fn lineage(&self) -> LineageMap {
        let mut out = LineageMap::new();
        for (op, rel) in &self.snapshots {
            let m = out.entry(*op).or_default();
            for t in &rel.tuples {
                let e = m.entry(t.id).or_default();
                for v in t.views.iter().flatten() {
                    e.extend(v.members.iter().copied());
                }
            }
        }
        out
    }
}

/// Traces `plan` under every alternative in `sas` (whose plans share the
/// structure of `plan`).
pub fn trace(plan: &QueryPlan, db: &Database, sas: &[SchemaAlternative]) -> Result<Trace> {
    if sas.is_empty() {
        return Err(Error::InvalidPlan("tracing needs at least one schema alternative".into()));
    }
    let schema = db.schema();
    let types: Vec<_> = sas
        .iter()
        .map(|s| infer_schema(&s.plan, &schema))
        .collect::<Result<_>>()?;
    let mut tracer = Tracer::new(db);
    let mut snapshots: BTreeMap<OpId, AnnotatedRelation> = BTreeMap::new();
    for id in plan.postorder() {
        let sa_ops: Vec<SaOp<'_>> = sas
            .iter()
            .zip(&types)
            .map(|(s, ty)| {
                let op = s.plan.get(id);
                SaOp {
                    sa: s.index,
                    op,
                    in_types: op.inputs.iter().map(|i| &ty[i]).collect(),
                    nip: &s.backtrace.op_nips[&id],
                }
            })
            .collect();
        let inputs: Vec<&AnnotatedRelation> = plan.get(id).inputs.iter().map(|i| &snapshots[i]).collect();
        let rel = tracer.trace_op(&sa_ops, &inputs)?;
        log::debug!("traced operator {id}: {} tuples", rel.tuples.len());
        snapshots.insert(id, rel);
    }
    Ok(Trace { snapshots, root: plan.root(), sa_count: sas.len() })
}
