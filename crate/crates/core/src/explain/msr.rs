//! Approximating minimal successful reparameterizations from a trace.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::alternatives::SchemaAlternative;
use crate::engine::plan::{OpId, Params, QueryPlan};
use crate::tracing::{Base, Trace};

/// Ids per operator that lie in the lineage of a consistent result tuple
/// under alternative `sa`.
pub fn consistent_lineage(plan: &QueryPlan, trace: &Trace, sa: usize) -> HashMap<OpId, HashSet<u64>> {
    let mut reach: HashMap<OpId, HashSet<u64>> = HashMap::new();
    let root = plan.root();
    let start: HashSet<u64> = trace
        .root()
        .tuples
        .iter()
        .filter(|t| {
            t.view(sa)
                .map(|v| v.flag(Base::Consistent, root).unwrap_or(false))
                .unwrap_or(false)
        })
        .map(|t| t.id)
        .collect();
    reach.insert(root, start);
    let mut order = plan.postorder();
    order.reverse();
    for id in order {
        let op = plan.get(id);
        if op.inputs.is_empty() {
            continue;
        }
        let rel = trace.snapshot(id);
        let index: HashMap<u64, usize> = rel.tuples.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let mut members: HashSet<u64> = HashSet::new();
        for tid in reach.get(&id).into_iter().flatten() {
            if let Some(v) = index.get(tid).and_then(|i| rel.tuples[*i].view(sa)) {
                members.extend(v.members.iter().copied());
            }
        }
        for c in &op.inputs {
            let ids: HashSet<u64> = trace
                .snapshot(*c)
                .tuples
                .iter()
                .filter(|t| members.contains(&t.id))
                .map(|t| t.id)
                .collect();
            reach.entry(*c).or_default().extend(ids);
        }
    }
    reach
}

struct Explorer<'a> {
    plan: &'a QueryPlan,
    trace: &'a Trace,
    sa: usize,
    reach: HashMap<OpId, HashSet<u64>>,
}

impl Explorer<'_> {
    /// (extend with `op`, continue without it)
    fn branches(&self, op: OpId) -> (bool, bool) {
        let empty = HashSet::new();
        let reach = self.reach.get(&op).unwrap_or(&empty);
        let mut ext = false;
        let mut keep = false;
        for t in &self.trace.snapshot(op).tuples {
            if !reach.contains(&t.id) {
                continue;
            }
            let Some(v) = t.view(self.sa) else { continue };
            if !v.flag(Base::Consistent, op).unwrap_or(false) {
                continue;
            }
            match v.flag(Base::Retained, op) {
                Some(false) => ext = true,
                _ => keep = keep || v.all_set(op),
            }
            if ext && keep {
                break;
            }
        }
        (ext, keep)
    }

    /// Operator sets below and including `op` that may need a change.
    fn explore(&self, op: OpId) -> Vec<BTreeSet<OpId>> {
        let (ext, keep) = self.branches(op);
        let mut own: Vec<BTreeSet<OpId>> = Vec::new();
        if ext {
            own.push(BTreeSet::from([op]));
        }
        if keep {
            own.push(BTreeSet::new());
        }
        if own.is_empty() {
            return Vec::new();
        }
        let node = self.plan.get(op);
        let children: Vec<Vec<BTreeSet<OpId>>> = match &node.params {
            // the right input of a difference only removes tuples
            Params::Difference => vec![self.explore(node.inputs[0])],
            // a union tuple comes from exactly one side
            Params::Union => {
                let mut either = self.explore(node.inputs[0]);
                for s in self.explore(node.inputs[1]) {
                    if !either.contains(&s) {
                        either.push(s);
                    }
                }
                vec![either]
            }
            _ => node.inputs.iter().map(|c| self.explore(*c)).collect(),
        };
        let mut acc = own;
        for options in children {
            let mut next = Vec::new();
            for a in &acc {
                for o in &options {
                    let u: BTreeSet<OpId> = a.union(o).copied().collect();
                    if !next.contains(&u) {
                        next.push(u);
                    }
                }
            }
            acc = next;
        }
        acc
    }
}

/// Candidate explanations with the alternative that produced them, each
/// operator set reported once (for its lowest alternative).
pub fn approximate_msrs(
    plan: &QueryPlan,
    trace: &Trace,
    sas: &[SchemaAlternative],
) -> Vec<(BTreeSet<OpId>, usize)> {
    let mut out: Vec<(BTreeSet<OpId>, usize)> = Vec::new();
    for sa in sas {
        let ex = Explorer {
            plan,
            trace,
            sa: sa.index,
            reach: consistent_lineage(plan, trace, sa.index),
        };
        let prefix = sa.prefix();
        for r in ex.explore(plan.root()) {
            let sr: BTreeSet<OpId> = prefix.union(&r).copied().collect();
            if sr.is_empty() || out.iter().any(|(o, _)| *o == sr) {
                continue;
            }
            out.push((sr, sa.index));
        }
    }
    out
}
