//! Loose bounds on the side effects of an explanation.

use std::collections::{BTreeSet, HashMap};

use crate::engine::plan::{OpId, OpKind, QueryPlan};
use crate::model::Bag;
use crate::tracing::{Base, Trace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundsBreakdown {
    pub lb_plus: u64,
    pub lb_minus: u64,
    pub ub_plus: u64,
    pub ub_minus: u64,
}

impl BoundsBreakdown {
    pub fn lb(&self) -> u64 {
        self.lb_plus + self.lb_minus
    }

    pub fn ub(&self) -> u64 {
        self.ub_plus + self.ub_minus
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lb_plus": self.lb_plus, "lb_minus": self.lb_minus,
            "ub_plus": self.ub_plus, "ub_minus": self.ub_minus,
        })
    }
}

/// Per result tuple id: operators in its lineage where some contributing
/// tuple is not retained under `sa`.
pub fn dropped_in_lineage(plan: &QueryPlan, trace: &Trace, sa: usize) -> HashMap<u64, BTreeSet<OpId>> {
    let mut per_op: HashMap<OpId, HashMap<u64, BTreeSet<OpId>>> = HashMap::new();
    for id in plan.postorder() {
        let op = plan.get(id);
        let children: Vec<&HashMap<u64, BTreeSet<OpId>>> = op.inputs.iter().map(|c| &per_op[c]).collect();
        let mut here: HashMap<u64, BTreeSet<OpId>> = HashMap::new();
        for t in &trace.snapshot(id).tuples {
            let Some(v) = t.view(sa) else { continue };
            let mut s = BTreeSet::new();
            if v.flag(Base::Retained, id) == Some(false) {
                s.insert(id);
            }
            for m in &v.members {
                for c in &children {
                    if let Some(x) = c.get(m) {
                        s.extend(x.iter().copied());
                    }
                }
            }
            here.insert(t.id, s);
        }
        per_op.insert(id, here);
    }
    per_op.remove(&plan.root()).unwrap_or_default()
}

pub fn side_effect_bounds(
    plan: &QueryPlan,
    ops: &BTreeSet<OpId>,
    sa: usize,
    trace: &Trace,
    original: &Bag,
) -> BoundsBreakdown {
    let q = original.total();
    let dropped = dropped_in_lineage(plan, trace, sa);
    let root: Vec<_> = trace
        .root()
        .tuples
        .iter()
        .filter_map(|t| t.view(sa).map(|v| (t.id, v)))
        .collect();

    let ub_plus: u64 = if sa == 1 {
        root.iter()
            .filter(|(id, _)| dropped.get(id).map(|d| d.iter().any(|o| ops.contains(o))).unwrap_or(false))
            .map(|(_, v)| v.mult)
            .sum()
    } else {
        root.iter()
            .filter(|(_, v)| original.multiplicity(&v.payload) == 0)
            .map(|(_, v)| v.mult)
            .sum()
    };

    let mut same: HashMap<&crate::model::Tuple, u64> = HashMap::new();
    for (_, v) in &root {
        if original.multiplicity(&v.payload) > 0 {
            *same.entry(&v.payload).or_default() += v.mult;
        }
    }
    let kept: u64 = same.iter().map(|(t, m)| (*m).min(original.multiplicity(t))).sum();
    let ub_minus = q - kept.min(q);

    let filtering = ops
        .iter()
        .any(|o| matches!(plan.get(*o).kind(), OpKind::Selection | OpKind::Join));
    let (lb_plus, lb_minus) = if filtering {
        (0, 0)
    } else {
        let vr: u64 = root
            .iter()
            .filter(|(id, _)| dropped.get(id).map(BTreeSet::is_empty).unwrap_or(true))
            .map(|(_, v)| v.mult)
            .sum();
        (vr.saturating_sub(q), q.saturating_sub(vr))
    };
    BoundsBreakdown {
        lb_plus,
        lb_minus,
        // keep lb ≤ ub component-wise when the two estimates disagree
        ub_plus: ub_plus.max(lb_plus),
        ub_minus: ub_minus.max(lb_minus),
    }
}
