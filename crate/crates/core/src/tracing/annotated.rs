use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::plan::OpId;
use crate::error::{Error, Result};
use crate::model::{Bag, Tuple, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Valid,
    Consistent,
    Retained,
}

impl Base {
    pub fn name(self) -> &'static str {
        match self {
            Base::Valid => "valid",
            Base::Consistent => "consistent",
            Base::Retained => "retained",
        }
    }

    pub fn parse(s: &str) -> Option<Base> {
        [Base::Valid, Base::Consistent, Base::Retained]
            .into_iter()
            .find(|b| b.name() == s)
    }
}

/// Annotation column name such as `retainedS1_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationLabel {
    pub base: Base,
    /// Schema alternative, 1-based.
    pub sa: usize,
    pub op: OpId,
}

impl AnnotationLabel {
    pub fn new(base: Base, sa: usize, op: OpId) -> AnnotationLabel {
        AnnotationLabel { base, sa, op }
    }

    pub fn parse(s: &str) -> Option<AnnotationLabel> {
        let pos = s.find('S')?;
        let base = Base::parse(&s[..pos])?;
        let (sa, op) = s[pos + 1..].split_once('_')?;
        let label = AnnotationLabel { base, sa: sa.parse().ok()?, op: op.parse().ok()? };
        // reject non-canonical spellings such as leading zeros
        (label.to_string() == s).then_some(label)
    }
}

impl fmt::Display for AnnotationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}S{}_{}", self.base.name(), self.sa, self.op)
    }
}

/// Appends one 0/1 column per `(base, bit)` pair, labelled for `sa` and `op`.
pub fn annotate(t: &Tuple, av: &[(Base, bool)], sa: usize, op: OpId) -> Result<Tuple> {
    let mut out = t.clone();
    for (base, bit) in av {
        let label = AnnotationLabel::new(*base, sa, op).to_string();
        if out.get(&label).is_some() {
            return Err(Error::DuplicateLabel(label));
        }
        out.push(label, Value::Int(i64::from(*bit)));
    }
    Ok(out)
}

/// A tuple as seen under one schema alternative.
///
/// `payload`/`mult` is the relaxed tuple the tracing keeps around; `strict`
/// is the same tuple under the alternative's unrelaxed operators, absent when
/// some operator so far would have dropped it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaView {
    pub payload: Tuple,
    pub mult: u64,
    pub strict: Option<(Tuple, u64)>,
    pub flags: Vec<(AnnotationLabel, bool)>,
    /// Ids of the input tuples this tuple was derived from.
    pub members: Vec<u64>,
}

impl SaView {
    pub fn flag(&self, base: Base, op: OpId) -> Option<bool> {
        self.flags
            .iter()
            .find(|(l, _)| l.base == base && l.op == op)
            .map(|(_, b)| *b)
    }

    /// Every annotation of `op` is 1 (missing annotations count as 1).
    pub fn all_set(&self, op: OpId) -> bool {
        self.flags.iter().filter(|(l, _)| l.op == op).all(|(_, b)| *b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedTuple {
    pub id: u64,
    /// One entry per schema alternative; `None` means not valid under it.
    pub views: Vec<Option<SaView>>,
}

impl AnnotatedTuple {
    pub fn view(&self, sa: usize) -> Option<&SaView> {
        self.views.get(sa - 1).and_then(Option::as_ref)
    }

    pub fn valid(&self, sa: usize) -> bool {
        self.view(sa).is_some()
    }

    /// Annotation value as stored in the relation: invalid views read as 0.
    pub fn flag(&self, label: AnnotationLabel) -> bool {
        if label.base == Base::Valid {
            return self.valid(label.sa);
        }
        self.view(label.sa)
            .and_then(|v| v.flag(label.base, label.op))
            .unwrap_or(false)
    }
}

/// Output of one traced operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedRelation {
    pub op: OpId,
    pub tuples: Vec<AnnotatedTuple>,
}

impl AnnotatedRelation {
    pub fn get(&self, id: u64) -> Option<&AnnotatedTuple> {
        self.tuples.iter().find(|t| t.id == id)
    }

    /// Tuples valid under `sa` that every operator so far keeps.
    pub fn strict_bag(&self, sa: usize) -> Bag {
        let mut out = Bag::new();
        for t in &self.tuples {
            if let Some((s, m)) = t.view(sa).and_then(|v| v.strict.as_ref()) {
                out.insert(s.clone(), *m);
            }
        }
        out
    }

    /// Every tuple valid under `sa`, relaxed.
    pub fn relaxed_bag(&self, sa: usize) -> Bag {
        let mut out = Bag::new();
        for t in &self.tuples {
            if let Some(v) = t.view(sa) {
                out.insert(v.payload.clone(), v.mult);
            }
        }
        out
    }

    pub fn count(&self, label: AnnotationLabel, value: bool) -> usize {
        self.tuples.iter().filter(|t| t.flag(label) == value).count()
    }
}

/// Per operator: output id to the ids of the input tuples it came from,
/// under any schema alternative.
pub type LineageMap = BTreeMap<OpId, BTreeMap<u64, BTreeSet<u64>>>;
