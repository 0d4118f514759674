use std::path::Path;

use super::annotated::{AnnotatedRelation, AnnotationLabel, Base};
use super::Trace;
use crate::engine::plan::QueryPlan;
use crate::error::{Error, Result};

/// One JSON object per tuple: id, per-alternative data and multiplicities,
/// then the annotation columns.
pub fn relation_to_jsonl(rel: &AnnotatedRelation, sa_count: usize) -> String {
    let mut out = String::new();
    for t in &rel.tuples {
        let mut row = serde_json::Map::new();
        row.insert("id".into(), t.id.into());
        for sa in 1..=sa_count {
            let key = format!("S{sa}");
            match t.view(sa) {
                Some(v) => {
                    row.insert(key.clone(), v.payload.to_json());
                    row.insert(format!("{key}_mult"), v.mult.into());
                    row.insert(
                        format!("{key}_strict_mult"),
                        v.strict.as_ref().map(|(_, m)| *m).unwrap_or(0).into(),
                    );
                    row.insert(format!("{key}_lineage"), serde_json::json!(v.members));
                    for (l, b) in &v.flags {
                        row.insert(l.to_string(), u8::from(*b).into());
                    }
                }
                None => {
                    row.insert(key, serde_json::Value::Null);
                    for base in [Base::Valid, Base::Consistent, Base::Retained] {
                        row.insert(AnnotationLabel::new(base, sa, rel.op).to_string(), 0.into());
                    }
                }
            }
        }
        out.push_str(&serde_json::Value::Object(row).to_string());
        out.push('\n');
    }
    out
}

/// Writes `NN_kind.jsonl` per operator into `dir`.
pub fn dump_trace(trace: &Trace, plan: &QueryPlan, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: dir.display().to_string(), msg: e.to_string() };
    std::fs::create_dir_all(dir).map_err(io)?;
    for (id, rel) in &trace.snapshots {
        let name = format!("{id:02}_{}.jsonl", plan.get(*id).kind().name());
        std::fs::write(dir.join(name), relation_to_jsonl(rel, trace.sa_count)).map_err(io)?;
    }
    Ok(())
}
