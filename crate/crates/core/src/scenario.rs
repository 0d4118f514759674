//! Scenario files: data, plan, why-not question and attribute alternatives.

use std::path::{Path, PathBuf};

use crate::alternatives::AttributeAlternatives;
use crate::engine::{Database, QueryPlan};
use crate::error::{Error, Result};
use crate::model::{Bag, Nip, Tuple, TupleType};

/// Parses JSON-Lines text into a bag of `ty` tuples. `label` names the
/// source in error messages.
pub fn parse_relation(text: &str, label: &str, ty: &TupleType) -> Result<Bag> {
    let mut bag = Bag::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::ParseLine {
            path: label.to_string(),
            line: line_no,
            msg: e.to_string(),
        })?;
        if !v.is_object() {
            return Err(Error::ParseLine {
                path: label.to_string(),
                line: line_no,
                msg: "expected a JSON object".into(),
            });
        }
        let t = Tuple::from_json_typed(&v, ty).map_err(|e| Error::SchemaViolation {
            path: label.to_string(),
            line: line_no,
            msg: e.to_string(),
        })?;
        bag.insert(t, 1);
    }
    Ok(bag)
}

pub fn load_relation(path: &Path, ty: &TupleType) -> Result<Bag> {
    let text = read(path)?;
    parse_relation(&text, &path.display().to_string(), ty)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub db: Database,
    pub plan: QueryPlan,
    pub whynot: Nip,
    pub alternatives: AttributeAlternatives,
}

impl Scenario {
    /// Loads a scenario file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Scenario> {
        let v = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::from_json(&v, |p| {
            let full: PathBuf = base.join(p);
            read(&full).map(|t| (t, full.display().to_string()))
        })
    }

    /// Builds a scenario from its JSON document. `open` returns the text and
    /// a display label for a referenced file.
    pub fn from_json<F>(v: &serde_json::Value, open: F) -> Result<Scenario>
    where
        F: Fn(&str) -> Result<(String, String)>,
    {
        let json_of = |x: &serde_json::Value, what: &str| -> Result<serde_json::Value> {
            match x {
                serde_json::Value::String(p) => {
                    let (text, label) = open(p)?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{label}: {e}")))
                }
                serde_json::Value::Null => Err(Error::Config(format!("missing `{what}`"))),
                other => Ok(other.clone()),
            }
        };
        let data = v
            .get("data")
            .and_then(|d| d.as_object())
            .ok_or_else(|| Error::Config("`data` must map relation names to {path, schema}".into()))?;
        let mut db = Database::new();
        for (name, entry) in data {
            let schema = json_of(entry.get("schema").unwrap_or(&serde_json::Value::Null), "schema")?;
            let ty = TupleType::from_json(&schema)?;
            let file = entry
                .get("path")
                .and_then(|p| p.as_str())
                .ok_or_else(|| Error::Config(format!("relation `{name}` needs a `path`")))?;
            let (text, label) = open(file)?;
            let bag = parse_relation(&text, &label, &ty)?;
            db.insert(name.clone(), ty, bag)?;
        }
        let plan = QueryPlan::from_json(&json_of(v.get("plan").unwrap_or(&serde_json::Value::Null), "plan")?)?;
        let whynot = match v.get("whynot") {
            Some(w) => Nip::from_json(w)?,
            None => return Err(Error::Config("missing `whynot`".into())),
        };
        let whynot = crate::backtrace::check_question(&plan, &db.schema(), &whynot)?;
        let alternatives = match v.get("alternatives") {
            Some(a) => AttributeAlternatives::from_json(a)?,
            None => AttributeAlternatives::new(),
        };
        Ok(Scenario { db, plan, whynot, alternatives })
    }
}

/// The running example (two persons with two address collections) bundled
/// with the crate.
pub mod fixtures {
    use super::*;

    pub const SCENARIO: &str = include_str!("../fixtures/running_example/scenario.json");
    pub const PERSONS: &str = include_str!("../fixtures/running_example/persons.jsonl");
    pub const PERSON_SCHEMA: &str = include_str!("../fixtures/running_example/person.schema.json");
    pub const PLAN: &str = include_str!("../fixtures/running_example/plan.json");

    pub fn running_example() -> Scenario {
        let v: serde_json::Value = serde_json::from_str(SCENARIO).expect("bundled scenario is JSON");
        Scenario::from_json(&v, |p| {
            let text = match p {
                "persons.jsonl" => PERSONS,
                "person.schema.json" => PERSON_SCHEMA,
                "plan.json" => PLAN,
                other => {
                    return Err(Error::Io { path: other.to_string(), msg: "not bundled".into() })
                }
            };
            Ok((text.to_string(), p.to_string()))
        })
        .expect("bundled scenario loads")
    }
}
