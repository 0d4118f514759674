//! Subcommand dispatch shared by the `whynot` binary and the examples.

use std::path::PathBuf;

use crate::alternatives::DEFAULT_MAX_SAS;
use crate::baseline::picky_operators;
use crate::engine::evaluate;
use crate::error::Result;
use crate::explain::whynot_pipeline;
use crate::reparam::exact_explanations_oracle;
use crate::reparam::oracle::DEFAULT_BUDGET;
use crate::scenario::Scenario;
use crate::tracing::dump_trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    Explain,
    Oracle,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Explain => "explain",
            Mode::Oracle => "oracle",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub dump_trace: Option<PathBuf>,
    pub max_sas: usize,
    pub oracle_budget: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { dump_trace: None, max_sas: DEFAULT_MAX_SAS, oracle_budget: DEFAULT_BUDGET }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_EXPLANATIONS: i32 = 3;

/// Report and exit code for one mode. Errors carry their own exit code.
pub fn run_scenario(sc: &Scenario, mode: Mode, opts: &RunOptions) -> Result<(serde_json::Value, i32)> {
    match mode {
        Mode::Run => Ok((evaluate(&sc.plan, &sc.db)?.to_json(), EXIT_OK)),
        Mode::Explain => {
            let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, opts.max_sas)?;
            if let Some(dir) = &opts.dump_trace {
                dump_trace(&res.trace, &sc.plan, dir)?;
            }
            let code = if res.explanations.is_empty() { EXIT_NO_EXPLANATIONS } else { EXIT_OK };
            let sas: Vec<_> = res.sas.iter().map(|s| s.to_json()).collect();
            let report = serde_json::json!({
                "schema_alternatives": sas,
                "explanations": res.explanations_json(&sc.plan),
            });
            Ok((report, code))
        }
        Mode::Oracle => {
            let res = exact_explanations_oracle(&sc.plan, &sc.db, &sc.whynot, opts.oracle_budget)?;
            let report = serde_json::json!({"candidates": res.candidates, "msrs": res.to_json()});
            Ok((report, EXIT_OK))
        }
        Mode::Compare => {
            let base = picky_operators(&sc.plan, &sc.db, &sc.whynot)?;
            let res = whynot_pipeline(&sc.plan, &sc.db, &sc.whynot, &sc.alternatives, opts.max_sas)?;
            if let Some(dir) = &opts.dump_trace {
                dump_trace(&res.trace, &sc.plan, dir)?;
            }
            let report = serde_json::json!({
                "baseline": base.to_json(&sc.plan),
                "heuristic": res.explanations_json(&sc.plan),
            });
            Ok((report, EXIT_OK))
        }
    }
}
