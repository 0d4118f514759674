// Loading a scenario from disk and running it like the command line does.

use std::path::Path;

use nested_whynot::cli::{run_scenario, Mode, RunOptions};
use nested_whynot::scenario::Scenario;

/// Runs every mode on the bundled scenario file and returns the exit codes.
pub fn run_example() -> Vec<(&'static str, i32)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/running_example/scenario.json");
    let sc = Scenario::load(&path).expect("bundled scenario");
    let mut codes = Vec::new();
    for mode in [Mode::Run, Mode::Explain, Mode::Oracle, Mode::Compare] {
        let (report, code) = run_scenario(&sc, mode, &RunOptions::default()).expect("mode runs");
        let text = report.to_string();
        println!("{:<8} exit {code}  {}", mode.name(), &text[..text.len().min(72)]);
        codes.push((mode.name(), code));
    }
    codes
}

#[allow(dead_code)]
fn main() {
    run_example();
}
