use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nested_whynot::cli::{run_scenario, Mode, RunOptions};
use nested_whynot::scenario::Scenario;

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Run,
    Explain,
    Oracle,
    Compare,
}

#[derive(Parser)]
#[command(name = "whynot", about = "Why-not explanations for nested queries")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    scenario: PathBuf,
    /// Write one JSON-Lines file per traced operator into DIR.
    #[arg(long, value_name = "DIR")]
    dump_trace: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    max_sas: Option<usize>,
    #[arg(long, value_name = "N")]
    oracle_budget: Option<u128>,
    /// Compact single-line output (the default).
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    #[arg(long)]
    pretty: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(4);
        }
    };
    let mode = match args.command {
        Command::Run => Mode::Run,
        Command::Explain => Mode::Explain,
        Command::Oracle => Mode::Oracle,
        Command::Compare => Mode::Compare,
    };
    let mut opts = RunOptions { dump_trace: args.dump_trace, ..RunOptions::default() };
    if let Some(n) = args.max_sas {
        opts.max_sas = n;
    }
    if let Some(n) = args.oracle_budget {
        opts.oracle_budget = n;
    }
    let outcome = Scenario::load(&args.scenario).and_then(|sc| run_scenario(&sc, mode, &opts));
    match outcome {
        Ok((report, code)) => {
            let text = if args.pretty {
                serde_json::to_string_pretty(&report)
            } else {
                serde_json::to_string(&report)
            };
            println!("{}", text.expect("reports serialize"));
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
