use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use radsim_cli::scenario::{ExperimentKind, ModeName};
use radsim_cli::{load_scenario, run, Overrides};

/// Run a radar simulation scenario and write its CSV outputs.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Override experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override experiment.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override experiment.kind.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(ExperimentKind::NAMES))]
    experiment: Option<String>,
    /// Run a single mode instead of experiment.modes.
    #[arg(long, value_parser = ["nb", "uwb"])]
    mode: Option<String>,
    /// Suppress the per-run summary.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        output_dir: args.out,
        experiment: args.experiment.as_deref().and_then(ExperimentKind::parse),
        mode: args.mode.as_deref().and_then(ModeName::parse),
    };
    let result = load_scenario(&args.scenario, &overrides).and_then(|s| run(&s));
    match result {
        Ok(report) => {
            if !args.quiet {
                for n in &report.notes {
                    println!("{n}");
                }
                for f in &report.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
