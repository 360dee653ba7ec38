use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use squint::harness::audit::audit_csv;
use squint::harness::{run_experiment, ExperimentConfig};
use squint::polytopes::{enumerate_vertices, ClassSpec, ConceptClass, DEFAULT_VERTEX_CAP};

/// Squint / Component iProd experiments with regret-bound auditing.
///
/// Exit status: 0 when everything checks out, 1 when a bound violation or an
/// invariant failure was found, 2 on bad input.
#[derive(Parser)]
#[command(name = "squint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Write the per-round CSV here (overrides the config).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON summary here (overrides the config).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Re-check the bound, potential and recurrence columns of a CSV.
    Audit { csv: PathBuf },
    /// Print the concepts of a class spec, one JSON array per line.
    Enumerate {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Print the Component iProd learning-rate grid for horizon T.
    Grid { t: u64 },
}

enum Failure {
    Checks,
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, csv, summary } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if csv.is_some() {
                cfg.output.csv = csv;
            }
            if summary.is_some() {
                cfg.output.summary = summary;
            }
            let out = run_experiment(&cfg)?;
            out.write(&cfg)?;
            if cfg.output.summary.is_none() {
                print!("{}", out.summary_json()?);
            }
            let s = &out.summary;
            eprintln!(
                "{} rounds, {} audits, bound violation: {}, invariant failures: {}",
                s.rounds,
                s.audits.len(),
                s.bound_violation,
                s.invariant_failures.len()
            );
            for f in s.invariant_failures.iter().take(10) {
                eprintln!("  {f}");
            }
            if s.failed() {
                return Err(Failure::Checks);
            }
        }
        Command::Audit { csv } => {
            let text = std::fs::read_to_string(&csv)?;
            let report = audit_csv(&text)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.failed() {
                return Err(Failure::Checks);
            }
        }
        Command::Enumerate { spec, cap } => {
            let spec: ClassSpec = serde_json::from_str(&std::fs::read_to_string(&spec)?)?;
            let class = ConceptClass::from_spec(&spec)?;
            let constraints = class.hull_constraints();
            let mut bad = 0;
            for v in enumerate_vertices(&class, cap)? {
                let x: Vec<f64> = v.iter().map(|&b| f64::from(b)).collect();
                if constraints.iter().any(|c| c.violation(&x) > 0.0) {
                    bad += 1;
                }
                println!("{}", serde_json::to_string(&v)?);
            }
            if bad > 0 {
                eprintln!("{bad} concepts violate the hull constraints");
                return Err(Failure::Checks);
            }
        }
        Command::Grid { t } => {
            let grid = squint::combinatorial::default_grid(t)?;
            println!("i,eta,gamma");
            for (i, (eta, gamma)) in grid.etas().iter().zip(grid.masses()).enumerate() {
                println!("{},{eta},{gamma}", i + 1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
