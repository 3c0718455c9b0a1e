//! Config-driven experiment runner: `run <config>`, `validate <config>` and
//! `list-experiments`.
//!
//! A config is a TOML file:
//!
//! ```toml
//! schema_version = 1
//! experiment = "vnee_scaling"
//!
//! [scatterer]
//! eps0_over_t = 1.0          # or: table = "t2.csv" with a `k,t2` header
//!
//! [window]
//! k_fr = { pi = 0.5 }        # momenta in radians or in units of π
//! dk = [0.1, 0.4]            # or: k_fl = [...]
//!
//! [sweep]
//! l = { start = 100, stop = 2000, step = 100 }
//!
//! [output]
//! path = "vnee.csv"         # relative to the config file
//! format = "csv"             # or "json"
//! ```
//!
//! `sweep` may also hold `n` (Rényi orders), `alpha` (a list or
//! `{ min, max, count }`), `d` (distances, for `friedel`), `quantity`
//! (`gen_fun` or `vnee`, for `coefficient_sweep`), `q_width`, `blocks` and
//! `block_len`. `two_scatterer` takes a second `[right_scatterer]` table.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{from_toml_str, load, validate, Experiment, Plan, RawConfig, ValidationError};
pub use experiments::run_experiment;
pub use output::{write_report, Report, Table, Value};

#[derive(Debug, Parser)]
#[command(name = "ness-ent", version, about = "Entanglement of biased tight-binding chains: exact numerics and asymptotics")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its tables.
    Run { config: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config } => {
            let plan = load(&config)?;
            let report = run_experiment(&plan)?;
            for path in write_report(&plan, &report)? {
                println!("wrote {}", path.display());
            }
            for (key, value) in &report.summary {
                if let Some(x) = value.as_f64() {
                    println!("{key} = {x}");
                }
            }
        }
        Command::Validate { config } => {
            let plan = load(&config)?;
            println!("{}: valid {} config (sha256 {})", config.display(), plan.experiment.name(), plan.config_hash);
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.summary());
            }
        }
    }
    Ok(())
}

/// Parses the process arguments and runs the command.
pub fn main() -> ExitCode {
    let args = Args::parse();
    match dispatch(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            for cause in err.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}
