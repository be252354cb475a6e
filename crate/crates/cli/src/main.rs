//! `specflow` command line: runs one experiment stage from a TOML config and
//! writes its CSV artifacts. Exit status 0 when every gate passes, 1 on a gate
//! failure, 2 on usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use specflow_core::harness::{run, Command, Experiment};
use specflow_core::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stage {
    /// Track eigenvalues and count zero crossings.
    Flow,
    /// Eta invariants of the endpoint operators.
    Eta,
    /// Closed-form flow predictor.
    Predict,
    /// Mehler kernel against the PDE oracle.
    Mehler,
    /// Flow–eta identity under both sign conventions.
    Verify,
    /// Coupling sweep with scaling fits.
    Sweep,
}

impl From<Stage> for Command {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Flow => Command::Flow,
            Stage::Eta => Command::Eta,
            Stage::Predict => Command::Predict,
            Stage::Mehler => Command::Mehler,
            Stage::Verify => Command::Verify,
            Stage::Sweep => Command::Sweep,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "specflow", version, about = "Spectral flow and eta invariant experiments")]
struct Cli {
    #[arg(value_enum)]
    stage: Stage,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::NotAntisymmetric(_) | Error::NonPositiveTime(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exp = match Experiment::from_file(&cli.config) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("specflow: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let artifacts = match run(&exp, cli.stage.into()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("specflow: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let out = cli
        .out
        .or_else(|| exp.config().output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = artifacts.write_to(&out) {
        eprintln!("specflow: cannot write to {}: {e}", out.display());
        return ExitCode::from(2);
    }
    print!("{}", artifacts.summary);
    println!("artifacts written to {}", out.display());
    if artifacts.pass {
        println!("all gates pass");
        ExitCode::SUCCESS
    } else {
        println!("gate failure");
        ExitCode::from(1)
    }
}
