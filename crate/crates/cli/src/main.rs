//! `isostring`: spectra, deformation fields, flows and their exact solutions
//! for discrete strings described in a JSON scenario file.

mod commands;
mod config;
mod error;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isostring::scalar::parse_rational;
use isostring::Rational;

use commands::Context;
use config::{Backend, ScenarioConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "isostring",
    version,
    about = "Isospectral flows of discrete strings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, characteristic polynomial and invariants.
    Spectrum(Args),
    /// Continued-fraction coefficients and residues of the Weyl function.
    Weyl(Args),
    /// Deformation fields on a grid and the constant beta.
    Fields(Args),
    /// Integrate the flow (float backend) and write the trajectory as CSV.
    Evolve(Args),
    /// Exact states at the requested times by inverse spectral transform.
    Invert(Args),
    /// The state and fields after the change of variables to the line.
    Liouville(Args),
    /// Run the property suite on the scenario; exit code 1 if any fails.
    Verify(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time values (integers, decimals or fractions such as 1/3).
    #[arg(long = "t", num_args = 1.., value_parser = parse_time)]
    t: Vec<Rational>,
    /// Overrides the backend of the scenario file.
    #[arg(long, value_enum)]
    backend: Option<Backend>,
}

fn parse_time(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("not a number: {s}"))
}

macro_rules! on_backend {
    ($backend:expr, $f:ident, $ctx:expr) => {
        match $backend {
            Backend::Rational => commands::$f::<Rational>($ctx),
            Backend::Float => commands::$f::<f64>($ctx),
        }
    };
}

fn run(command: Command) -> Result<(), CliError> {
    let args = match &command {
        Command::Spectrum(a)
        | Command::Weyl(a)
        | Command::Fields(a)
        | Command::Evolve(a)
        | Command::Invert(a)
        | Command::Liouville(a)
        | Command::Verify(a) => a,
    };
    let config = ScenarioConfig::load(&args.config)?;
    let backend = args.backend.unwrap_or(config.run.backend);
    let ctx = Context {
        config,
        out: args.out.clone(),
        times: args.t.clone(),
    };
    match command {
        Command::Spectrum(_) => on_backend!(backend, spectrum, &ctx),
        Command::Weyl(_) => on_backend!(backend, weyl, &ctx),
        Command::Fields(_) => on_backend!(backend, fields, &ctx),
        Command::Evolve(_) => commands::evolve(&ctx),
        Command::Invert(_) => on_backend!(backend, invert, &ctx),
        Command::Liouville(_) => commands::liouville(&ctx),
        Command::Verify(_) => match backend {
            Backend::Rational => verify::verify::<Rational>(&ctx),
            Backend::Float => verify::verify::<f64>(&ctx),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
