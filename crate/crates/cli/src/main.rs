//! `memvasicek`: yield curves, bond and option prices, simulation, PDE
//! pricing and curve fitting for the memory-Vasicek short-rate model.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::{BondArgs, CalibrateArgs, CurveArgs, OptionArgs, PdeArgs, SimulateArgs};

#[derive(Parser, Debug)]
#[command(name = "memvasicek", version, about)]
struct Cli {
    /// JSON file of options; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the fully resolved options as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model yield curve, optionally fitted to market quotes.
    Curve(CurveArgs),
    /// Zero-coupon bond price and yield.
    Bond(BondArgs),
    /// Closed-form European bond option.
    Option(OptionArgs),
    /// Monte Carlo paths and the discount-bond estimate.
    Simulate(SimulateArgs),
    /// Finite-difference price over a sweep of initial rates.
    PdePrice(PdeArgs),
    /// Least-squares fit of the model to a yield curve.
    Calibrate(CalibrateArgs),
}

/// Options of one command: resolvable to explicit values and runnable.
pub trait Run: Serialize + DeserializeOwned {
    /// Fills every unset option with its default.
    fn resolved(self) -> Result<Self>;
    fn run(&self) -> Result<()>;
}

fn execute<A: Run>(cli: &Cli, flags: &A) -> Result<()> {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let args = config::merge(file, flags)?.resolved()?;
    if cli.dump_config {
        println!("{}", serde_json::to_string_pretty(&args)?);
        return Ok(());
    }
    args.run()
}

/// 2 for bad input, 3 when a well-posed computation failed.
fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|cause| cause.downcast_ref::<memvasicek_core::Error>())
        .map_or(2, |e| if e.is_input_error() { 2 } else { 3 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Curve(a) => execute(&cli, a),
        Command::Bond(a) => execute(&cli, a),
        Command::Option(a) => execute(&cli, a),
        Command::Simulate(a) => execute(&cli, a),
        Command::PdePrice(a) => execute(&cli, a),
        Command::Calibrate(a) => execute(&cli, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
