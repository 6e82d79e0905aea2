//! `nmr-pps`: prepare, read out, reconstruct and verify labeled pseudo-pure
//! states from a molecule file.
//!
//! Exit codes: 0 success, 1 a check or reconstruction failed, 2 bad usage or
//! input.

// `!(x > 0.0)` is the NaN-rejecting form used for every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmr_pps::{Method, Realization};

#[derive(Parser, Debug)]
#[command(name = "nmr-pps", version, about = "Two-turn labeled pseudo-pure state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run both turns and write the four deviation matrices.
    Prepare(PrepareArgs),
    /// Read out one spin after a [pi/2]_y pulse: FID, spectrum and peak table.
    Spectrum(SpectrumArgs),
    /// Simulate tomography readouts and reconstruct each state.
    Tomography(TomographyArgs),
    /// Run the built-in identity, circuit and pulse checks.
    Verify(VerifyArgs),
    /// Print the method comparison table.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct MoleculeArg {
    /// Molecule description file.
    #[arg(long)]
    molecule: PathBuf,
}

#[derive(Args, Debug)]
struct PrepareArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "matrix", value_parser = parse_realization)]
    realization: Realization,
    #[arg(long, default_value = "nmr-pps-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StateChoice {
    Thermal,
    In,
    U,
    Sum,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// Required unless `--state thermal`.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long, default_value = "matrix", value_parser = parse_realization)]
    realization: Realization,
    /// Which state to read out.
    #[arg(long, value_enum, default_value = "sum")]
    state: StateChoice,
    /// Spin receiving the readout pulse; its species is observed.
    #[arg(long, default_value_t = 1)]
    spin: usize,
    /// Acquisition time in seconds (default: six times the longest T2).
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// Sampling interval in seconds (default: twice the Nyquist rate).
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 1)]
    zero_fill: usize,
    /// Exponential line broadening in Hz.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    apodize: f64,
    #[arg(long, default_value = "nmr-pps-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PulseSetChoice {
    /// The published set (16 pulses for four spins).
    Published,
    /// The published set plus direct acquisition.
    Complete,
}

#[derive(Args, Debug)]
struct TomographyArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "matrix", value_parser = parse_realization)]
    realization: Realization,
    #[arg(long, value_enum, default_value = "complete")]
    pulse_set: PulseSetChoice,
    /// Gaussian noise, relative to the largest line amplitude.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "nmr-pps-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Also write the report to `<out>/report.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Swap two images of one permutation: `method:n:a:b`.
    #[arg(long, hide = true, value_parser = parse_fault)]
    inject_fault: Option<nmr_pps::verify::Fault>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Adds per-method results on this molecule.
    #[arg(long)]
    molecule: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_realization(s: &str) -> Result<Realization, String> {
    s.parse()
}

fn parse_fault(s: &str) -> Result<nmr_pps::verify::Fault, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [m, n, a, b] = parts.as_slice() else {
        return Err("expected method:n:a:b".into());
    };
    let num = |x: &str| x.parse::<usize>().map_err(|e| e.to_string());
    Ok(nmr_pps::verify::Fault {
        method: m.parse()?,
        n: num(n)?,
        a: num(a)?,
        b: num(b)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Tomography(a) => commands::tomography(a),
        Command::Verify(a) => commands::verify(a),
        Command::Compare(a) => commands::compare(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
