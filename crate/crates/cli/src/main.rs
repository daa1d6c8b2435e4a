use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

/// Exit status for a run that completed with at least one failed check.
const EXIT_FAIL: u8 = 1;
/// Exit status for usage and configuration errors.
const EXIT_USAGE: u8 = 2;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "ENTANGLE_SEED";

#[derive(Parser, Debug)]
#[command(name = "entangle", version, about = "Resource-bounded entanglement measures at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run property-check suites over a range of λ.
    Verify(VerifyArgs),
    /// Build an η-separated packing of unitaries.
    Net(NetArgs),
    /// Evaluate the non-invariance counterexample chain.
    Counterexample(CounterexampleArgs),
    /// Run one of the stock protocols.
    Demo(DemoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed (overridden by ENTANGLE_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Suites to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<String>,
    /// λ values: `a..b` (inclusive), `a`, or a comma list.
    #[arg(long, default_value = "1..3")]
    pub lambda: String,
    /// Tolerance applied to every non-strict check.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct NetArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub eta: f64,
    /// Consecutive rejections before the greedy search stops.
    #[arg(long, default_value_t = entangle_core::packing::DEFAULT_MAX_REJECTIONS)]
    pub max_rejections: usize,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Teleport,
    Unrotate,
    Bbpssw,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(value_enum)]
    pub protocol: Protocol,
    /// Number of pairs (teleport, unrotate).
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Input fidelity of the isotropic pair (bbpssw).
    #[arg(long, default_value_t = 0.8)]
    pub fidelity: f64,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

/// Whether every conclusive check passed.
pub enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Net(a) => commands::net(a),
        Command::Counterexample(a) => commands::counterexample(a),
        Command::Demo(a) => commands::demo(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
