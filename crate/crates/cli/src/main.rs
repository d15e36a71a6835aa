//! `haarkit`: runs one family of checks and emits JSON-lines reports.
//!
//! Exit status is 0 when every check passes, 1 when any fails and 2 for an
//! invalid invocation or config.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "haarkit", version, about = "Quasi-invariance checks on shift spaces and the Baker map")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<String>,
    /// Seed for sampled test families.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Absolute tolerance; each command has its own default.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Perron eigendata of the transfer operator and its residuals.
    Eigen(commands::EigenArgs),
    /// Quasi-invariance of the Gibbs eigenprobability on an indicator family.
    KmsCheck(commands::KmsArgs),
    /// Closing computation for a Markov measure with a given start.
    Counterexample(commands::CounterexampleArgs),
    /// Reweightings by densities that ignore the free coordinates.
    Nonuniqueness(commands::NonuniquenessArgs),
    /// Transverse-measure invariance and the exchange identity.
    Transverse(commands::TransverseArgs),
    /// Bowen bounds for the Gibbs measure.
    Bowen(commands::BowenArgs),
    /// Two-sided product construction.
    Twosided(commands::TwosidedArgs),
    /// Fiber density of the Baker map.
    Baker(commands::BakerArgs),
    /// Convolution-algebra identities and the matrix KMS state.
    AlgebraProps(commands::AlgebraArgs),
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("HAARKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("HAARKIT_THREADS={v:?} is not a count"))?;
    if n == 0 {
        anyhow::bail!("HAARKIT_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (common, out) = match cli.command {
        Command::Eigen(a) => (a.common.clone(), commands::eigen(&a)?),
        Command::KmsCheck(a) => (a.common.clone(), commands::kms_check(&a)?),
        Command::Counterexample(a) => (a.common.clone(), commands::counterexample(&a)?),
        Command::Nonuniqueness(a) => (a.common.clone(), commands::nonuniqueness(&a)?),
        Command::Transverse(a) => (a.common.clone(), commands::transverse(&a)?),
        Command::Bowen(a) => (a.common.clone(), commands::bowen(&a)?),
        Command::Twosided(a) => (a.common.clone(), commands::twosided(&a)?),
        Command::Baker(a) => (a.common.clone(), commands::baker(&a)?),
        Command::AlgebraProps(a) => (a.common.clone(), commands::algebra_props(&a)?),
    };
    let text = out.render();
    match &common.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(out.all_pass())
}

fn main() -> ExitCode {
    env_logger::init();
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
