#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use io::CliError;

#[derive(Parser, Debug)]
#[command(name = "restframe", version, about = "Rest-frame instant form dynamics toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Multiplier applied to every invariant threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Do not print the report to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boosts, external Poincaré generators and embeddings from a scenario.
    Kinematics { scenario: PathBuf },
    /// Two-body rest-frame evolution.
    Nbody { scenario: PathBuf },
    /// Maxwell field in the constraint-adapted variables.
    Em { scenario: PathBuf },
    /// Yang-Mills Gauss law and colour charges.
    Ym { scenario: PathBuf },
    /// York-basis metric, ADM energy, PN motion and rotation-curve fits.
    Gravity {
        #[command(subcommand)]
        mode: commands::gravity::GravityMode,
    },
    /// Run invariant suites.
    Check(commands::check::CheckArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RESTFRAME_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("RESTFRAME_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let g = &cli.global;
    if !(g.tol_scale > 0.0 && g.tol_scale.is_finite()) {
        return Err(CliError::Validation(format!("--tol-scale must be positive, got {}", g.tol_scale)));
    }
    match cli.command {
        Command::Kinematics { scenario } => commands::kinematics::run(&scenario, g),
        Command::Nbody { scenario } => commands::nbody::run(&scenario, g),
        Command::Em { scenario } => commands::em::run(&scenario, g),
        Command::Ym { scenario } => commands::ym::run(&scenario, g),
        Command::Gravity { mode } => commands::gravity::run(&mode, g),
        Command::Check(args) => commands::check::run(&args, g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
