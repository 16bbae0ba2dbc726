use clap::Args;
use restframe_core::checks::{run_suite, CheckConfig, CheckError, Suite};

use crate::io::{numerical, CliError, OutDir};
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run every suite.
    #[arg(long, conflicts_with = "module")]
    pub all: bool,
    /// Suite to run (kinematics, nbody, em, ym, gravity); repeatable.
    #[arg(long, value_parser = parse_suite)]
    pub module: Vec<Suite>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown module {s:?}; expected one of {}", names.join(", "))
    })
}

pub fn run(args: &CheckArgs, g: &GlobalOpts) -> Result<bool, CliError> {
    let suites: Vec<Suite> = if args.all || args.module.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.module.clone()
    };
    let cfg = CheckConfig { seed: g.seed, tol_scale: g.tol_scale };
    let mut rep = Reporter::new("check", suites[0], g);
    for s in &suites {
        let inv = run_suite(*s, &cfg).map_err(|e| match e {
            CheckError::UnknownCriterion(_) => CliError::Validation(e.to_string()),
            other => numerical(other),
        })?;
        rep.extend(inv);
    }
    let out = OutDir::create(&g.out)?;
    rep.finish(g, &out)
}
