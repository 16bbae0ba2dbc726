use std::time::Instant;

use restframe_core::checks::{Invariant, Suite};
use serde::Serialize;

use crate::io::{to_json, CliError, OutDir};
use crate::GlobalOpts;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub invariants: Vec<Invariant>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

/// Collects invariants for one command and writes `report.json`.
pub struct Reporter {
    command: String,
    suite: Suite,
    tol_scale: f64,
    invariants: Vec<Invariant>,
    notes: Vec<String>,
    started: Instant,
}

impl Reporter {
    pub fn new(command: &str, suite: Suite, g: &GlobalOpts) -> Self {
        Self {
            command: command.to_string(),
            suite,
            tol_scale: g.tol_scale,
            invariants: Vec::new(),
            notes: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Records `value ≤ threshold · tol_scale`.
    pub fn check(&mut self, name: &str, value: f64, threshold: f64) {
        self.invariants
            .push(Invariant::at_most(self.suite, name, value, threshold * self.tol_scale));
    }

    pub fn extend(&mut self, inv: impl IntoIterator<Item = Invariant>) {
        self.invariants.extend(inv);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn finish(self, g: &GlobalOpts, out: &OutDir) -> Result<bool, CliError> {
        let pass = self.invariants.iter().all(|i| i.pass);
        let report = RunReport {
            tool: "restframe",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: g.seed,
            tol_scale: g.tol_scale,
            invariants: self.invariants,
            pass,
            notes: self.notes,
            wall_clock_s: g.timings.then(|| self.started.elapsed().as_secs_f64()),
        };
        out.write_json("report.json", &report)?;
        if !g.quiet {
            println!("{}", to_json(&report)?);
            for inv in report.invariants.iter().filter(|i| !i.pass) {
                eprintln!("FAIL {}: {:e} > {:e}", inv.name, inv.value, inv.threshold);
            }
        }
        Ok(pass)
    }
}
