pub mod check;
pub mod em;
pub mod gravity;
pub mod kinematics;
pub mod nbody;
pub mod ym;

use restframe_core::numerics::Grid3;
use serde::Deserialize;

use crate::io::{invalid, CliError};

/// Cubic periodic lattice: `n` points per side with spacing `spacing`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub spacing: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid3, CliError> {
        Grid3::new(self.n, self.spacing).map_err(invalid)
    }
}

pub fn default_one() -> f64 {
    1.0
}

pub fn default_every() -> usize {
    1
}
