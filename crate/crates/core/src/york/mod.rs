//! Gravity in the York canonical basis: tidal/inertial variables, 4-metric
//! reconstruction, the weak ADM energy, post-Newtonian particle motion with
//! a York-time inertial-mass correction, and rotation-curve fitting.

mod basis;
mod energy;
mod pn;
mod rotation_curve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

pub use basis::{metric_from_york, rotation_from_theta, GammaMatrix, GammaResiduals, Metric4, YorkBasisPoint};
pub use energy::{
    adm_energy, adm_energy_density, christoffel_scalar, expansion, nonlocal_york_time, YorkGrid,
};
pub use pn::{
    orbital_period, pn_evolve, ClosureProfile, PnOptions, PnParticle, PnTrajectory, RadialRateProfile,
    UniformRateProfile, YorkProfile, ZeroProfile,
};
pub use rotation_curve::{
    rotation_curve_fit, rotation_curve_predict, DeltaProfile, FitSettings, HaloPoint, RotationCurve,
    RotationFit,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YorkError {
    #[error("invalid York basis point: {0}")]
    InvalidPoint(String),
    #[error("invalid gamma matrix: residual {0:e}")]
    InvalidGamma(f64),
    #[error("collision between particles {i} and {j} at t = {t} (separation {separation:e})")]
    Collision { i: usize, j: usize, t: f64, separation: f64 },
    #[error("effective inertial mass not positive for particle {i} at t = {t}")]
    NonPositiveInertia { i: usize, t: f64 },
    #[error("invalid rotation curve: {0}")]
    InvalidCurve(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Newton constant and speed of light; natural units by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityConstants {
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for GravityConstants {
    fn default() -> Self {
        Self { g: 1.0, c: 1.0 }
    }
}

impl GravityConstants {
    pub fn validate(&self) -> Result<(), YorkError> {
        if !(self.g > 0.0 && self.g.is_finite() && self.c > 0.0 && self.c.is_finite()) {
            return Err(YorkError::InvalidArgument(format!(
                "G = {}, c = {} must be positive",
                self.g, self.c
            )));
        }
        Ok(())
    }
}
