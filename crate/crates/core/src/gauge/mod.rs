//! Electromagnetic and Yang-Mills fields on the periodic Wigner 3-lattice.
//!
//! The Maxwell sector is split into gauge variables `(A_τ, η)`, the Gauss
//! constraint `Γ = ∂·π` and the transverse Dirac observables `(A_⊥, π_⊥)`.
//! Charges are smooth smeared densities; strong (flux) and weak (volume)
//! charges are compared on rectangular sub-boxes through a discrete
//! divergence theorem.

mod charge;
mod maxwell;
mod yang_mills;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{Grid3, NumericsError, ScalarField, Spectral};

pub use charge::{charge_identity, coulomb_field, ChargeDensity, ChargeIdentity, PointCharge};
pub use maxwell::{
    b_field, cfl_limit, decompose, evolve_free, evolve_free_with, gauge_step, gauss_residual,
    hamiltonian, radiation_gauge, random_transverse_field, recompose, transverse_mode,
    EmDecomposition, EmState, FreeEvolver,
};
pub use yang_mills::{
    ym_color_charges, ym_gauge_transform, ym_gauss, ColorCharge, StructureConstants, YmState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("invalid decomposition: max |divergence| of transverse part {divergence:e}")]
    InvalidDecomposition { divergence: f64 },
    #[error("time step {dt} violates the CFL bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid structure constants: {0}")]
    InvalidStructure(String),
    #[error("invalid charge configuration: {0}")]
    InvalidCharge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Half-open box of lattice cells `lo[r] ≤ i_r < hi[r]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Region {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn whole(grid: Grid3) -> Self {
        let n = grid.n();
        Self { lo: [0; 3], hi: [n; 3] }
    }

    pub fn validate(&self, grid: Grid3) -> Result<(), GaugeError> {
        for r in 0..3 {
            if self.lo[r] >= self.hi[r] || self.hi[r] > grid.n() {
                return Err(GaugeError::InvalidRegion(format!(
                    "axis {r}: [{}, {}) not inside [0, {})",
                    self.lo[r],
                    self.hi[r],
                    grid.n()
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|r| self.lo[r] <= c[r] && c[r] < self.hi[r])
    }
}

/// `∫_Ω f` as a lattice sum.
pub(crate) fn region_integral(f: &ScalarField, region: &Region) -> f64 {
    let g = f.grid();
    let mut s = 0.0;
    for i in region.lo[0]..region.hi[0] {
        for j in region.lo[1]..region.hi[1] {
            for k in region.lo[2]..region.hi[2] {
                s += f.data()[g.index(i, j, k)];
            }
        }
    }
    s * g.cell_volume()
}

/// Outward flux of a vector field through `∂Ω`, built from spectral face
/// values so that it equals the region integral of the spectral divergence.
pub(crate) fn region_flux(spec: &Spectral, v: &[ScalarField; 3], region: &Region) -> f64 {
    let g = spec.grid();
    let n = g.n();
    let h2 = g.spacing() * g.spacing();
    let mut total = 0.0;
    for axis in 0..3 {
        let face = spec.face_values(&v[axis], axis);
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let upper = region.hi[axis] - 1;
        let lower = (region.lo[axis] + n - 1) % n;
        for i in region.lo[a]..region.hi[a] {
            for j in region.lo[b]..region.hi[b] {
                let at = |m: usize| {
                    let mut c = [0usize; 3];
                    c[axis] = m;
                    c[a] = i;
                    c[b] = j;
                    face.data()[g.index(c[0], c[1], c[2])]
                };
                total += at(upper) - at(lower);
            }
        }
    }
    total * h2
}
