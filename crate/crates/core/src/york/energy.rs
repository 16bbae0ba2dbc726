use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::basis::{metric_from_york, GammaMatrix, YorkBasisPoint};
use super::{GravityConstants, YorkError};
use crate::kinematics::Signature;
use crate::numerics::{Grid3, ScalarField, Spectral};

/// `θ = −ε (12πG/c³) π_φ̃`.
pub fn expansion(p: &YorkBasisPoint, sig: Signature, k: &GravityConstants) -> f64 {
    -sig.epsilon() * 12.0 * PI * k.g / k.c.powi(3) * p.pi_phi
}

/// Integrand of the weak ADM energy:
/// `c[M̌ − (c³/16πG)𝒮 + (4πG/c³)φ̃⁻¹ΣΠ² + φ̃((c³/16πG)Σ_{a≠b}σ² − (6πG/c³)π_φ̃²)]`.
pub fn adm_energy_density(
    p: &YorkBasisPoint,
    matter_density: f64,
    s_term: f64,
    k: &GravityConstants,
) -> Result<f64, YorkError> {
    p.validate()?;
    k.validate()?;
    let c3 = k.c.powi(3);
    let grav = c3 / (16.0 * PI * k.g);
    let kin = 4.0 * PI * k.g / c3;
    let york = 6.0 * PI * k.g / c3;
    let inner = matter_density - grav * s_term
        + kin * p.pi_r.norm_squared() / p.phi_tilde
        + p.phi_tilde * (grav * p.off_diagonal_shear_sq() - york * p.pi_phi * p.pi_phi);
    Ok(k.c * inner)
}

/// York basis points sampled on a periodic lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct YorkGrid {
    pub grid: Grid3,
    pub points: Vec<YorkBasisPoint>,
}

impl YorkGrid {
    pub fn new(grid: Grid3, points: Vec<YorkBasisPoint>) -> Result<Self, YorkError> {
        if points.len() != grid.len() {
            return Err(YorkError::InvalidArgument(format!(
                "expected {} points, found {}",
                grid.len(),
                points.len()
            )));
        }
        for p in &points {
            p.validate()?;
        }
        Ok(Self { grid, points })
    }

    pub fn uniform(grid: Grid3, p: YorkBasisPoint) -> Result<Self, YorkError> {
        Self::new(grid, vec![p; grid.len()])
    }
}

/// `𝒮 = φ̃ g^{rs}(Γ^u_uv Γ^v_rs − Γ^u_sv Γ^v_ru)` from centred differences of the
/// reconstructed 3-metric.
pub fn christoffel_scalar(points: &YorkGrid, gamma: &GammaMatrix) -> Result<ScalarField, YorkError> {
    let g = points.grid;
    let metrics: Vec<Matrix3<f64>> = points
        .points
        .iter()
        .map(|p| metric_from_york(p, gamma, Signature::ParticlePhysics).map(|m| m.three_metric()))
        .collect::<Result<_, _>>()?;
    let h = g.spacing();
    let mut out = ScalarField::zeros(g);
    for (idx, s) in out.data_mut().iter_mut().enumerate() {
        // dg[u][(r, s)] = ∂_u g_rs
        let dg: [Matrix3<f64>; 3] = std::array::from_fn(|u| {
            (metrics[g.shifted(idx, u, 1)] - metrics[g.shifted(idx, u, -1)]) / (2.0 * h)
        });
        let gm = metrics[idx];
        let inv = gm
            .try_inverse()
            .ok_or_else(|| YorkError::InvalidPoint("singular 3-metric".into()))?;
        // Γ^u_rs = ½ g^{uv}(∂_r g_vs + ∂_s g_vr − ∂_v g_rs)
        let mut chr = [[[0.0; 3]; 3]; 3];
        for (u, cu) in chr.iter_mut().enumerate() {
            for r in 0..3 {
                for s in 0..3 {
                    let mut acc = 0.0;
                    for v in 0..3 {
                        acc += inv[(u, v)] * (dg[r][(v, s)] + dg[s][(v, r)] - dg[v][(r, s)]);
                    }
                    cu[r][s] = 0.5 * acc;
                }
            }
        }
        let trace: [f64; 3] = std::array::from_fn(|v| (0..3).map(|u| chr[u][u][v]).sum());
        let mut val = 0.0;
        for r in 0..3 {
            for s in 0..3 {
                let mut t = 0.0;
                for v in 0..3 {
                    t += trace[v] * chr[v][r][s];
                    for u in 0..3 {
                        t -= chr[u][s][v] * chr[v][r][u];
                    }
                }
                val += inv[(r, s)] * t;
            }
        }
        *s = points.points[idx].phi_tilde * val;
    }
    Ok(out)
}

/// `Ê_ADM` on the lattice. `s_override` replaces the finite-difference 𝒮.
pub fn adm_energy(
    points: &YorkGrid,
    matter: &ScalarField,
    gamma: &GammaMatrix,
    s_override: Option<&ScalarField>,
    k: &GravityConstants,
) -> Result<f64, YorkError> {
    let g = points.grid;
    if matter.grid() != g || s_override.is_some_and(|s| s.grid() != g) {
        return Err(YorkError::InvalidArgument("fields on different grids".into()));
    }
    let s = match s_override {
        Some(s) => s.clone(),
        None => christoffel_scalar(points, gamma)?,
    };
    let mut total = 0.0;
    for (idx, p) in points.points.iter().enumerate() {
        total += adm_energy_density(p, matter.data()[idx], s.data()[idx], k)?;
    }
    Ok(total * g.cell_volume())
}

/// `K̃ = (1/Δ) K` on the torus. The mean of `K` is removed first; the
/// returned flag tells whether it was nonzero.
pub fn nonlocal_york_time(k1: &ScalarField) -> Result<(ScalarField, bool), YorkError> {
    let mean = k1.mean();
    let spec = Spectral::new(k1.grid());
    let removed = mean.abs() > 1e-14 * k1.max_abs().max(f64::MIN_POSITIVE);
    Ok((spec.inverse_laplacian(&k1.sub_mean())?, removed))
}
