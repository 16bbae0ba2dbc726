use serde::{Deserialize, Serialize};

use super::maxwell::{electric_field, EmDecomposition};
use super::{region_flux, region_integral, GaugeError, Region};
use crate::numerics::{Grid3, ScalarField, Spectral, VectorField3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointCharge {
    pub charge: f64,
    pub center: [f64; 3],
}

/// Smeared classical charge density.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeDensity {
    rho: ScalarField,
    charges: Vec<PointCharge>,
    width: f64,
}

impl ChargeDensity {
    /// Sum of periodic Gaussian bumps of width `w`, each normalised so that
    /// its lattice integral is exactly its charge.
    pub fn smeared(grid: Grid3, charges: &[PointCharge], width: f64) -> Result<Self, GaugeError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(GaugeError::InvalidCharge(format!("width {width}")));
        }
        if width > grid.length() / 6.0 {
            return Err(GaugeError::InvalidCharge(format!(
                "width {width} too wide for box {}",
                grid.length()
            )));
        }
        let mut rho = ScalarField::zeros(grid);
        for q in charges {
            if !q.charge.is_finite() || q.center.iter().any(|x| !x.is_finite()) {
                return Err(GaugeError::InvalidCharge("non-finite charge".into()));
            }
            let bump = ScalarField::from_fn(grid, |x| {
                let d = grid.periodic_delta(x, q.center);
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                (-0.5 * r2 / (width * width)).exp()
            });
            let norm = q.charge / bump.integral();
            for (r, b) in rho.data_mut().iter_mut().zip(bump.data()) {
                *r += norm * b;
            }
        }
        Ok(Self {
            rho,
            charges: charges.to_vec(),
            width,
        })
    }

    pub fn from_field(rho: ScalarField) -> Self {
        Self {
            rho,
            charges: Vec::new(),
            width: 0.0,
        }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self::from_field(ScalarField::zeros(grid))
    }

    pub fn field(&self) -> &ScalarField {
        &self.rho
    }

    pub fn charges(&self) -> &[PointCharge] {
        &self.charges
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn total(&self) -> f64 {
        self.rho.integral()
    }
}

/// Longitudinal electric field `π = −∇(1/Δ)ρ` solving `∂·π = ρ`.
pub fn coulomb_field(rho: &ChargeDensity) -> Result<VectorField3, GaugeError> {
    let spec = Spectral::new(rho.field().grid());
    let total = rho.total();
    if total.abs() > 1e-10 * rho.field().max_abs().max(f64::MIN_POSITIVE) * rho.field().grid().volume() {
        return Err(GaugeError::InvalidCharge(format!(
            "net charge {total:e} on a torus"
        )));
    }
    let phi = spec.inverse_laplacian(&rho.field().sub_mean())?;
    Ok(spec.gradient(&phi).scale(-1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChargeIdentity {
    /// Outward flux of `π` through `∂Ω`.
    pub q_strong: f64,
    /// `∫_Ω ρ`.
    pub q_weak: f64,
    /// `∫_Ω (Γ − ρ)`.
    pub gauss_integral: f64,
}

impl ChargeIdentity {
    /// `Q_strong − Q_weak − ∫(Γ − ρ)`.
    pub fn defect(&self) -> f64 {
        self.q_strong - self.q_weak - self.gauss_integral
    }
}

pub fn charge_identity(
    d: &EmDecomposition,
    rho: &ChargeDensity,
    region: &Region,
) -> Result<ChargeIdentity, GaugeError> {
    let g = d.grid();
    if rho.field().grid() != g {
        return Err(GaugeError::GridMismatch);
    }
    region.validate(g)?;
    let spec = Spectral::new(g);
    let pi = electric_field(&spec, d)?;
    let q_strong = region_flux(&spec, pi.components(), region);
    let q_weak = region_integral(rho.field(), region);
    let residual = d.gamma.zip_map(rho.field(), |a, b| a - b);
    Ok(ChargeIdentity {
        q_strong,
        q_weak,
        gauss_integral: region_integral(&residual, region),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::maxwell::{decompose, gauss_residual, EmState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid3 {
        Grid3::new(32, 0.25).unwrap()
    }

    fn dipole(g: Grid3) -> ChargeDensity {
        ChargeDensity::smeared(
            g,
            &[
                PointCharge { charge: 1.5, center: [2.0, 4.0, 4.0] },
                PointCharge { charge: -1.5, center: [6.0, 4.0, 4.0] },
            ],
            0.75,
        )
        .unwrap()
    }

    fn constrained_state(rho: &ChargeDensity) -> EmDecomposition {
        let mut s = EmState::zeros(rho.field().grid());
        s.pi = coulomb_field(rho).unwrap();
        decompose(&s).unwrap()
    }

    #[test]
    fn bump_integrates_to_charge() {
        let g = grid();
        let q = ChargeDensity::smeared(g, &[PointCharge { charge: 2.5, center: [1.1, 2.9, 5.7] }], 0.7)
            .unwrap();
        assert!((q.total() - 2.5).abs() < 1e-8);
        let whole = Region::whole(g);
        let d = decompose(&EmState::zeros(g)).unwrap();
        let id = charge_identity(&d, &q, &whole).unwrap();
        assert!((id.q_weak - 2.5).abs() < 1e-8);
    }

    #[test]
    fn constrained_state_has_equal_charges() {
        let g = grid();
        let rho = dipole(g);
        let d = constrained_state(&rho);
        assert!(gauss_residual(&d, &rho).unwrap().max_abs() < 1e-10);
        // box around the positive charge only
        let region = Region::new([0, 4, 4], [16, 28, 28]);
        let id = charge_identity(&d, &rho, &region).unwrap();
        assert!((id.q_weak - 1.5).abs() < 0.05, "q_weak {}", id.q_weak);
        assert!((id.q_strong - id.q_weak).abs() < 1e-10, "{id:?}");
    }

    #[test]
    fn identity_holds_for_unconstrained_states() {
        let g = Grid3::new(12, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = EmState::zeros(g);
        for r in 0..3 {
            for x in s.pi.component_mut(r).data_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let d = decompose(&s).unwrap();
        let rho = ChargeDensity::zeros(g);
        for region in [
            Region::new([0, 0, 0], [5, 7, 3]),
            Region::new([3, 1, 2], [12, 11, 9]),
            Region::whole(g),
        ] {
            let id = charge_identity(&d, &rho, &region).unwrap();
            assert!(id.defect().abs() < 1e-12, "{id:?}");
        }
        let q = dipole(Grid3::new(12, 0.5).unwrap());
        let id = charge_identity(&d, &q, &Region::new([1, 2, 3], [8, 9, 10])).unwrap();
        assert!(id.defect().abs() < 1e-12);
    }

    #[test]
    fn net_charge_has_no_coulomb_field_on_torus() {
        let g = grid();
        let q = ChargeDensity::smeared(g, &[PointCharge { charge: 1.0, center: [4.0; 3] }], 0.75).unwrap();
        assert!(matches!(coulomb_field(&q), Err(GaugeError::InvalidCharge(_))));
    }

    #[test]
    fn bad_inputs_rejected() {
        let g = grid();
        assert!(ChargeDensity::smeared(g, &[], 0.0).is_err());
        assert!(ChargeDensity::smeared(g, &[], 5.0).is_err());
        let d = decompose(&EmState::zeros(g)).unwrap();
        let bad = Region::new([3, 0, 0], [3, 4, 4]);
        assert!(charge_identity(&d, &ChargeDensity::zeros(g), &bad).is_err());
    }
}
