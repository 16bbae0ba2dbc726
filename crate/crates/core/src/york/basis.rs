use nalgebra::{Matrix3, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::YorkError;
use crate::kinematics::{Signature, Vec3};

const GAMMA_TOL: f64 = 1e-12;

/// The 2×3 parameters `γ_āa` that fix a York basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaMatrix {
    pub rows: [[f64; 3]; 2],
}

/// Worst violation of each constraint family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaResiduals {
    pub row_sums: f64,
    pub orthonormality: f64,
    pub completeness: f64,
}

impl GammaResiduals {
    pub fn max(&self) -> f64 {
        self.row_sums.max(self.orthonormality).max(self.completeness)
    }
}

impl Default for GammaMatrix {
    fn default() -> Self {
        Self::reference()
    }
}

impl GammaMatrix {
    /// `γ₁ = (1, −1, 0)/√2`, `γ₂ = (1, 1, −2)/√6`.
    pub fn reference() -> Self {
        let a = 1.0 / 2f64.sqrt();
        let b = 1.0 / 6f64.sqrt();
        Self {
            rows: [[a, -a, 0.0], [b, b, -2.0 * b]],
        }
    }

    /// Reference solution moved by a seeded element of O(2) acting on `ā`.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let reflect = rng.random_bool(0.5);
        Self::reference().transformed(angle, reflect)
    }

    pub fn solve(seed: Option<u64>) -> Self {
        seed.map_or_else(Self::reference, Self::from_seed)
    }

    /// `γ' = O γ` with `O` a rotation by `angle`, optionally followed by the
    /// reflection `ā = 2 → −ā = 2`.
    pub fn transformed(&self, angle: f64, reflect: bool) -> Self {
        let (s, c) = angle.sin_cos();
        let sign = if reflect { -1.0 } else { 1.0 };
        let o = [[c, -s], [sign * s, sign * c]];
        let mut rows = [[0.0; 3]; 2];
        for (i, row) in rows.iter_mut().enumerate() {
            for (u, x) in row.iter_mut().enumerate() {
                *x = o[i][0] * self.rows[0][u] + o[i][1] * self.rows[1][u];
            }
        }
        Self { rows }
    }

    pub fn residuals(&self) -> GammaResiduals {
        let g = &self.rows;
        let row_sums = g.iter().map(|r| r.iter().sum::<f64>().abs()).fold(0.0, f64::max);
        let mut orthonormality: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = (0..3).map(|u| g[a][u] * g[b][u]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((dot - target).abs());
            }
        }
        let mut completeness: f64 = 0.0;
        for u in 0..3 {
            for v in 0..3 {
                let s = g[0][u] * g[0][v] + g[1][u] * g[1][v];
                let target = if u == v { 1.0 } else { 0.0 } - 1.0 / 3.0;
                completeness = completeness.max((s - target).abs());
            }
        }
        GammaResiduals {
            row_sums,
            orthonormality,
            completeness,
        }
    }

    pub fn validate(&self) -> Result<(), YorkError> {
        let r = self.residuals().max();
        if r > GAMMA_TOL || !r.is_finite() {
            return Err(YorkError::InvalidGamma(r));
        }
        Ok(())
    }

    /// `Q_a = exp(Σ_ā γ_āa R_ā)`.
    pub fn q_factors(&self, r: &Vector2<f64>) -> [f64; 3] {
        std::array::from_fn(|a| (self.rows[0][a] * r[0] + self.rows[1][a] * r[1]).exp())
    }
}

/// `V = exp(Σ θ^i T_i)` with `(T_i)_jk = −ε_ijk`.
pub fn rotation_from_theta(theta: &Vec3) -> Matrix3<f64> {
    let angle = theta.norm();
    let k = Matrix3::new(
        0.0, -theta[2], theta[1], //
        theta[2], 0.0, -theta[0], //
        -theta[1], theta[0], 0.0,
    );
    let k2 = k * k;
    // sin(x)/x and (1 − cos x)/x² with series near zero
    let (a, b) = if angle < 1e-4 {
        let x2 = angle * angle;
        (1.0 - x2 / 6.0, 0.5 - x2 / 24.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / (angle * angle))
    };
    Matrix3::identity() + k * a + k2 * b
}

/// Canonical data at one point of a 3-space in the York basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YorkBasisPoint {
    #[serde(default)]
    pub theta: Vec3,
    #[serde(default = "unit")]
    pub phi_tilde: f64,
    #[serde(default, rename = "R")]
    pub r: Vector2<f64>,
    #[serde(default)]
    pub pi_phi: f64,
    #[serde(default, rename = "Pi")]
    pub pi_r: Vector2<f64>,
    #[serde(default)]
    pub n: f64,
    #[serde(default)]
    pub n_bar: Vec3,
    #[serde(default)]
    pub shear: Matrix3<f64>,
}

fn unit() -> f64 {
    1.0
}

impl Default for YorkBasisPoint {
    fn default() -> Self {
        Self::flat()
    }
}

impl YorkBasisPoint {
    /// `θ = 0`, `φ̃ = 1`, everything else zero.
    pub fn flat() -> Self {
        Self {
            theta: Vec3::zeros(),
            phi_tilde: 1.0,
            r: Vector2::zeros(),
            pi_phi: 0.0,
            pi_r: Vector2::zeros(),
            n: 0.0,
            n_bar: Vec3::zeros(),
            shear: Matrix3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<(), YorkError> {
        let finite = self.theta.iter().all(|x| x.is_finite())
            && self.r.iter().chain(self.pi_r.iter()).all(|x| x.is_finite())
            && self.n_bar.iter().all(|x| x.is_finite())
            && self.shear.iter().all(|x| x.is_finite())
            && self.pi_phi.is_finite()
            && self.n.is_finite();
        if !finite {
            return Err(YorkError::InvalidPoint("non-finite component".into()));
        }
        if !(self.phi_tilde > 0.0 && self.phi_tilde.is_finite()) {
            return Err(YorkError::InvalidPoint(format!("phi_tilde = {} must be > 0", self.phi_tilde)));
        }
        if !(1.0 + self.n > 0.0) {
            return Err(YorkError::InvalidPoint(format!("lapse 1 + n = {} must be > 0", 1.0 + self.n)));
        }
        let scale = 1.0 + self.shear.amax();
        if self.shear.trace().abs() > 1e-12 * scale {
            return Err(YorkError::InvalidPoint("shear must be trace-free".into()));
        }
        if (self.shear - self.shear.transpose()).amax() > 1e-12 * scale {
            return Err(YorkError::InvalidPoint("shear must be symmetric".into()));
        }
        Ok(())
    }

    /// `Σ_{a≠b} σ_(a)(b)²`.
    pub fn off_diagonal_shear_sq(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    s += self.shear[(a, b)].powi(2);
                }
            }
        }
        s
    }
}

/// Reconstructed metric in radar coordinates `(τ, σ¹, σ², σ³)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metric4 {
    pub g: Matrix4<f64>,
    /// `³ē_(a)r` stored as `triad[(a, r)]`.
    pub triad: Matrix3<f64>,
    pub epsilon: f64,
}

impl Metric4 {
    /// Positive-definite spatial metric `³g_rs = −ε ⁴g_rs`.
    pub fn three_metric(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, s| -self.epsilon * self.g[(r + 1, s + 1)])
    }

    pub fn three_determinant(&self) -> f64 {
        self.three_metric().determinant()
    }

    /// `⁴g_ττ − ⁴g_τr (⁴g^{(3)})⁻¹_rs ⁴g_τs`, which equals `ε(1+n)²`.
    pub fn lapse_combination(&self) -> Option<f64> {
        let block = Matrix3::from_fn(|r, s| self.g[(r + 1, s + 1)]);
        let inv = block.try_inverse()?;
        let shift = Vec3::new(self.g[(0, 1)], self.g[(0, 2)], self.g[(0, 3)]);
        Some(self.g[(0, 0)] - (shift.transpose() * inv * shift)[(0, 0)])
    }

    /// Eigenvalues of `³g` in ascending order.
    pub fn three_eigenvalues(&self) -> [f64; 3] {
        let mut e: Vec<f64> = self.three_metric().symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        [e[0], e[1], e[2]]
    }
}

pub fn metric_from_york(
    p: &YorkBasisPoint,
    gamma: &GammaMatrix,
    sig: Signature,
) -> Result<Metric4, YorkError> {
    p.validate()?;
    gamma.validate()?;
    let eps = sig.epsilon();
    let v = rotation_from_theta(&p.theta);
    let q = gamma.q_factors(&p.r);
    let scale = p.phi_tilde.cbrt();
    let triad = Matrix3::from_fn(|a, r| v[(r, a)] * scale * q[a]);
    let three = triad.transpose() * triad;
    let mut g = Matrix4::zeros();
    for r in 0..3 {
        for s in 0..3 {
            g[(r + 1, s + 1)] = -eps * three[(r, s)];
        }
        let shift: f64 = (0..3).map(|a| p.n_bar[a] * triad[(a, r)]).sum();
        g[(0, r + 1)] = -eps * shift;
        g[(r + 1, 0)] = -eps * shift;
    }
    g[(0, 0)] = eps * ((1.0 + p.n).powi(2) - p.n_bar.norm_squared());
    Ok(Metric4 { g, triad, epsilon: eps })
}
