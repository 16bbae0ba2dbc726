//! Wigner boosts, the rest-frame embedding of the Wigner 3-spaces, the
//! external Poincaré generators on Jacobi data and the Møller radius.

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Vec4 = Vector4<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("non-time-like configuration (Mc = {0})")]
    NonTimelike(f64),
    #[error("signature must be +1 or -1, got {0}")]
    BadSignature(i64),
    #[error("speed of light must be positive and finite, got {0}")]
    BadLightSpeed(f64),
}

/// Overall sign `ε` of the metric `ε(+,−,−,−)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Signature {
    /// `ε = +1`.
    #[default]
    ParticlePhysics,
    /// `ε = −1`.
    GeneralRelativity,
}

impl Signature {
    pub fn epsilon(self) -> f64 {
        match self {
            Signature::ParticlePhysics => 1.0,
            Signature::GeneralRelativity => -1.0,
        }
    }

    /// `ε·diag(1, −1, −1, −1)`.
    pub fn minkowski(self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vec4::new(1.0, -1.0, -1.0, -1.0)) * self.epsilon()
    }

    /// `η_{μν} a^μ b^ν`.
    pub fn dot(self, a: &Vec4, b: &Vec4) -> f64 {
        self.epsilon() * (a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3])
    }
}

impl TryFrom<i64> for Signature {
    type Error = KinematicsError;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Signature::ParticlePhysics),
            -1 => Ok(Signature::GeneralRelativity),
            other => Err(KinematicsError::BadSignature(other)),
        }
    }
}

impl From<Signature> for i64 {
    fn from(s: Signature) -> i64 {
        s.epsilon() as i64
    }
}

/// Global conventions threaded through every module of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    #[serde(default)]
    pub epsilon: Signature,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            epsilon: Signature::ParticlePhysics,
            c: 1.0,
        }
    }
}

impl Conventions {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.c.is_finite() && self.c > 0.0 {
            Ok(())
        } else {
            Err(KinematicsError::BadLightSpeed(self.c))
        }
    }
}

/// Columns `ε^μ_A(h)`, `A ∈ {τ, 1, 2, 3}`, of the standard Wigner boost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostMatrix(pub Matrix4<f64>);

impl BoostMatrix {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn column(&self, a: usize) -> Vec4 {
        self.0.column(a).into_owned()
    }

    /// `max |ΛᵀηΛ − η|`.
    pub fn metric_defect(&self, sig: Signature) -> f64 {
        let eta = sig.minkowski();
        (self.0.transpose() * eta * self.0 - eta).amax()
    }
}

/// `h^μ = (√(1+h²); h)`.
pub fn four_velocity(h: &Vec3) -> Vec4 {
    Vec4::new((1.0 + h.norm_squared()).sqrt(), h[0], h[1], h[2])
}

/// Standard Wigner boost sending `(1; 0)` to `h^μ`.
pub fn wigner_boost(h: &Vec3) -> BoostMatrix {
    let gamma = (1.0 + h.norm_squared()).sqrt();
    let mut m = Matrix4::zeros();
    m[(0, 0)] = gamma;
    for r in 0..3 {
        m[(r + 1, 0)] = h[r];
        m[(0, r + 1)] = h[r];
        for i in 0..3 {
            let delta = if i == r { 1.0 } else { 0.0 };
            m[(i + 1, r + 1)] = delta + h[i] * h[r] / (1.0 + gamma);
        }
    }
    BoostMatrix(m)
}

/// The rest-frame embedding `z^μ(τ, σ) = Y^μ(0) + Λ^μ_A(h) σ^A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Embedding {
    y0: Vec4,
    h: Vec3,
    boost: BoostMatrix,
}

impl Embedding {
    pub fn new(y0: Vec4, h: Vec3) -> Self {
        Self {
            y0,
            h,
            boost: wigner_boost(&h),
        }
    }

    pub fn origin(&self) -> Vec4 {
        self.y0
    }

    pub fn h(&self) -> Vec3 {
        self.h
    }

    pub fn boost(&self) -> &BoostMatrix {
        &self.boost
    }

    pub fn embed(&self, tau: f64, sigma: &Vec3) -> Vec4 {
        self.y0 + self.boost.0 * Vec4::new(tau, sigma[0], sigma[1], sigma[2])
    }

    /// Fokker-Pryce world-line `Y^μ(τ) = Y^μ(0) + h^μ τ`.
    pub fn fokker_pryce(&self, tau: f64) -> Vec4 {
        self.y0 + four_velocity(&self.h) * tau
    }

    /// Gradients `z^μ_A = ∂z^μ/∂σ^A`; constant for this family.
    pub fn gradients(&self) -> Matrix4<f64> {
        self.boost.0
    }
}

/// Free function form of [`Embedding::embed`].
pub fn embed(e: &Embedding, tau: f64, sigma: &Vec3) -> Vec4 {
    e.embed(tau, sigma)
}

/// Frozen Cauchy data of the decoupled external centre of mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiData {
    /// `z = Mc x_NW(0)`.
    pub z: Vec3,
    /// `h = P/Mc`.
    pub h: Vec3,
    /// Invariant mass times `c`.
    pub mc: f64,
    /// Rest spin.
    pub spin: Vec3,
}

/// The ten generator values, with `J^{ij}` stored as its dual vector `J^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalGenerators {
    pub p: Vec4,
    /// `J^k = ½ ε^{kij} J^{ij}`.
    pub j: Vec3,
    /// `K^i = J^{0i}`.
    pub k: Vec3,
}

impl ExternalGenerators {
    /// Order `[P⁰, P¹, P², P³, J¹, J², J³, K¹, K², K³]`.
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.p[0], self.p[1], self.p[2], self.p[3], self.j[0], self.j[1], self.j[2],
            self.k[0], self.k[1], self.k[2],
        ]
    }

    /// Antisymmetric `J^{μν}` with `J^{0i} = K^i`.
    pub fn angular_tensor(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for i in 0..3 {
            m[(0, i + 1)] = self.k[i];
            m[(i + 1, 0)] = -self.k[i];
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            m[(a + 1, b + 1)] = self.j[i];
            m[(b + 1, a + 1)] = -self.j[i];
        }
        m
    }

    /// Inverse of [`Self::angular_tensor`]; the antisymmetric part is used.
    pub fn from_tensor(p: Vec4, jmn: &Matrix4<f64>) -> Self {
        let a = 0.5 * (jmn - jmn.transpose());
        let k = Vec3::new(a[(0, 1)], a[(0, 2)], a[(0, 3)]);
        let j = Vec3::new(a[(2, 3)], a[(3, 1)], a[(1, 2)]);
        Self { p, j, k }
    }

    /// `ε P²`, equal to `M²c²` for generators built from Jacobi data.
    pub fn mass_shell(&self, sig: Signature) -> f64 {
        sig.epsilon() * sig.dot(&self.p, &self.p)
    }
}

pub fn external_generators(data: &JacobiData) -> ExternalGenerators {
    let h0 = (1.0 + data.h.norm_squared()).sqrt();
    let p = four_velocity(&data.h) * data.mc;
    let j = data.z.cross(&data.h) + data.spin;
    let k = -data.z * h0 + data.spin.cross(&data.h) / (1.0 + h0);
    ExternalGenerators { p, j, k }
}

/// `ρ = |S| / Mc`.
pub fn moller_radius(mc: f64, spin: &Vec3) -> Result<f64, KinematicsError> {
    if !(mc > 0.0) {
        return Err(KinematicsError::NonTimelike(mc));
    }
    Ok(spin.norm() / mc)
}

/// Levi-Civita symbol on `0..3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Poincaré structure constants for generators ordered
/// `[H, P¹, P², P³, J¹, J², J³, K¹, K², K³]`, where `H` is `P⁰` externally
/// and `Mc` for the internal realisation.
///
/// Returns the expected value of `{G_a, G_b}` given the generator values `g`:
/// `{J^i, J^j} = ε^{ijk} J^k`, `{J^i, P^j} = ε^{ijk} P^k`, `{J^i, K^j} = ε^{ijk} K^k`,
/// `{K^i, P^j} = −δ^{ij} H`, `{K^i, H} = −P^i`, `{K^i, K^j} = −ε^{ijk} J^k`,
/// all others zero.
pub fn poincare_structure(a: usize, b: usize, g: &[f64; 10]) -> f64 {
    #[derive(Clone, Copy)]
    enum Kind {
        H,
        P(usize),
        J(usize),
        K(usize),
    }
    fn kind(a: usize) -> Kind {
        match a {
            0 => Kind::H,
            1..=3 => Kind::P(a - 1),
            4..=6 => Kind::J(a - 4),
            _ => Kind::K(a - 7),
        }
    }
    let p = |k: usize| g[1 + k];
    let j = |k: usize| g[4 + k];
    let kb = |k: usize| g[7 + k];
    let eps_sum = |i: usize, jj: usize, f: &dyn Fn(usize) -> f64| {
        (0..3).map(|k| levi_civita(i, jj, k) * f(k)).sum::<f64>()
    };
    match (kind(a), kind(b)) {
        (Kind::J(i), Kind::J(l)) => eps_sum(i, l, &j),
        (Kind::J(i), Kind::P(l)) => eps_sum(i, l, &p),
        (Kind::P(l), Kind::J(i)) => -eps_sum(i, l, &p),
        (Kind::J(i), Kind::K(l)) => eps_sum(i, l, &kb),
        (Kind::K(l), Kind::J(i)) => -eps_sum(i, l, &kb),
        (Kind::K(i), Kind::P(l)) => {
            if i == l {
                -g[0]
            } else {
                0.0
            }
        }
        (Kind::P(l), Kind::K(i)) => {
            if i == l {
                g[0]
            } else {
                0.0
            }
        }
        (Kind::K(i), Kind::H) => -p(i),
        (Kind::H, Kind::K(i)) => p(i),
        (Kind::K(i), Kind::K(l)) => -eps_sum(i, l, &j),
        _ => 0.0,
    }
}
