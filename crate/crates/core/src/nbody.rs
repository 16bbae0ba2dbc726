//! Particles in the Wigner 3-space of the inertial rest frame: internal
//! Poincaré generators, the two-body collective/relative split, elimination of
//! the internal centre of mass through `𝒦 ≈ 0`, relative-motion evolution with
//! the invariant mass as Hamiltonian, and world-line reconstruction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{Embedding, Vec3, Vec4};
use crate::numerics::{
    implicit_midpoint_step, leapfrog_step, newton_solve, MidpointOptions, NumericsError,
    PhasePoint, SeparableHamiltonian,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NbodyError {
    #[error("empty particle system")]
    Empty,
    #[error("invalid particle: {0}")]
    InvalidParticle(String),
    #[error("invalid time stepping: {0}")]
    InvalidStep(String),
    #[error("boost constraint not solvable at this state ({0})")]
    BoostConstraint(NumericsError),
    #[error("dynamics diverged after tau = {tau}")]
    Diverged { tau: f64 },
    #[error("rest-frame condition violated: |kappa_+| = {0:e}")]
    NotRestFrame(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub m: f64,
    pub eta: Vec3,
    pub kappa: Vec3,
}

impl Particle {
    pub fn new(m: f64, eta: Vec3, kappa: Vec3) -> Result<Self, NbodyError> {
        let p = Self { m, eta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NbodyError> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(NbodyError::InvalidParticle(format!("mass {}", self.m)));
        }
        if !(self.eta.iter().chain(self.kappa.iter()).all(|x| x.is_finite())) {
            return Err(NbodyError::InvalidParticle("non-finite component".into()));
        }
        Ok(())
    }

    /// `E = √(m²c² + κ²)`.
    pub fn energy(&self, c: f64) -> f64 {
        (self.m * self.m * c * c + self.kappa.norm_squared()).sqrt()
    }
}

/// Inter-particle potential `V(|ρ|)` added to the invariant mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum Potential {
    #[default]
    Free,
    /// `V = −α/r`.
    Coulomb { alpha: f64 },
    /// `V = −g e^{−μr}/r`.
    Yukawa { g: f64, mu: f64 },
}


impl Potential {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Coulomb { alpha } => -alpha / r,
            Potential::Yukawa { g, mu } => -g * (-mu * r).exp() / r,
        }
    }

    /// `dV/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Coulomb { alpha } => alpha / (r * r),
            Potential::Yukawa { g, mu } => g * (-mu * r).exp() * (1.0 + mu * r) / (r * r),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }
}

/// `Mc`, `𝒫`, `𝒥 = S`, `𝒦` in the rest frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalGenerators {
    pub mc: f64,
    pub p: Vec3,
    pub j: Vec3,
    pub k: Vec3,
}

impl InternalGenerators {
    /// Order `[Mc, 𝒫¹..³, 𝒥¹..³, 𝒦¹..³]`, matching
    /// [`crate::kinematics::poincare_structure`].
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.mc, self.p[0], self.p[1], self.p[2], self.j[0], self.j[1], self.j[2], self.k[0],
            self.k[1], self.k[2],
        ]
    }
}

/// Internal generators of `particles`.
///
/// With a potential, `V` is summed over pairs and added to `Mc`; `𝒦` keeps its
/// free form, which is exact only without interaction.
pub fn internal_generators(
    particles: &[Particle],
    c: f64,
    interaction: Option<&Potential>,
) -> Result<InternalGenerators, NbodyError> {
    if particles.is_empty() {
        return Err(NbodyError::Empty);
    }
    let mut g = InternalGenerators {
        mc: 0.0,
        p: Vec3::zeros(),
        j: Vec3::zeros(),
        k: Vec3::zeros(),
    };
    for part in particles {
        let e = part.energy(c);
        g.mc += e;
        g.p += part.kappa;
        g.j += part.eta.cross(&part.kappa);
        g.k -= part.eta * e;
    }
    if let Some(v) = interaction {
        for (a, pa) in particles.iter().enumerate() {
            for pb in &particles[a + 1..] {
                g.mc += v.value((pa.eta - pb.eta).norm());
            }
        }
    }
    Ok(g)
}

/// Collective and relative variables of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoBodySplit {
    pub eta_plus: Vec3,
    pub kappa_plus: Vec3,
    pub rho: Vec3,
    pub pi: Vec3,
    pub m1: f64,
    pub m2: f64,
}

impl TwoBodySplit {
    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }
}

pub fn two_body_split(p1: &Particle, p2: &Particle) -> TwoBodySplit {
    let m = p1.m + p2.m;
    let (w1, w2) = (p1.m / m, p2.m / m);
    TwoBodySplit {
        eta_plus: p1.eta * w1 + p2.eta * w2,
        kappa_plus: p1.kappa + p2.kappa,
        rho: p1.eta - p2.eta,
        pi: p1.kappa * w2 - p2.kappa * w1,
        m1: p1.m,
        m2: p2.m,
    }
}

pub fn two_body_merge(s: &TwoBodySplit) -> (Particle, Particle) {
    let m = s.total_mass();
    let (w1, w2) = (s.m1 / m, s.m2 / m);
    (
        Particle {
            m: s.m1,
            eta: s.eta_plus + s.rho * w2,
            kappa: s.kappa_plus * w1 + s.pi,
        },
        Particle {
            m: s.m2,
            eta: s.eta_plus - s.rho * w1,
            kappa: s.kappa_plus * w2 - s.pi,
        },
    )
}

/// Collective position fixed by `𝒦 ≈ 0` for two free particles with `κ₊ = 0`.
pub fn free_eta_plus(pi: &Vec3, rho: &Vec3, m1: f64, m2: f64, c: f64) -> Vec3 {
    let m = m1 + m2;
    let e1 = (m1 * m1 * c * c + pi.norm_squared()).sqrt();
    let e2 = (m2 * m2 * c * c + pi.norm_squared()).sqrt();
    rho * ((m1 / m) * e2 - (m2 / m) * e1) / (e1 + e2)
}

/// Free-form internal boost `𝒦` at `κ₊ = 0` as a function of `η₊`.
pub fn boost_residual(eta_plus: &Vec3, rho: &Vec3, pi: &Vec3, m1: f64, m2: f64, c: f64) -> Vec3 {
    let split = TwoBodySplit {
        eta_plus: *eta_plus,
        kappa_plus: Vec3::zeros(),
        rho: *rho,
        pi: *pi,
        m1,
        m2,
    };
    let (a, b) = two_body_merge(&split);
    -(a.eta * a.energy(c) + b.eta * b.energy(c))
}

/// Invariant mass `Mc(ρ, π)` of a two-body system, used as Hamiltonian for the
/// relative variables.
pub trait MassFunction {
    fn mass(&self, rho: &Vec3, pi: &Vec3) -> f64;

    fn masses(&self) -> (f64, f64);

    fn c(&self) -> f64;

    /// `(∂Mc/∂ρ, ∂Mc/∂π)`; central differences unless overridden.
    fn gradient(&self, rho: &Vec3, pi: &Vec3) -> (Vec3, Vec3) {
        let mut dr = Vec3::zeros();
        let mut dp = Vec3::zeros();
        for i in 0..3 {
            let h = 1e-6 * (1.0 + rho[i].abs());
            let mut a = *rho;
            let mut b = *rho;
            a[i] += h;
            b[i] -= h;
            dr[i] = (self.mass(&a, pi) - self.mass(&b, pi)) / (2.0 * h);
            let h = 1e-6 * (1.0 + pi[i].abs());
            let mut a = *pi;
            let mut b = *pi;
            a[i] += h;
            b[i] -= h;
            dp[i] = (self.mass(rho, &a) - self.mass(rho, &b)) / (2.0 * h);
        }
        (dr, dp)
    }

    /// True when `Mc = T(π) + V(ρ)`, enabling leapfrog.
    fn is_separable(&self) -> bool {
        false
    }
}

/// `Mc = √(m₁²c² + π²) + √(m₂²c² + π²) + V(|ρ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoBodyMass {
    pub m1: f64,
    pub m2: f64,
    pub c: f64,
    #[serde(default)]
    pub potential: Potential,
}

impl MassFunction for TwoBodyMass {
    fn mass(&self, rho: &Vec3, pi: &Vec3) -> f64 {
        let p2 = pi.norm_squared();
        let c2 = self.c * self.c;
        (self.m1 * self.m1 * c2 + p2).sqrt()
            + (self.m2 * self.m2 * c2 + p2).sqrt()
            + self.potential.value(rho.norm())
    }

    fn masses(&self) -> (f64, f64) {
        (self.m1, self.m2)
    }

    fn c(&self) -> f64 {
        self.c
    }

    fn gradient(&self, rho: &Vec3, pi: &Vec3) -> (Vec3, Vec3) {
        let p2 = pi.norm_squared();
        let c2 = self.c * self.c;
        let e1 = (self.m1 * self.m1 * c2 + p2).sqrt();
        let e2 = (self.m2 * self.m2 * c2 + p2).sqrt();
        let r = rho.norm();
        let dr = if self.potential.is_free() || r == 0.0 {
            Vec3::zeros()
        } else {
            rho * (self.potential.derivative(r) / r)
        };
        (dr, pi * (1.0 / e1 + 1.0 / e2))
    }

    fn is_separable(&self) -> bool {
        true
    }
}

/// Closure-backed mass function for momentum-dependent interactions, with
/// its analytic gradient `(∂Mc/∂ρ, ∂Mc/∂π)`.
pub struct GeneralMass<F, G> {
    pub m1: f64,
    pub m2: f64,
    pub c: f64,
    pub mass: F,
    pub gradient: G,
}

impl<F, G> MassFunction for GeneralMass<F, G>
where
    F: Fn(&Vec3, &Vec3) -> f64,
    G: Fn(&Vec3, &Vec3) -> (Vec3, Vec3),
{
    fn mass(&self, rho: &Vec3, pi: &Vec3) -> f64 {
        (self.mass)(rho, pi)
    }

    fn masses(&self) -> (f64, f64) {
        (self.m1, self.m2)
    }

    fn c(&self) -> f64 {
        self.c
    }

    fn gradient(&self, rho: &Vec3, pi: &Vec3) -> (Vec3, Vec3) {
        (self.gradient)(rho, pi)
    }
}

/// Solves `𝒦(η₊; ρ, π) = 0` at `κ₊ = 0` by Newton iteration.
pub fn solve_rest_frame(split: &TwoBodySplit, mass: &dyn MassFunction) -> Result<Vec3, NbodyError> {
    let (m1, m2) = mass.masses();
    let c = mass.c();
    let (rho, pi) = (split.rho, split.pi);
    let scale = (m1 + m2) * c * (1.0 + rho.norm());
    let tol = 1e-13 * scale;
    let residual = |x: &[f64]| {
        let k = boost_residual(&Vec3::new(x[0], x[1], x[2]), &rho, &pi, m1, m2, c);
        vec![k[0], k[1], k[2]]
    };
    let x0 = [split.eta_plus[0], split.eta_plus[1], split.eta_plus[2]];
    let x = newton_solve(residual, &x0, tol).map_err(NbodyError::BoostConstraint)?;
    Ok(Vec3::new(x[0], x[1], x[2]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub rho: Vec3,
    pub pi: Vec3,
    pub eta_plus: Vec3,
    pub particles: [Particle; 2],
    pub mc: f64,
    pub p_norm: f64,
    pub j_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectorySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    /// `max |Mc(τ) − Mc(τ₀)| / Mc(τ₀)`.
    pub fn relative_mass_drift(&self) -> f64 {
        let Some(first) = self.first() else {
            return 0.0;
        };
        self.samples
            .iter()
            .fold(0.0, |m, s| m.max((s.mc - first.mc).abs() / first.mc.abs()))
    }
}

struct RelativeMotion<'a>(&'a dyn MassFunction);

impl SeparableHamiltonian for RelativeMotion<'_> {
    fn velocity(&self, p: &[f64]) -> Vec<f64> {
        // separable: ∂Mc/∂π does not depend on ρ
        let (_, dp) = self.0.gradient(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(p[0], p[1], p[2]));
        vec![dp[0], dp[1], dp[2]]
    }

    fn force(&self, q: &[f64]) -> Vec<f64> {
        let (dr, _) = self.0.gradient(&Vec3::new(q[0], q[1], q[2]), &Vec3::zeros());
        vec![-dr[0], -dr[1], -dr[2]]
    }
}

fn sample(tau: f64, rho: Vec3, pi: Vec3, mass: &dyn MassFunction) -> Result<TrajectorySample, NbodyError> {
    let (m1, m2) = mass.masses();
    let mut split = TwoBodySplit {
        eta_plus: Vec3::zeros(),
        kappa_plus: Vec3::zeros(),
        rho,
        pi,
        m1,
        m2,
    };
    split.eta_plus = solve_rest_frame(&split, mass)?;
    let (a, b) = two_body_merge(&split);
    let gens = internal_generators(&[a, b], mass.c(), None)?;
    Ok(TrajectorySample {
        tau,
        rho,
        pi,
        eta_plus: split.eta_plus,
        particles: [a, b],
        mc: mass.mass(&rho, &pi),
        p_norm: gens.p.norm(),
        j_norm: gens.j.norm(),
    })
}

/// Integrates the relative variables with `Mc(ρ, π)` as Hamiltonian.
///
/// The step is adjusted down so that it divides the span exactly. Separable
/// mass functions use leapfrog, others the implicit midpoint rule. Every
/// `record_every`-th step is stored (the endpoints always are).
pub fn evolve(
    initial: &TwoBodySplit,
    mass: &dyn MassFunction,
    tau_span: (f64, f64),
    dt: f64,
    record_every: usize,
) -> Result<Trajectory, NbodyError> {
    let kp = initial.kappa_plus.norm();
    if kp > 1e-12 * (1.0 + initial.pi.norm()) {
        return Err(NbodyError::NotRestFrame(kp));
    }
    let span = tau_span.1 - tau_span.0;
    if !(dt > 0.0 && dt.is_finite()) || !(span > 0.0 && span.is_finite()) {
        return Err(NbodyError::InvalidStep(format!("dt = {dt}, span = {span}")));
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let every = record_every.max(1);

    let mut state = PhasePoint::new(
        initial.rho.iter().copied().collect(),
        initial.pi.iter().copied().collect(),
    )
    .expect("three plus three");
    let mut traj = Trajectory::default();
    traj.samples.push(sample(tau_span.0, initial.rho, initial.pi, mass)?);
    let motion = RelativeMotion(mass);
    for n in 1..=steps {
        let tau = tau_span.0 + n as f64 * dt;
        let prev_tau = tau - dt;
        let next = if mass.is_separable() {
            leapfrog_step(&state, &motion, dt)
        } else {
            implicit_midpoint_step(
                &state,
                |q, p| {
                    let (dr, dp) =
                        mass.gradient(&Vec3::new(q[0], q[1], q[2]), &Vec3::new(p[0], p[1], p[2]));
                    (dr.iter().copied().collect(), dp.iter().copied().collect())
                },
                dt,
                MidpointOptions::default(),
            )
        };
        state = match next {
            Ok(s) if s.is_finite() => s,
            _ => return Err(NbodyError::Diverged { tau: prev_tau }),
        };
        if n % every == 0 || n == steps {
            let rho = Vec3::new(state.q()[0], state.q()[1], state.q()[2]);
            let pi = Vec3::new(state.p()[0], state.p()[1], state.p()[2]);
            let s = sample(tau, rho, pi, mass)?;
            if !s.mc.is_finite() {
                return Err(NbodyError::Diverged { tau: prev_tau });
            }
            traj.samples.push(s);
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorldLine {
    pub particle: usize,
    /// `(τ, x^μ(τ))`.
    pub points: Vec<(f64, Vec4)>,
}

/// `x_i^μ(τ) = z^μ(τ, η_i(τ))` for each particle of the trajectory.
pub fn reconstruct_worldlines(traj: &Trajectory, e: &Embedding) -> Vec<WorldLine> {
    (0..2)
        .map(|i| WorldLine {
            particle: i,
            points: traj
                .samples
                .iter()
                .map(|s| (s.tau, e.embed(s.tau, &s.particles[i].eta)))
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{poincare_structure, Signature};
    use crate::numerics::{
        bracket_from_gradients, compensated_sum, fd_gradient, map_jacobian_fd, symplectic_defect,
        DEFAULT_FD_STEP,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        v(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    }

    #[test]
    fn single_particle_at_rest() {
        let eta = v(1.0, 2.0, -0.5);
        let g = internal_generators(&[Particle::new(2.0, eta, Vec3::zeros()).unwrap()], 3.0, None)
            .unwrap();
        assert_eq!(g.mc, 6.0);
        assert_eq!(g.p, Vec3::zeros());
        assert_eq!(g.j, Vec3::zeros());
        assert_eq!(g.k, -eta * 6.0);
    }

    #[test]
    fn back_to_back_pair_has_zero_momentum() {
        let k = v(0.3, -1.7, 2.2);
        let a = Particle::new(1.0, v(1.0, 0.0, 0.0), k).unwrap();
        let b = Particle::new(1.0, v(-1.0, 0.5, 0.0), -k).unwrap();
        assert_eq!(internal_generators(&[a, b], 1.0, None).unwrap().p, Vec3::zeros());
    }

    #[test]
    fn empty_system_rejected() {
        assert_eq!(internal_generators(&[], 1.0, None), Err(NbodyError::Empty));
        assert!(Particle::new(0.0, Vec3::zeros(), Vec3::zeros()).is_err());
    }

    #[test]
    fn three_body_mass_matches_compensated_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let ps: Vec<Particle> = (0..3)
                .map(|_| {
                    Particle::new(rng.random_range(0.1..5.0), random_vec(&mut rng, 3.0), random_vec(&mut rng, 3.0))
                        .unwrap()
                })
                .collect();
            let c = 1.3;
            let oracle = compensated_sum(ps.iter().map(|p| {
                (p.m * p.m * c * c + p.kappa[0].powi(2) + p.kappa[1].powi(2) + p.kappa[2].powi(2)).sqrt()
            }));
            let g = internal_generators(&ps, c, None).unwrap();
            assert!((g.mc - oracle).abs() <= 1e-14 * oracle);
        }
    }

    #[test]
    fn potential_adds_to_mass() {
        let a = Particle::new(1.0, v(0.0, 0.0, 0.0), Vec3::zeros()).unwrap();
        let b = Particle::new(1.0, v(2.0, 0.0, 0.0), Vec3::zeros()).unwrap();
        let g = internal_generators(&[a, b], 1.0, Some(&Potential::Coulomb { alpha: 0.5 })).unwrap();
        assert!((g.mc - (2.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn potential_derivatives_match_fd() {
        for pot in [Potential::Coulomb { alpha: 0.7 }, Potential::Yukawa { g: 1.3, mu: 0.4 }] {
            for r in [0.3, 1.0, 4.0] {
                let h = 1e-6;
                let fd = (pot.value(r + h) - pot.value(r - h)) / (2.0 * h);
                assert!((fd - pot.derivative(r)).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    /// Internal generators on the canonical phase space `(η₁..η₃; κ₁..κ₃)`.
    fn internal_at(x: &PhasePoint, masses: &[f64], c: f64) -> [f64; 10] {
        let ps: Vec<Particle> = masses
            .iter()
            .enumerate()
            .map(|(i, &m)| Particle {
                m,
                eta: v(x.q()[3 * i], x.q()[3 * i + 1], x.q()[3 * i + 2]),
                kappa: v(x.p()[3 * i], x.p()[3 * i + 1], x.p()[3 * i + 2]),
            })
            .collect();
        internal_generators(&ps, c, None).unwrap().as_array()
    }

    #[test]
    fn internal_algebra_closes_for_three_particles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let masses = [1.0, 0.5, 2.0];
        for _ in 0..5 {
            let q: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = PhasePoint::new(q, p).unwrap();
            let grads: Vec<_> = (0..10)
                .map(|a| fd_gradient(|s: &PhasePoint| internal_at(s, &masses, 1.0)[a], &x, DEFAULT_FD_STEP))
                .collect();
            let g = internal_at(&x, &masses, 1.0);
            for a in 0..10 {
                for b in 0..10 {
                    let fd = bracket_from_gradients(&grads[a], &grads[b]);
                    assert!((fd - poincare_structure(a, b, &g)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn split_special_cases() {
        let a = Particle::new(1.0, v(1.0, 2.0, 3.0), v(0.5, 0.0, 0.0)).unwrap();
        let b = Particle::new(3.0, v(1.0, 2.0, 3.0), v(0.1, 0.0, 0.0)).unwrap();
        assert_eq!(two_body_split(&a, &b).rho, Vec3::zeros());

        let k = v(0.2, -0.4, 0.9);
        let a = Particle::new(2.0, v(0.0, 1.0, 0.0), k).unwrap();
        let b = Particle::new(2.0, v(1.0, 0.0, 0.0), -k).unwrap();
        let s = two_body_split(&a, &b);
        assert_eq!(s.kappa_plus, Vec3::zeros());
        assert_eq!(s.pi, k);
    }

    proptest! {
        #[test]
        fn merge_inverts_split(
            m1 in 0.1f64..10.0, m2 in 0.1f64..10.0,
            e1 in prop::array::uniform3(-5.0f64..5.0), e2 in prop::array::uniform3(-5.0f64..5.0),
            k1 in prop::array::uniform3(-5.0f64..5.0), k2 in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let a = Particle { m: m1, eta: Vec3::from(e1), kappa: Vec3::from(k1) };
            let b = Particle { m: m2, eta: Vec3::from(e2), kappa: Vec3::from(k2) };
            let (a2, b2) = two_body_merge(&two_body_split(&a, &b));
            prop_assert!((a2.eta - a.eta).amax() < 1e-13);
            prop_assert!((b2.eta - b.eta).amax() < 1e-13);
            prop_assert!((a2.kappa - a.kappa).amax() < 1e-13);
            prop_assert!((b2.kappa - b.kappa).amax() < 1e-13);
        }
    }

    /// Flat `(η₁, η₂; κ₁, κ₂)` → `(η₊, ρ; κ₊, π)`.
    pub(crate) fn split_flat(x: &[f64], m1: f64, m2: f64) -> Vec<f64> {
        let a = Particle { m: m1, eta: v(x[0], x[1], x[2]), kappa: v(x[6], x[7], x[8]) };
        let b = Particle { m: m2, eta: v(x[3], x[4], x[5]), kappa: v(x[9], x[10], x[11]) };
        let s = two_body_split(&a, &b);
        [s.eta_plus, s.rho, s.kappa_plus, s.pi]
            .iter()
            .flat_map(|w| w.iter().copied().collect::<Vec<_>>())
            .collect()
    }

    #[test]
    fn split_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (m1, m2) = (rng.random_range(0.1..4.0), rng.random_range(0.1..4.0));
            let jac = map_jacobian_fd(|y| split_flat(y, m1, m2), &x, DEFAULT_FD_STEP);
            assert!(symplectic_defect(&jac) < 1e-10);
        }
    }

    #[test]
    fn free_eta_plus_vanishes_for_equal_masses_and_at_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pi = random_vec(&mut rng, 4.0);
            let rho = random_vec(&mut rng, 4.0);
            let m = rng.random_range(0.1..3.0);
            assert_eq!(free_eta_plus(&pi, &rho, m, m, 1.0), Vec3::zeros());
            let eta = free_eta_plus(&Vec3::zeros(), &rho, m, 2.0 * m + 0.1, 1.0);
            assert!(eta.amax() <= 1e-15 * rho.amax());
        }
    }

    #[test]
    fn free_eta_plus_satisfies_boost_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let pi = random_vec(&mut rng, 3.0);
            let rho = random_vec(&mut rng, 3.0);
            let (m1, m2, c) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0), rng.random_range(0.5..3.0));
            let eta = free_eta_plus(&pi, &rho, m1, m2, c);
            assert!(boost_residual(&eta, &rho, &pi, m1, m2, c).norm() <= 1e-9);
        }
    }

    #[test]
    fn solve_rest_frame_reproduces_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let mass = TwoBodyMass {
                m1: rng.random_range(0.1..3.0),
                m2: rng.random_range(0.1..3.0),
                c: 1.0,
                potential: Potential::Free,
            };
            let split = TwoBodySplit {
                eta_plus: random_vec(&mut rng, 1.0),
                kappa_plus: Vec3::zeros(),
                rho: random_vec(&mut rng, 3.0),
                pi: random_vec(&mut rng, 3.0),
                m1: mass.m1,
                m2: mass.m2,
            };
            let solved = solve_rest_frame(&split, &mass).unwrap();
            let closed = free_eta_plus(&split.pi, &split.rho, mass.m1, mass.m2, 1.0);
            assert!((solved - closed).amax() <= 1e-9);
        }
    }

    #[test]
    fn evolve_rejects_moving_frame_and_bad_steps() {
        let mass = TwoBodyMass { m1: 1.0, m2: 1.0, c: 1.0, potential: Potential::Free };
        let mut s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: v(0.1, 0.0, 0.0),
            rho: v(1.0, 0.0, 0.0),
            pi: v(0.0, 0.2, 0.0),
            m1: 1.0,
            m2: 1.0,
        };
        assert!(matches!(evolve(&s, &mass, (0.0, 1.0), 0.1, 1), Err(NbodyError::NotRestFrame(_))));
        s.kappa_plus = Vec3::zeros();
        assert!(matches!(evolve(&s, &mass, (0.0, 1.0), 0.0, 1), Err(NbodyError::InvalidStep(_))));
    }

    #[test]
    fn free_evolution_is_linear() {
        let mass = TwoBodyMass { m1: 1.0, m2: 2.5, c: 1.0, potential: Potential::Free };
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(1.0, -0.5, 0.2),
            pi: v(0.3, 0.6, -0.1),
            m1: 1.0,
            m2: 2.5,
        };
        let traj = evolve(&s, &mass, (0.0, 10.0), 0.01, 10).unwrap();
        let (_, vel) = mass.gradient(&s.rho, &s.pi);
        for smp in &traj.samples {
            assert_eq!(smp.pi, s.pi);
            assert!((smp.rho - (s.rho + vel * smp.tau)).amax() < 1e-12);
            assert!(smp.p_norm <= 1e-12);
        }
    }

    #[test]
    fn coulomb_orbit_conserves_mass_and_spin() {
        let mass = TwoBodyMass {
            m1: 1.0,
            m2: 1.0,
            c: 1.0,
            potential: Potential::Coulomb { alpha: 0.05 },
        };
        // near-circular: π²/(μ r) ≈ α/r² with μ ≈ 1/2
        let r: f64 = 1.0;
        let p = (0.05 * 0.5 / r).sqrt();
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(r, 0.0, 0.0),
            pi: v(0.0, p, 0.0),
            m1: 1.0,
            m2: 1.0,
        };
        // 10⁴ steps, about ten revolutions
        let traj = evolve(&s, &mass, (0.0, 200.0), 0.02, 100).unwrap();
        assert!(traj.relative_mass_drift() <= 1e-8, "drift {}", traj.relative_mass_drift());
        let j0 = traj.samples[0].j_norm;
        for smp in &traj.samples {
            assert!(smp.rho.norm() < 2.0 && smp.rho.norm() > 0.5);
            assert!((smp.j_norm - j0).abs() < 1e-12);
            assert!(smp.p_norm <= 1e-12);
        }
    }

    #[test]
    fn mass_drift_is_second_order() {
        let mass = TwoBodyMass {
            m1: 1.0,
            m2: 0.5,
            c: 1.0,
            potential: Potential::Coulomb { alpha: 0.1 },
        };
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(1.0, 0.0, 0.0),
            pi: v(0.0, 0.2, 0.05),
            m1: 1.0,
            m2: 0.5,
        };
        let d1 = evolve(&s, &mass, (0.0, 200.0), 0.2, 1).unwrap().relative_mass_drift();
        let d2 = evolve(&s, &mass, (0.0, 200.0), 0.1, 1).unwrap().relative_mass_drift();
        let ratio = d1 / d2;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn implicit_midpoint_path_matches_leapfrog() {
        let sep = TwoBodyMass {
            m1: 1.0,
            m2: 2.0,
            c: 1.0,
            potential: Potential::Yukawa { g: 0.3, mu: 0.5 },
        };
        let general = GeneralMass {
            m1: 1.0,
            m2: 2.0,
            c: 1.0,
            mass: |r: &Vec3, p: &Vec3| sep.mass(r, p),
            gradient: |r: &Vec3, p: &Vec3| sep.gradient(r, p),
        };
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(1.5, 0.0, 0.0),
            pi: v(0.0, 0.33, 0.0),
            m1: 1.0,
            m2: 2.0,
        };
        // both schemes are second order: their gap shrinks fourfold per halving
        let gap = |dt: f64| {
            let a = evolve(&s, &sep, (0.0, 20.0), dt, 1000).unwrap();
            let b = evolve(&s, &general, (0.0, 20.0), dt, 1000).unwrap();
            assert!(b.relative_mass_drift() < 1e-5);
            (a.last().unwrap().rho - b.last().unwrap().rho).amax()
        };
        let ratio = gap(0.02) / gap(0.01);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn momentum_dependent_mass_is_conserved_by_midpoint() {
        // Mc = E₁ + E₂ − (α/r)(1 + β π²)
        let (alpha, beta) = (0.05, 0.5);
        let free = TwoBodyMass { m1: 1.0, m2: 1.5, c: 1.0, potential: Potential::Free };
        let mass = GeneralMass {
            m1: 1.0,
            m2: 1.5,
            c: 1.0,
            mass: move |r: &Vec3, p: &Vec3| {
                free.mass(r, p) - alpha / r.norm() * (1.0 + beta * p.norm_squared())
            },
            gradient: move |r: &Vec3, p: &Vec3| {
                let (_, dp) = free.gradient(r, p);
                let rn = r.norm();
                let w = 1.0 + beta * p.norm_squared();
                (r * (alpha * w / rn.powi(3)), dp - p * (2.0 * alpha * beta / rn))
            },
        };
        assert!(!mass.is_separable());
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(1.0, 0.0, 0.0),
            pi: v(0.0, 0.2, 0.0),
            m1: 1.0,
            m2: 1.5,
        };
        let traj = evolve(&s, &mass, (0.0, 100.0), 0.02, 50).unwrap();
        assert!(traj.relative_mass_drift() < 1e-7, "{}", traj.relative_mass_drift());
        let j0 = traj.samples[0].j_norm;
        assert!(traj.samples.iter().all(|x| (x.j_norm - j0).abs() < 1e-10));
    }

    #[test]
    fn worldline_of_particle_at_origin_is_fokker_pryce() {
        let e = Embedding::new(Vec4::new(0.0, 1.0, 0.0, 0.0), v(0.3, 0.0, -0.2));
        let traj = Trajectory {
            samples: (0..5)
                .map(|i| {
                    let tau = i as f64;
                    let p = Particle { m: 1.0, eta: Vec3::zeros(), kappa: Vec3::zeros() };
                    TrajectorySample {
                        tau,
                        rho: Vec3::zeros(),
                        pi: Vec3::zeros(),
                        eta_plus: Vec3::zeros(),
                        particles: [p, p],
                        mc: 2.0,
                        p_norm: 0.0,
                        j_norm: 0.0,
                    }
                })
                .collect(),
        };
        for wl in reconstruct_worldlines(&traj, &e) {
            for (tau, x) in wl.points {
                assert!((x - e.fokker_pryce(tau)).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn free_worldlines_have_velocity_kappa_over_energy() {
        let mass = TwoBodyMass { m1: 1.0, m2: 3.0, c: 1.0, potential: Potential::Free };
        let s = TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: v(0.5, 0.2, -1.0),
            pi: v(0.8, -0.3, 0.4),
            m1: 1.0,
            m2: 3.0,
        };
        let traj = evolve(&s, &mass, (0.0, 4.0), 0.01, 50).unwrap();
        let e = Embedding::new(Vec4::zeros(), Vec3::zeros());
        let wls = reconstruct_worldlines(&traj, &e);
        let p0 = traj.samples[0].particles;
        for (i, wl) in wls.iter().enumerate() {
            let vel = p0[i].kappa / p0[i].energy(1.0);
            let (t0, x0) = wl.points[0];
            let (t1, x1) = *wl.points.last().unwrap();
            let dx = (x1 - x0) / (t1 - t0);
            assert!((dx[0] - 1.0).abs() < 1e-12);
            assert!((Vec3::new(dx[1], dx[2], dx[3]) - vel).amax() < 1e-10);
        }
        // equal-τ separations are space-like
        for k in 0..wls[0].points.len() {
            let d = wls[0].points[k].1 - wls[1].points[k].1;
            assert!(Signature::ParticlePhysics.dot(&d, &d) < 0.0);
        }
    }
}
