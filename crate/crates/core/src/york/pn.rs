use serde::{Deserialize, Serialize};

use super::rotation_curve::DeltaProfile;
use super::{GravityConstants, YorkError};
use crate::kinematics::Vec3;

/// Non-local York time `K̃(t, x)` with its partial derivatives.
pub trait YorkProfile {
    fn value(&self, t: f64, x: &Vec3) -> f64;
    fn time_derivative(&self, t: f64, x: &Vec3) -> f64;
    fn gradient(&self, t: f64, x: &Vec3) -> Vec3;

    /// `(1/c) dK̃/dt = (1/c)(∂_t K̃ + v·∇K̃)` along a path.
    fn mass_shift(&self, t: f64, x: &Vec3, v: &Vec3, c: f64) -> f64 {
        (self.time_derivative(t, x) + v.dot(&self.gradient(t, x))) / c
    }
}

/// `K̃ ≡ 0`: plain Newtonian gravity.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroProfile;

impl YorkProfile for ZeroProfile {
    fn value(&self, _: f64, _: &Vec3) -> f64 {
        0.0
    }
    fn time_derivative(&self, _: f64, _: &Vec3) -> f64 {
        0.0
    }
    fn gradient(&self, _: f64, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// `K̃ = c δ t`: a spatially uniform shift `δ` of every inertial mass.
#[derive(Clone, Copy, Debug)]
pub struct UniformRateProfile {
    pub delta: f64,
    pub c: f64,
}

impl YorkProfile for UniformRateProfile {
    fn value(&self, t: f64, _: &Vec3) -> f64 {
        self.c * self.delta * t
    }
    fn time_derivative(&self, _: f64, _: &Vec3) -> f64 {
        self.c * self.delta
    }
    fn gradient(&self, _: f64, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// `K̃ = c t δ(|x|)`; on circular orbits about the origin the shift is
/// exactly `δ(r)`.
#[derive(Clone, Debug)]
pub struct RadialRateProfile {
    pub delta: DeltaProfile,
    pub c: f64,
}

impl YorkProfile for RadialRateProfile {
    fn value(&self, t: f64, x: &Vec3) -> f64 {
        self.c * t * self.delta.eval(x.norm())
    }
    fn time_derivative(&self, _: f64, x: &Vec3) -> f64 {
        self.c * self.delta.eval(x.norm())
    }
    fn gradient(&self, t: f64, x: &Vec3) -> Vec3 {
        let r = x.norm();
        if r == 0.0 {
            return Vec3::zeros();
        }
        x * (self.c * t * self.delta.derivative(r) / r)
    }
}

/// Profile from closures `(K̃, ∂_t K̃, ∇K̃)`.
pub struct ClosureProfile<F, D, G> {
    pub value: F,
    pub time_derivative: D,
    pub gradient: G,
}

impl<F, D, G> YorkProfile for ClosureProfile<F, D, G>
where
    F: Fn(f64, &Vec3) -> f64,
    D: Fn(f64, &Vec3) -> f64,
    G: Fn(f64, &Vec3) -> Vec3,
{
    fn value(&self, t: f64, x: &Vec3) -> f64 {
        (self.value)(t, x)
    }
    fn time_derivative(&self, t: f64, x: &Vec3) -> f64 {
        (self.time_derivative)(t, x)
    }
    fn gradient(&self, t: f64, x: &Vec3) -> Vec3 {
        (self.gradient)(t, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PnParticle {
    pub m: f64,
    pub x: Vec3,
    pub v: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PnOptions {
    /// Separations below this abort with a collision error.
    pub collision_radius: f64,
    /// Fixed-point tolerance of the implicit position update.
    pub tol: f64,
    pub max_iter: usize,
    pub record_every: usize,
}

impl Default for PnOptions {
    fn default() -> Self {
        Self {
            collision_radius: 1e-9,
            tol: 1e-12,
            max_iter: 50,
            record_every: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PnTrajectory {
    pub masses: Vec<f64>,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vec3>>,
    pub velocities: Vec<Vec<Vec3>>,
    /// Canonical momenta `m(1 + δ)v`.
    pub momenta: Vec<Vec<Vec3>>,
}

impl PnTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Newtonian `Σ ½mv² − Σ_{i<j} G m_i m_j / r_ij` at sample `k`.
    pub fn newtonian_energy(&self, k: usize, g: f64) -> f64 {
        let (x, v) = (&self.positions[k], &self.velocities[k]);
        let mut e = 0.0;
        for (i, m) in self.masses.iter().enumerate() {
            e += 0.5 * m * v[i].norm_squared();
            for j in i + 1..self.masses.len() {
                e -= g * m * self.masses[j] / (x[i] - x[j]).norm();
            }
        }
        e
    }

    /// `Σ m x × v` at sample `k`.
    pub fn angular_momentum(&self, k: usize) -> Vec3 {
        self.masses
            .iter()
            .zip(self.positions[k].iter().zip(&self.velocities[k]))
            .map(|(m, (x, v))| x.cross(v) * *m)
            .sum()
    }

    pub fn total_momentum(&self, k: usize) -> Vec3 {
        self.momenta[k].iter().sum()
    }
}

fn forces(masses: &[f64], x: &[Vec3], g: f64, t: f64, min_sep: f64) -> Result<Vec<Vec3>, YorkError> {
    let n = masses.len();
    let mut f = vec![Vec3::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = x[i] - x[j];
            let r = d.norm();
            if !(r >= min_sep) {
                return Err(YorkError::Collision { i, j, t, separation: r });
            }
            let fij = d * (-g * masses[i] * masses[j] / (r * r * r));
            f[i] += fij;
            f[j] -= fij;
        }
    }
    Ok(f)
}

/// Velocity from `p = m(1 + a + b·v) v` with `a = ∂_t K̃/c`, `b = ∇K̃/c`.
///
/// `v` is parallel to `p`; `v = λp` with `m(1+a)λ + m(b·p)λ² = 1`, taking the
/// root that tends to `1/(m(1+a))` as `b·p → 0`.
fn velocity(
    profile: &dyn YorkProfile,
    m: f64,
    t: f64,
    x: &Vec3,
    p: &Vec3,
    c: f64,
    i: usize,
) -> Result<Vec3, YorkError> {
    let a = profile.time_derivative(t, x) / c;
    let bp = profile.gradient(t, x).dot(p) / c;
    let lin = m * (1.0 + a);
    let disc = lin * lin + 4.0 * m * bp;
    if !(disc >= 0.0) {
        return Err(YorkError::NonPositiveInertia { i, t });
    }
    let denom = lin + disc.sqrt();
    if !(denom > 0.0) {
        return Err(YorkError::NonPositiveInertia { i, t });
    }
    let lambda = 2.0 / denom;
    if !(1.0 + a + lambda * bp > 0.0) {
        return Err(YorkError::NonPositiveInertia { i, t });
    }
    Ok(p * lambda)
}

/// Integrates `d/dt[m_i(1 + (1/c)dK̃/dt)v_i] = −∇_i Σ_j G m_i m_j / r_ij`.
///
/// Kick-drift-kick on `(x, p)`: the drift uses the implicit midpoint velocity,
/// solved by fixed-point iteration. With `K̃ ≡ 0` this is exactly leapfrog.
pub fn pn_evolve(
    particles: &[PnParticle],
    profile: &dyn YorkProfile,
    k: &GravityConstants,
    t_span: (f64, f64),
    dt: f64,
    opts: &PnOptions,
) -> Result<PnTrajectory, YorkError> {
    k.validate()?;
    if particles.is_empty() {
        return Err(YorkError::InvalidArgument("no particles".into()));
    }
    if particles.iter().any(|p| !(p.m > 0.0)) {
        return Err(YorkError::InvalidArgument("masses must be positive".into()));
    }
    let span = t_span.1 - t_span.0;
    if !(dt > 0.0 && dt.is_finite()) || !(span > 0.0 && span.is_finite()) {
        return Err(YorkError::InvalidArgument(format!("dt = {dt}, span = {span}")));
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let every = opts.record_every.max(1);
    let c = k.c;
    let masses: Vec<f64> = particles.iter().map(|p| p.m).collect();
    let n = masses.len();
    let mut x: Vec<Vec3> = particles.iter().map(|p| p.x).collect();
    let mut t = t_span.0;
    let mut p: Vec<Vec3> = particles
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let shift = profile.mass_shift(t, &q.x, &q.v, c);
            if 1.0 + shift <= 0.0 {
                return Err(YorkError::NonPositiveInertia { i, t });
            }
            Ok(q.v * (q.m * (1.0 + shift)))
        })
        .collect::<Result<_, _>>()?;
    let mut f = forces(&masses, &x, k.g, t, opts.collision_radius)?;

    let mut traj = PnTrajectory {
        masses: masses.clone(),
        ..Default::default()
    };
    let record = |t: f64, x: &[Vec3], p: &[Vec3], traj: &mut PnTrajectory| -> Result<(), YorkError> {
        let v = (0..n)
            .map(|i| velocity(profile, masses[i], t, &x[i], &p[i], c, i))
            .collect::<Result<Vec<_>, _>>()?;
        traj.times.push(t);
        traj.positions.push(x.to_vec());
        traj.velocities.push(v);
        traj.momenta.push(p.to_vec());
        Ok(())
    };
    record(t, &x, &p, &mut traj)?;

    for step in 1..=steps {
        for i in 0..n {
            p[i] += f[i] * (0.5 * dt);
        }
        let tm = t + 0.5 * dt;
        let mut next = x.clone();
        for i in 0..n {
            let mut converged = false;
            for _ in 0..opts.max_iter {
                let mid = (x[i] + next[i]) * 0.5;
                let v = velocity(profile, masses[i], tm, &mid, &p[i], c, i)?;
                let cand = x[i] + v * dt;
                let change = (cand - next[i]).amax();
                next[i] = cand;
                if change <= opts.tol * (1.0 + cand.amax()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(YorkError::Numerics(crate::numerics::NumericsError::NoConvergence {
                    iterations: opts.max_iter,
                    residual: f64::NAN,
                }));
            }
        }
        x = next;
        t = t_span.0 + step as f64 * dt;
        f = forces(&masses, &x, k.g, t, opts.collision_radius)?;
        for i in 0..n {
            p[i] += f[i] * (0.5 * dt);
        }
        if step % every == 0 || step == steps {
            record(t, &x, &p, &mut traj)?;
        }
    }
    Ok(traj)
}

/// First full revolution time of `x_i − x_j`, from the unwrapped angle in the
/// initial orbital plane with linear interpolation between samples.
pub fn orbital_period(traj: &PnTrajectory, i: usize, j: usize) -> Option<f64> {
    let rel = |k: usize| traj.positions[k][i] - traj.positions[k][j];
    let relv = |k: usize| traj.velocities[k][i] - traj.velocities[k][j];
    let r0 = rel(0);
    let normal = r0.cross(&relv(0));
    if normal.norm() == 0.0 {
        return None;
    }
    let e1 = r0.normalize();
    let e2 = normal.normalize().cross(&e1);
    let angle = |k: usize| {
        let r = rel(k);
        r.dot(&e2).atan2(r.dot(&e1))
    };
    let tau = std::f64::consts::TAU;
    let mut total = 0.0;
    let mut prev = angle(0);
    for k in 1..traj.len() {
        let a = angle(k);
        let mut d = a - prev;
        if d > std::f64::consts::PI {
            d -= tau;
        } else if d < -std::f64::consts::PI {
            d += tau;
        }
        let before = total;
        total += d;
        if total.abs() >= tau {
            let frac = (tau - before.abs()) / (total.abs() - before.abs());
            return Some(traj.times[k - 1] + frac * (traj.times[k] - traj.times[k - 1]));
        }
        prev = a;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circular_pair(m1: f64, m2: f64, a: f64, g: f64, delta: f64) -> [PnParticle; 2] {
        let m = m1 + m2;
        let v = (g * m / (a * (1.0 + delta))).sqrt();
        // centre of mass at the origin, at rest
        [
            PnParticle { m: m1, x: Vec3::new(a * m2 / m, 0.0, 0.0), v: Vec3::new(0.0, v * m2 / m, 0.0) },
            PnParticle { m: m2, x: Vec3::new(-a * m1 / m, 0.0, 0.0), v: Vec3::new(0.0, -v * m1 / m, 0.0) },
        ]
    }

    #[test]
    fn kepler_third_law() {
        let k = GravityConstants { g: 1.0, c: 1.0 };
        let (m1, m2, a) = (1.0, 0.3, 2.0);
        let period = 2.0 * PI * (a * a * a / (k.g * (m1 + m2))).sqrt();
        let pair = circular_pair(m1, m2, a, k.g, 0.0);
        let traj = pn_evolve(&pair, &ZeroProfile, &k, (0.0, 1.2 * period), period / 1e5, &PnOptions::default())
            .unwrap();
        let measured = orbital_period(&traj, 0, 1).unwrap();
        assert!((measured - period).abs() <= 1e-6 * period, "{measured} vs {period}");
    }

    #[test]
    fn newtonian_invariants_are_conserved() {
        let k = GravityConstants::default();
        let bodies = [
            PnParticle { m: 1.0, x: Vec3::new(0.5, 0.0, 0.0), v: Vec3::new(0.0, 0.3, 0.02) },
            PnParticle { m: 0.5, x: Vec3::new(-1.0, 0.0, 0.0), v: Vec3::new(0.0, -0.6, 0.0) },
            PnParticle { m: 0.1, x: Vec3::new(0.0, 6.0, 0.5), v: Vec3::new(0.45, 0.0, 0.0) },
        ];
        let energy_error = |dt: f64| {
            let opts = PnOptions { record_every: (0.1 / dt).round() as usize, ..Default::default() };
            let traj = pn_evolve(&bodies, &ZeroProfile, &k, (0.0, 20.0), dt, &opts).unwrap();
            let e0 = traj.newtonian_energy(0, k.g);
            let l0 = traj.angular_momentum(0);
            let mut worst: f64 = 0.0;
            for s in 0..traj.len() {
                worst = worst.max((traj.newtonian_energy(s, k.g) - e0).abs() / e0.abs());
                assert!((traj.angular_momentum(s) - l0).amax() < 1e-12);
            }
            worst
        };
        let (coarse, fine) = (energy_error(2e-3), energy_error(1e-3));
        assert!(fine < 1e-4, "{coarse} {fine}");
        let ratio = coarse / fine;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn uniform_shift_slows_circular_orbit() {
        let delta = 0.25;
        let k = GravityConstants::default();
        let (m1, m2, a) = (1.0, 1.0, 1.5);
        let pair = circular_pair(m1, m2, a, k.g, delta);
        let profile = UniformRateProfile { delta, c: k.c };
        let traj = pn_evolve(&pair, &profile, &k, (0.0, 40.0), 1e-3, &PnOptions { record_every: 50, ..Default::default() })
            .unwrap();
        for s in 0..traj.len() {
            let d = (traj.positions[s][0] - traj.positions[s][1]).norm();
            assert!((d - a).abs() < 1e-6 * a, "separation {d}");
            assert!(traj.total_momentum(s).amax() < 1e-14);
        }
        // v² = G M / (a (1 + δ))
        let v = (traj.velocities.last().unwrap()[0] - traj.velocities.last().unwrap()[1]).norm();
        let expected = k.g * (m1 + m2) / (a * (1.0 + delta));
        assert!((v * v - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn radial_profile_circular_speed() {
        // test body around a heavy centre
        let k = GravityConstants::default();
        let delta = DeltaProfile::new(vec![0.5, 4.0], vec![-0.2, -0.2]).unwrap();
        let big = 1e6;
        let r = 2.0;
        let v = (k.g * big / (r * (1.0 - 0.2))).sqrt();
        let bodies = [
            PnParticle { m: big, x: Vec3::zeros(), v: Vec3::zeros() },
            PnParticle { m: 1e-6, x: Vec3::new(r, 0.0, 0.0), v: Vec3::new(0.0, v, 0.0) },
        ];
        let profile = RadialRateProfile { delta, c: k.c };
        let period = 2.0 * PI * r / v;
        let traj = pn_evolve(&bodies, &profile, &k, (0.0, period), period / 2e4, &PnOptions::default()).unwrap();
        for x in &traj.positions {
            assert!(((x[1] - x[0]).norm() - r).abs() < 1e-6 * r);
        }
    }

    #[test]
    fn isolated_particle_conserves_modified_momentum() {
        let k = GravityConstants { g: 1.0, c: 2.0 };
        let profile = ClosureProfile {
            value: |t: f64, x: &Vec3| (0.3 * t).sin() * 0.1 + 0.05 * x[0] * x[1],
            time_derivative: |t: f64, _: &Vec3| 0.03 * (0.3 * t).cos(),
            gradient: |_: f64, x: &Vec3| Vec3::new(0.05 * x[1], 0.05 * x[0], 0.0),
        };
        let body = [PnParticle { m: 2.0, x: Vec3::new(0.5, 1.0, 0.0), v: Vec3::new(0.3, -0.2, 0.1) }];
        let traj = pn_evolve(&body, &profile, &k, (0.0, 10.0), 1e-3, &PnOptions { record_every: 100, ..Default::default() })
            .unwrap();
        let p0 = traj.momenta[0][0];
        for s in 0..traj.len() {
            let v = traj.velocities[s][0];
            let x = traj.positions[s][0];
            let shift = profile.mass_shift(traj.times[s], &x, &v, k.c);
            let recomputed = v * (2.0 * (1.0 + shift));
            assert!((recomputed - p0).amax() < 1e-12);
        }
    }

    #[test]
    fn collision_is_reported() {
        let k = GravityConstants::default();
        let bodies = [
            PnParticle { m: 1.0, x: Vec3::new(0.5, 0.0, 0.0), v: Vec3::zeros() },
            PnParticle { m: 1.0, x: Vec3::new(-0.5, 0.0, 0.0), v: Vec3::zeros() },
        ];
        let opts = PnOptions { collision_radius: 0.05, ..Default::default() };
        let err = pn_evolve(&bodies, &ZeroProfile, &k, (0.0, 5.0), 1e-3, &opts).unwrap_err();
        assert!(err.to_string().contains("collision"));
        let same = [bodies[0], bodies[0]];
        assert!(pn_evolve(&same, &ZeroProfile, &k, (0.0, 1.0), 1e-3, &opts).is_err());
    }

    #[test]
    fn velocity_solver_inverts_momentum_relation() {
        let profile = ClosureProfile {
            value: |_: f64, _: &Vec3| 0.0,
            time_derivative: |_: f64, _: &Vec3| 0.2,
            gradient: |_: f64, _: &Vec3| Vec3::new(0.1, -0.3, 0.05),
        };
        let v = Vec3::new(0.4, 0.2, -0.7);
        let (m, c) = (1.5, 1.2);
        let p = v * (m * (1.0 + profile.mass_shift(0.0, &Vec3::zeros(), &v, c)));
        let back = velocity(&profile, m, 0.0, &Vec3::zeros(), &p, c, 0).unwrap();
        assert!((back - v).amax() < 1e-14);
    }
}
