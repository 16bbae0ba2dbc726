use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::charge::ChargeDensity;
use super::GaugeError;
use crate::numerics::{Grid3, ScalarField, Spectral, VectorField3};

/// Tolerance on `max |∂·A_⊥|` accepted by [`recompose`].
const TRANSVERSE_TOL: f64 = 1e-8;

/// Canonical Maxwell data `(A_τ, A; π^τ, π)` with `π^r = E^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub a_tau: ScalarField,
    pub a: VectorField3,
    pub pi_tau: ScalarField,
    pub pi: VectorField3,
}

impl EmState {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            a_tau: ScalarField::zeros(grid),
            a: VectorField3::zeros(grid),
            pi_tau: ScalarField::zeros(grid),
            pi: VectorField3::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.a.grid()
    }

    pub fn validate(&self) -> Result<(), GaugeError> {
        let g = self.grid();
        if self.a_tau.grid() != g || self.pi_tau.grid() != g || self.pi.grid() != g {
            return Err(GaugeError::GridMismatch);
        }
        Ok(())
    }
}

/// Variables adapted to the first-class constraints.
///
/// `A = Ā + ∇η + A_⊥` and `π = π̄ + π_⊥ − ∇(1/Δ)Γ`, where the torus means
/// `Ā`, `π̄` are kept apart because `1/Δ` does not act on them.
#[derive(Clone, Debug, PartialEq)]
pub struct EmDecomposition {
    pub a_tau: ScalarField,
    pub eta: ScalarField,
    pub a_perp: VectorField3,
    pub pi_tau: ScalarField,
    pub gamma: ScalarField,
    pub pi_perp: VectorField3,
    pub a_mean: [f64; 3],
    pub pi_mean: [f64; 3],
}

impl EmDecomposition {
    pub fn grid(&self) -> Grid3 {
        self.a_perp.grid()
    }

    /// Radiation-type data: only the transverse pair is nonzero.
    pub fn transverse(a_perp: VectorField3, pi_perp: VectorField3) -> Self {
        let g = a_perp.grid();
        Self {
            a_tau: ScalarField::zeros(g),
            eta: ScalarField::zeros(g),
            a_perp,
            pi_tau: ScalarField::zeros(g),
            gamma: ScalarField::zeros(g),
            pi_perp,
            a_mean: [0.0; 3],
            pi_mean: [0.0; 3],
        }
    }

    /// `max(|∂·A_⊥|, |∂·π_⊥|)`.
    pub fn transversality_defect(&self) -> f64 {
        let spec = Spectral::new(self.grid());
        spec.divergence(&self.a_perp)
            .max_abs()
            .max(spec.divergence(&self.pi_perp).max_abs())
    }

    pub fn has_mean_modes(&self) -> bool {
        self.a_mean.iter().chain(self.pi_mean.iter()).any(|&x| x != 0.0)
    }
}

/// Longitudinal potential `−(1/Δ)∂·v` and transverse remainder of the
/// mean-free part of `v`, using one forward transform per component.
fn split_vector(spec: &Spectral, v: &VectorField3) -> (ScalarField, VectorField3, ScalarField) {
    let n = spec.grid().len();
    let s: [Vec<Complex64>; 3] = std::array::from_fn(|r| spec.forward(v.component(r)));
    let mut pot = vec![Complex64::new(0.0, 0.0); n];
    let mut div = vec![Complex64::new(0.0, 0.0); n];
    let mut perp: [Vec<Complex64>; 3] = std::array::from_fn(|r| s[r].clone());
    for idx in 0..n {
        let k = spec.wavevector(idx);
        let k2 = spec.laplacian_symbol(idx);
        let kdot = k[0] * s[0][idx] + k[1] * s[1][idx] + k[2] * s[2][idx];
        div[idx] = Complex64::new(0.0, 1.0) * kdot;
        if idx == 0 {
            for comp in perp.iter_mut() {
                comp[0] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        if k2 == 0.0 {
            // Nyquist-corner modes are divergence-free
            continue;
        }
        pot[idx] = -div[idx] / k2;
        for r in 0..3 {
            perp[r][idx] -= kdot * (k[r] / k2);
        }
    }
    let [p0, p1, p2] = perp;
    let perp = VectorField3::from_components([
        spec.inverse_real(p0),
        spec.inverse_real(p1),
        spec.inverse_real(p2),
    ])
    .expect("same grid");
    (spec.inverse_real(pot), perp, spec.inverse_real(div))
}

pub fn decompose(s: &EmState) -> Result<EmDecomposition, GaugeError> {
    s.validate()?;
    let spec = Spectral::new(s.grid());
    let (eta, a_perp, _) = split_vector(&spec, &s.a);
    let (_, pi_perp, gamma) = split_vector(&spec, &s.pi);
    Ok(EmDecomposition {
        a_tau: s.a_tau.clone(),
        eta,
        a_perp,
        pi_tau: s.pi_tau.clone(),
        gamma,
        pi_perp,
        a_mean: s.a.mean(),
        pi_mean: s.pi.mean(),
    })
}

fn check_grids(d: &EmDecomposition) -> Result<(), GaugeError> {
    let g = d.grid();
    let ok = [&d.a_tau, &d.eta, &d.pi_tau, &d.gamma].iter().all(|f| f.grid() == g)
        && d.pi_perp.grid() == g;
    if ok {
        Ok(())
    } else {
        Err(GaugeError::GridMismatch)
    }
}

/// Inverse of [`decompose`]. Rejects transverse parts with `|∂·| > 1e-8`.
pub fn recompose(d: &EmDecomposition) -> Result<EmState, GaugeError> {
    check_grids(d)?;
    let spec = Spectral::new(d.grid());
    let divergence = spec
        .divergence(&d.a_perp)
        .max_abs()
        .max(spec.divergence(&d.pi_perp).max_abs());
    if divergence > TRANSVERSE_TOL {
        return Err(GaugeError::InvalidDecomposition { divergence });
    }
    recompose_unchecked(&spec, d)
}

fn recompose_unchecked(spec: &Spectral, d: &EmDecomposition) -> Result<EmState, GaugeError> {
    let a = spec.gradient(&d.eta).add(&d.a_perp).offset(d.a_mean);
    let pi_long = spec.gradient(&spec.inverse_laplacian(&d.gamma)?).scale(-1.0);
    let pi = d.pi_perp.add(&pi_long).offset(d.pi_mean);
    Ok(EmState {
        a_tau: d.a_tau.clone(),
        a,
        pi_tau: d.pi_tau.clone(),
        pi,
    })
}

/// Full electric field `π` of a decomposition.
pub(crate) fn electric_field(spec: &Spectral, d: &EmDecomposition) -> Result<VectorField3, GaugeError> {
    Ok(recompose_unchecked(spec, d)?.pi)
}

/// `B = ∇ × A`.
pub fn b_field(d: &EmDecomposition) -> VectorField3 {
    let spec = Spectral::new(d.grid());
    spec.curl(&spec.gradient(&d.eta).add(&d.a_perp))
}

/// `H_c = ½∫(π_⊥² + B²)` with `B = ∇ × A_⊥`.
pub fn hamiltonian(d: &EmDecomposition) -> f64 {
    let spec = Spectral::new(d.grid());
    0.5 * (d.pi_perp.norm_sq_integral() + spec.curl(&d.a_perp).norm_sq_integral())
}

/// `Γ − ρ`.
pub fn gauss_residual(d: &EmDecomposition, rho: &ChargeDensity) -> Result<ScalarField, GaugeError> {
    if rho.field().grid() != d.grid() {
        return Err(GaugeError::GridMismatch);
    }
    Ok(d.gamma.zip_map(rho.field(), |g, r| g - r))
}

/// Advances the gauge pair: `∂_τ A_τ = λ_τ`, `∂_τ η = A_τ`, exactly for
/// `λ_τ` constant over the step.
pub fn gauge_step(
    d: &EmDecomposition,
    lambda_tau: &ScalarField,
    dt: f64,
) -> Result<EmDecomposition, GaugeError> {
    if lambda_tau.grid() != d.grid() {
        return Err(GaugeError::GridMismatch);
    }
    let mut out = d.clone();
    let half = 0.5 * dt * dt;
    for ((eta, at), l) in out
        .eta
        .data_mut()
        .iter_mut()
        .zip(d.a_tau.data())
        .zip(lambda_tau.data())
    {
        *eta += dt * at + half * l;
    }
    for (at, l) in out.a_tau.data_mut().iter_mut().zip(lambda_tau.data()) {
        *at += dt * l;
    }
    Ok(out)
}

/// Radiation gauge `η = 0`, `A_τ = 0`; preserving it forces `λ_τ = 0`,
/// which is returned alongside.
pub fn radiation_gauge(d: &EmDecomposition) -> (EmDecomposition, ScalarField) {
    let g = d.grid();
    let mut out = d.clone();
    out.eta = ScalarField::zeros(g);
    out.a_tau = ScalarField::zeros(g);
    (out, ScalarField::zeros(g))
}

/// Largest step accepted by [`evolve_free`]: `0.5 h/√3`.
pub fn cfl_limit(grid: Grid3) -> f64 {
    0.5 * grid.spacing() / 3f64.sqrt()
}

/// Spectral leapfrog for `∂_τ A_⊥ = −π_⊥`, `∂_τ π_⊥ = ΔA_⊥`.
///
/// The transverse pair is held in Fourier space; each step is
/// kick-drift-kick applied mode by mode. The gauge sector is frozen.
pub struct FreeEvolver {
    spec: Spectral,
    base: EmDecomposition,
    a: [Vec<Complex64>; 3],
    p: [Vec<Complex64>; 3],
    k2: Vec<f64>,
    dt: f64,
    tau: f64,
}

impl FreeEvolver {
    pub fn new(d: &EmDecomposition, tau0: f64, dt: f64) -> Result<Self, GaugeError> {
        check_grids(d)?;
        let g = d.grid();
        let limit = cfl_limit(g);
        if !(dt > 0.0 && dt <= limit) {
            return Err(GaugeError::Cfl { dt, limit });
        }
        let spec = Spectral::new(g);
        let a = std::array::from_fn(|r| spec.forward(d.a_perp.component(r)));
        let p = std::array::from_fn(|r| spec.forward(d.pi_perp.component(r)));
        let k2 = (0..g.len()).map(|idx| spec.laplacian_symbol(idx)).collect();
        Ok(Self {
            spec,
            base: d.clone(),
            a,
            p,
            k2,
            dt,
            tau: tau0,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&mut self) {
        let dt = self.dt;
        let half = 0.5 * dt;
        let k2 = &self.k2;
        for r in 0..3 {
            self.a[r]
                .par_iter_mut()
                .zip(self.p[r].par_iter_mut())
                .zip(k2.par_iter())
                .for_each(|((a, p), &k2)| {
                    *p += *a * (half * k2);
                    *a -= *p * dt;
                    *p += *a * (half * k2);
                });
        }
        self.tau += dt;
    }

    pub fn state(&self) -> EmDecomposition {
        let mut d = self.base.clone();
        let comps = |src: &[Vec<Complex64>; 3]| {
            VectorField3::from_components(std::array::from_fn(|r| {
                self.spec.inverse_real(src[r].clone())
            }))
            .expect("same grid")
        };
        d.a_perp = comps(&self.a);
        d.pi_perp = comps(&self.p);
        d
    }

    /// `H_c` from the spectra by Parseval.
    pub fn energy(&self) -> f64 {
        let g = self.spec.grid();
        let norm = g.cell_volume() / g.len() as f64;
        let mut e = 0.0;
        for r in 0..3 {
            for idx in 0..g.len() {
                e += self.p[r][idx].norm_sqr() + self.k2[idx] * self.a[r][idx].norm_sqr();
            }
        }
        0.5 * e * norm
    }
}

fn step_count(span: (f64, f64), dt: f64) -> Result<usize, GaugeError> {
    let len = span.1 - span.0;
    if !(len >= 0.0 && len.is_finite()) {
        return Err(GaugeError::InvalidArgument(format!("tau span {span:?}")));
    }
    Ok((len / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Evolves the transverse sector over `τ_span`; the step is reduced so that
/// it divides the span. Calls `observe` on the initial state and every
/// `record_every`-th step (and the last).
pub fn evolve_free_with<F>(
    d: &EmDecomposition,
    tau_span: (f64, f64),
    dt: f64,
    record_every: usize,
    mut observe: F,
) -> Result<(), GaugeError>
where
    F: FnMut(f64, &FreeEvolver),
{
    let limit = cfl_limit(d.grid());
    if !(dt > 0.0 && dt <= limit) {
        return Err(GaugeError::Cfl { dt, limit });
    }
    let steps = step_count(tau_span, dt)?;
    let dt = if steps == 0 { dt } else { (tau_span.1 - tau_span.0) / steps as f64 };
    let mut ev = FreeEvolver::new(d, tau_span.0, dt)?;
    let every = record_every.max(1);
    observe(ev.tau(), &ev);
    for n in 1..=steps {
        ev.step();
        if n % every == 0 || n == steps {
            observe(ev.tau(), &ev);
        }
    }
    Ok(())
}

/// [`evolve_free_with`] collecting full decompositions.
pub fn evolve_free(
    d: &EmDecomposition,
    tau_span: (f64, f64),
    dt: f64,
    record_every: usize,
) -> Result<Vec<(f64, EmDecomposition)>, GaugeError> {
    let mut out = Vec::new();
    evolve_free_with(d, tau_span, dt, record_every, |tau, ev| out.push((tau, ev.state())))?;
    Ok(out)
}

/// `amplitude · ê cos(k·σ + phase)` with `k = 2π m / L` and `ê` the part of
/// `polarization` orthogonal to the lattice derivative wave vector.
pub fn transverse_mode(
    grid: Grid3,
    m: [i64; 3],
    polarization: [f64; 3],
    amplitude: f64,
    phase: f64,
) -> Result<VectorField3, GaugeError> {
    let n = grid.n() as i64;
    if m.iter().any(|&x| 2 * x.abs() >= n) || m == [0, 0, 0] {
        return Err(GaugeError::InvalidArgument(format!(
            "mode {m:?} must be nonzero and below Nyquist for n = {n}"
        )));
    }
    let dk = 2.0 * std::f64::consts::PI / grid.length();
    let k = [m[0] as f64 * dk, m[1] as f64 * dk, m[2] as f64 * dk];
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let kp: f64 = (0..3).map(|r| k[r] * polarization[r]).sum();
    let e: [f64; 3] = std::array::from_fn(|r| polarization[r] - kp * k[r] / k2);
    let en = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    if en < 1e-12 {
        return Err(GaugeError::InvalidArgument("polarization parallel to k".into()));
    }
    Ok(VectorField3::from_fn(grid, |x| {
        let c = amplitude * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase).cos() / en;
        [c * e[0], c * e[1], c * e[2]]
    }))
}

/// Seeded random transverse field with modes `|m_r| ≤ max_mode`, unit
/// variance per mode amplitude times `amplitude`.
pub fn random_transverse_field(
    grid: Grid3,
    seed: u64,
    max_mode: i64,
    amplitude: f64,
) -> Result<VectorField3, GaugeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = VectorField3::from_fn(grid, |_| std::array::from_fn(|_| 0.0));
    let mut acc = v;
    let limit = max_mode.min(grid.n() as i64 / 2 - 1);
    for i in -limit..=limit {
        for j in -limit..=limit {
            for k in 0..=limit {
                if k == 0 && (j < 0 || (j == 0 && i <= 0)) {
                    continue;
                }
                let pol: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let amp = amplitude * rng.random_range(0.0..1.0);
                if let Ok(mode) = transverse_mode(grid, [i, j, k], pol, amp, phase) {
                    acc = acc.add(&mode);
                }
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid3 {
        Grid3::with_length(n, 2.0 * PI).unwrap()
    }

    fn random_field(g: Grid3, seed: u64) -> VectorField3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: [Vec<f64>; 3] =
            std::array::from_fn(|_| (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let [a, b, c] = data;
        VectorField3::from_components([
            ScalarField::from_vec(g, a).unwrap(),
            ScalarField::from_vec(g, b).unwrap(),
            ScalarField::from_vec(g, c).unwrap(),
        ])
        .unwrap()
    }

    fn random_state(g: Grid3, seed: u64) -> EmState {
        let mut s = EmState::zeros(g);
        s.a = random_field(g, seed);
        s.pi = random_field(g, seed + 1);
        s.a_tau = random_field(g, seed + 2).component(0).clone();
        s
    }

    #[test]
    fn pure_gradient_is_longitudinal() {
        let g = grid(16);
        let chi = ScalarField::from_fn(g, |x| x[0].sin() * (2.0 * x[1]).cos() + 0.3 * x[2].cos());
        let mut s = EmState::zeros(g);
        s.a = Spectral::new(g).gradient(&chi);
        let d = decompose(&s).unwrap();
        assert!(d.a_perp.max_abs() < 1e-13);
        assert!(d.eta.max_abs_diff(&chi.sub_mean()) < 1e-13);
    }

    #[test]
    fn transverse_plane_wave_is_untouched() {
        let g = grid(16);
        let mut s = EmState::zeros(g);
        s.a = transverse_mode(g, [1, 2, 0], [0.0, 0.0, 1.0], 1.0, 0.0).unwrap();
        let d = decompose(&s).unwrap();
        assert!(d.eta.max_abs() < 1e-14);
        assert!(d.a_perp.max_abs_diff(&s.a) < 1e-14);
    }

    #[test]
    fn roundtrip_random_state() {
        let g = grid(12);
        let s = random_state(g, 1);
        let d = decompose(&s).unwrap();
        assert!(d.transversality_defect() < 1e-10);
        assert!(d.has_mean_modes());
        let back = recompose(&d).unwrap();
        assert!(back.a.max_abs_diff(&s.a) < 1e-12);
        assert!(back.pi.max_abs_diff(&s.pi) < 1e-12);
        assert_eq!(back.a_tau, s.a_tau);
        // Γ equals the spectral divergence of π
        let div = Spectral::new(g).divergence(&s.pi);
        assert!(d.gamma.max_abs_diff(&div) < 1e-12);
    }

    #[test]
    fn odd_grid_roundtrip() {
        let g = grid(9);
        let s = random_state(g, 4);
        let back = recompose(&decompose(&s).unwrap()).unwrap();
        assert!(back.a.max_abs_diff(&s.a) < 1e-12);
        assert!(back.pi.max_abs_diff(&s.pi) < 1e-12);
    }

    #[test]
    fn projectors_are_idempotent() {
        let g = grid(12);
        let d1 = decompose(&random_state(g, 7)).unwrap();
        let d2 = decompose(&recompose(&d1).unwrap()).unwrap();
        assert!(d1.a_perp.max_abs_diff(&d2.a_perp) < 1e-12);
        assert!(d1.pi_perp.max_abs_diff(&d2.pi_perp) < 1e-12);
        assert!(d1.eta.max_abs_diff(&d2.eta) < 1e-12);
        assert!(d1.gamma.max_abs_diff(&d2.gamma) < 1e-12);
    }

    #[test]
    fn non_transverse_input_is_rejected() {
        let g = grid(8);
        let mut d = decompose(&random_state(g, 2)).unwrap();
        d.a_perp = random_field(g, 99);
        let err = recompose(&d).unwrap_err();
        assert!(err.to_string().contains("invalid decomposition"));
    }

    #[test]
    fn zero_fields_stay_zero() {
        let g = grid(8);
        let d = decompose(&EmState::zeros(g)).unwrap();
        let series = evolve_free(&d, (0.0, 1.0), 0.05, 5).unwrap();
        for (_, s) in series {
            assert_eq!(s.a_perp.max_abs(), 0.0);
            assert_eq!(s.pi_perp.max_abs(), 0.0);
        }
    }

    #[test]
    fn cfl_violation_rejected_before_stepping() {
        let g = grid(8);
        let d = decompose(&EmState::zeros(g)).unwrap();
        let dt = 1.01 * cfl_limit(g);
        let mut calls = 0;
        let err = evolve_free_with(&d, (0.0, 1.0), dt, 1, |_, _| calls += 1).unwrap_err();
        assert!(matches!(err, GaugeError::Cfl { .. }));
        assert_eq!(calls, 0);
    }

    #[test]
    fn evolution_preserves_gauge_sector_and_transversality() {
        let g = grid(12);
        let d = decompose(&random_state(g, 3)).unwrap();
        let series = evolve_free(&d, (0.0, 2.0), 0.05, 10).unwrap();
        for (_, s) in &series {
            assert_eq!(s.gamma, d.gamma);
            assert_eq!(s.eta, d.eta);
            assert_eq!(s.a_tau, d.a_tau);
            assert!(s.transversality_defect() < 1e-10);
        }
    }

    #[test]
    fn parseval_energy_matches_real_space() {
        let g = grid(12);
        let d = decompose(&random_state(g, 5)).unwrap();
        let ev = FreeEvolver::new(&d, 0.0, 0.01).unwrap();
        let h = hamiltonian(&d);
        assert!((ev.energy() - h).abs() < 1e-12 * h);
    }

    #[test]
    fn standing_wave_half_period_negates() {
        let g = grid(16);
        let a = transverse_mode(g, [1, 0, 0], [0.0, 1.0, 0.0], 1.0, 0.0).unwrap();
        let d = EmDecomposition::transverse(a.clone(), VectorField3::zeros(g));
        let h0 = hamiltonian(&d);
        // |k| = 1: half period π
        let series = evolve_free(&d, (0.0, PI), 1e-3, usize::MAX).unwrap();
        let (_, end) = series.last().unwrap();
        assert!(end.a_perp.add(&a).max_abs() < 1e-6);
        assert!(end.pi_perp.max_abs() < 1e-6);
        assert!((hamiltonian(end) - h0).abs() <= 1e-6 * h0);
    }

    #[test]
    fn gauge_step_with_constant_multiplier_is_exact() {
        let g = grid(8);
        let mut d = decompose(&random_state(g, 9)).unwrap();
        d.a_tau = ScalarField::from_fn(g, |_| 0.5);
        d.eta = ScalarField::zeros(g);
        let lam = ScalarField::from_fn(g, |_| 2.0);
        let mut s = d.clone();
        for _ in 0..10 {
            s = gauge_step(&s, &lam, 0.1).unwrap();
        }
        // A_τ(1) = 0.5 + 2, η(1) = 0.5 + 1
        assert!(s.a_tau.data().iter().all(|&x| (x - 2.5).abs() < 1e-14));
        assert!(s.eta.data().iter().all(|&x| (x - 1.5).abs() < 1e-14));
    }

    #[test]
    fn radiation_gauge_is_a_fixed_point() {
        let g = grid(8);
        let (d, lam) = radiation_gauge(&decompose(&random_state(g, 12)).unwrap());
        let s = gauge_step(&d, &lam, 0.3).unwrap();
        assert_eq!(s, d);
    }

    #[test]
    fn transverse_mode_validation() {
        let g = grid(8);
        assert!(transverse_mode(g, [4, 0, 0], [0.0, 1.0, 0.0], 1.0, 0.0).is_err());
        assert!(transverse_mode(g, [1, 0, 0], [1.0, 0.0, 0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn random_transverse_field_is_transverse_and_seeded() {
        let g = grid(12);
        let a = random_transverse_field(g, 42, 2, 1.0).unwrap();
        let b = random_transverse_field(g, 42, 2, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(Spectral::new(g).divergence(&a).max_abs() < 1e-12);
        assert!(a.max_abs() > 0.1);
    }
}
