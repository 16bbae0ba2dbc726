//! Symplectic one-step maps for Hamiltonian systems.

use super::grid::PhasePoint;
use super::NumericsError;

/// A Hamiltonian of the form `H = T(p) + V(q)`.
pub trait SeparableHamiltonian {
    /// `∂T/∂p`.
    fn velocity(&self, p: &[f64]) -> Vec<f64>;
    /// `−∂V/∂q`.
    fn force(&self, q: &[f64]) -> Vec<f64>;
}

/// Point masses with `T = Σ p²/2m` and a caller supplied force.
pub struct Newtonian<F> {
    /// One mass per coordinate.
    pub masses: Vec<f64>,
    pub force: F,
}

impl<F> SeparableHamiltonian for Newtonian<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn velocity(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.masses).map(|(p, m)| p / m).collect()
    }

    fn force(&self, q: &[f64]) -> Vec<f64> {
        (self.force)(q)
    }
}

fn check_finite(v: &[f64]) -> Result<(), NumericsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::Diverged)
    }
}

/// One kick-drift-kick step. Negative `dt` runs the map backwards.
pub fn leapfrog_step<H: SeparableHamiltonian + ?Sized>(
    state: &PhasePoint,
    hamiltonian: &H,
    dt: f64,
) -> Result<PhasePoint, NumericsError> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(NumericsError::InvalidArgument(format!("time step {dt}")));
    }
    let f0 = hamiltonian.force(state.q());
    check_finite(&f0)?;
    let p_half: Vec<f64> = state
        .p()
        .iter()
        .zip(&f0)
        .map(|(p, f)| p + 0.5 * dt * f)
        .collect();
    let v = hamiltonian.velocity(&p_half);
    check_finite(&v)?;
    let q1: Vec<f64> = state.q().iter().zip(&v).map(|(q, v)| q + dt * v).collect();
    let f1 = hamiltonian.force(&q1);
    check_finite(&f1)?;
    let p1 = p_half.iter().zip(&f1).map(|(p, f)| p + 0.5 * dt * f).collect();
    PhasePoint::new(q1, p1)
}

#[derive(Clone, Copy, Debug)]
pub struct MidpointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MidpointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Implicit midpoint rule with fixed-point iteration, for non-separable `H`.
///
/// `gradient(q, p)` returns `(∂H/∂q, ∂H/∂p)`.
pub fn implicit_midpoint_step<G>(
    state: &PhasePoint,
    gradient: G,
    dt: f64,
    opts: MidpointOptions,
) -> Result<PhasePoint, NumericsError>
where
    G: Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
{
    if !dt.is_finite() || dt == 0.0 {
        return Err(NumericsError::InvalidArgument(format!("time step {dt}")));
    }
    let (q0, p0) = (state.q(), state.p());
    let d = q0.len();
    let mut q1 = q0.to_vec();
    let mut p1 = p0.to_vec();
    let mut qm = vec![0.0; d];
    let mut pm = vec![0.0; d];
    for _ in 0..opts.max_iter {
        for i in 0..d {
            qm[i] = 0.5 * (q0[i] + q1[i]);
            pm[i] = 0.5 * (p0[i] + p1[i]);
        }
        let (dq, dp) = gradient(&qm, &pm);
        check_finite(&dq)?;
        check_finite(&dp)?;
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for i in 0..d {
            let qn = q0[i] + dt * dp[i];
            let pn = p0[i] - dt * dq[i];
            change = change.max((qn - q1[i]).abs()).max((pn - p1[i]).abs());
            scale = scale.max(qn.abs()).max(pn.abs());
            q1[i] = qn;
            p1[i] = pn;
        }
        if change <= opts.tol * scale {
            return PhasePoint::new(q1, p1);
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}
