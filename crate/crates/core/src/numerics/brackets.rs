//! Finite-difference Poisson brackets and symplecticity checks.

use nalgebra::DMatrix;

use super::grid::PhasePoint;

/// Default relative step: `h = 1e-5 (1 + |x|)` per coordinate.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[inline]
fn step(x: f64, h: f64) -> f64 {
    h * (1.0 + x.abs())
}

/// Central-difference gradient `(∂F/∂q, ∂F/∂p)`.
pub fn fd_gradient<F>(f: F, x: &PhasePoint, h: f64) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&PhasePoint) -> f64,
{
    let d = x.dim();
    let mut probe = x.clone();
    let mut dq = vec![0.0; d];
    let mut dp = vec![0.0; d];
    for i in 0..d {
        let x0 = x.q()[i];
        let s = step(x0, h);
        probe.q_mut()[i] = x0 + s;
        let fp = f(&probe);
        probe.q_mut()[i] = x0 - s;
        let fm = f(&probe);
        probe.q_mut()[i] = x0;
        dq[i] = (fp - fm) / (2.0 * s);

        let y0 = x.p()[i];
        let s = step(y0, h);
        probe.p_mut()[i] = y0 + s;
        let fp = f(&probe);
        probe.p_mut()[i] = y0 - s;
        let fm = f(&probe);
        probe.p_mut()[i] = y0;
        dp[i] = (fp - fm) / (2.0 * s);
    }
    (dq, dp)
}

/// `{F, G}` from precomputed gradients.
pub fn bracket_from_gradients(f: &(Vec<f64>, Vec<f64>), g: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mut s = 0.0;
    for i in 0..f.0.len() {
        s += f.0[i] * g.1[i] - f.1[i] * g.0[i];
    }
    s
}

/// `{F, G} = Σ (∂F/∂q ∂G/∂p − ∂F/∂p ∂G/∂q)` by central differences.
pub fn poisson_bracket_fd<F, G>(f: F, g: G, x: &PhasePoint, h: f64) -> f64
where
    F: Fn(&PhasePoint) -> f64,
    G: Fn(&PhasePoint) -> f64,
{
    bracket_from_gradients(&fd_gradient(f, x, h), &fd_gradient(g, x, h))
}

/// Matrix of all pairwise brackets `{F_a, F_b}`.
pub fn bracket_matrix(
    functions: &[&dyn Fn(&PhasePoint) -> f64],
    x: &PhasePoint,
    h: f64,
) -> DMatrix<f64> {
    let grads: Vec<_> = functions.iter().map(|f| fd_gradient(f, x, h)).collect();
    let n = grads.len();
    DMatrix::from_fn(n, n, |a, b| bracket_from_gradients(&grads[a], &grads[b]))
}

/// Central-difference Jacobian of a map on flat `(q, p)` vectors.
pub fn map_jacobian_fd<M>(map: M, x: &[f64], h: f64) -> DMatrix<f64>
where
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let m = map(x).len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let s = step(x[j], h);
        probe[j] = x[j] + s;
        let fp = map(&probe);
        probe[j] = x[j] - s;
        let fm = map(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * s);
        }
    }
    jac
}

/// Canonical form `Ω = [[0, 1], [−1, 0]]` in `d + d` blocks.
pub fn symplectic_form(d: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        omega[(i, d + i)] = 1.0;
        omega[(d + i, i)] = -1.0;
    }
    omega
}

/// `max |JᵀΩJ − Ω|` for a Jacobian on `(q, p)` ordered coordinates.
pub fn symplectic_defect(jac: &DMatrix<f64>) -> f64 {
    let d = jac.ncols() / 2;
    let omega = symplectic_form(d);
    let lhs = jac.transpose() * &omega * jac;
    (lhs - omega).amax()
}
