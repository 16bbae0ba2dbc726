//! Damped Newton root finding and Levenberg-Marquardt least squares.

use nalgebra::{DMatrix, DVector};

use super::NumericsError;

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
    /// Smallest step fraction tried by the backtracking line search.
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            fd_step: 1e-7,
            min_damping: 1.0 / 1024.0,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fd_jacobian<R>(residual: &R, x: &[f64], r0: &[f64], h: f64) -> DMatrix<f64>
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    let (m, n) = (r0.len(), x.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let s = h * (1.0 + x[j].abs());
        probe[j] = x[j] + s;
        let rp = residual(&probe);
        probe[j] = x[j] - s;
        let rm = residual(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * s);
        }
    }
    jac
}

fn solve_linear(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    if a.is_square() {
        if let Some(x) = a.clone().lu().solve(&b) {
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
    }
    a.svd(true, true).solve(&b, 1e-14).ok()
}

/// Finds `x` with `‖residual(x)‖ ≤ tol` starting from `x0`.
pub fn newton_solve<R>(residual: R, x0: &[f64], tol: f64) -> Result<Vec<f64>, NumericsError>
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    newton_solve_with(residual, x0, tol, NewtonOptions::default())
}

pub fn newton_solve_with<R>(
    residual: R,
    x0: &[f64],
    tol: f64,
    opts: NewtonOptions,
) -> Result<Vec<f64>, NumericsError>
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidArgument(format!("tolerance {tol}")));
    }
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for _ in 0..opts.max_iter {
        if rn <= tol {
            return Ok(x);
        }
        if !rn.is_finite() {
            break;
        }
        let jac = fd_jacobian(&residual, &x, &r, opts.fd_step);
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let Some(dx) = solve_linear(jac, rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= opts.min_damping {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            let rt = residual(&trial);
            let nt = norm(&rt);
            if nt.is_finite() && nt < rn {
                x = trial;
                r = rt;
                rn = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn <= tol {
        return Ok(x);
    }
    Err(NumericsError::NoConvergence {
        iterations: opts.max_iter,
        residual: rn,
    })
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// `model(r_k) − v_k` per data point.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub max_iter: usize,
    pub fd_step: f64,
    pub initial_lambda: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            fd_step: 1e-7,
            initial_lambda: 1e-3,
        }
    }
}

fn residual_vector<M>(model: &M, params: &[f64], data: &[(f64, f64)]) -> Vec<f64>
where
    M: Fn(f64, &[f64]) -> f64,
{
    data.iter().map(|&(r, v)| model(r, params) - v).collect()
}

fn cost(res: &[f64]) -> f64 {
    let c: f64 = res.iter().map(|x| x * x).sum();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Levenberg-Marquardt minimiser of `Σ (model(r_k; p) − v_k)²`.
///
/// Stops once the relative cost decrease or the relative step falls below `tol`.
pub fn least_squares_fit<M>(
    model: M,
    params0: &[f64],
    data: &[(f64, f64)],
    tol: f64,
) -> Result<FitResult, NumericsError>
where
    M: Fn(f64, &[f64]) -> f64,
{
    least_squares_fit_with(model, params0, data, tol, FitOptions::default())
}

pub fn least_squares_fit_with<M>(
    model: M,
    params0: &[f64],
    data: &[(f64, f64)],
    tol: f64,
    opts: FitOptions,
) -> Result<FitResult, NumericsError>
where
    M: Fn(f64, &[f64]) -> f64,
{
    if data.is_empty() {
        return Err(NumericsError::InvalidArgument("no data points".into()));
    }
    let mut p = params0.to_vec();
    let mut res = residual_vector(&model, &p, data);
    let mut c = cost(&res);
    if !c.is_finite() {
        return Err(NumericsError::InvalidArgument(
            "model not finite at the initial parameters".into(),
        ));
    }
    let resid_fn = |q: &[f64]| residual_vector(&model, q, data);
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;
    let mut checked_rank = false;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let jac = fd_jacobian(&resid_fn, &p, &res, opts.fd_step);
        let jtj = jac.transpose() * &jac;
        if !checked_rank {
            let sv = jtj.clone().svd(false, false).singular_values;
            let smax = sv.max();
            let smin = sv.min();
            if !(smax > 0.0) || smin <= 1e-13 * smax {
                return Err(NumericsError::DegenerateFit);
            }
            checked_rank = true;
        }
        let r = DVector::from_column_slice(&res);
        let g = jac.transpose() * r;
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = solve_linear(a, -&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            let rt = residual_vector(&model, &trial, data);
            let ct = cost(&rt);
            if ct < c {
                let rel_drop = (c - ct) / c.max(f64::MIN_POSITIVE);
                let pnorm = norm(&p).max(1e-12);
                let rel_step = step.norm() / pnorm;
                p = trial;
                res = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel_drop < tol || rel_step < tol || c == 0.0 {
                    return Ok(finish(p, res, iterations));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left: at a minimum to working precision
            return Ok(finish(p, res, iterations));
        }
    }
    Ok(finish(p, res, iterations))
}

fn finish(params: Vec<f64>, residuals: Vec<f64>, iterations: usize) -> FitResult {
    let rms = (cost(&residuals) / residuals.len() as f64).sqrt();
    FitResult {
        params,
        residuals,
        rms,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt_two() {
        let x = newton_solve(|x| vec![x[0] * x[0] - 2.0], &[1.0], 1e-14).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_multidimensional() {
        let res = |x: &[f64]| vec![x[0] + x[1] - 3.0, x[0] * x[1] - 2.0];
        let x = newton_solve(res, &[3.0, 0.5], 1e-12).unwrap();
        let r = res(&x);
        assert!(norm(&r) <= 1e-12);
    }

    #[test]
    fn newton_reports_last_residual() {
        let err = newton_solve(|x| vec![x[0] * x[0] + 1.0], &[0.5], 1e-10).unwrap_err();
        match err {
            NumericsError::NoConvergence { residual, .. } => assert!(residual >= 1.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn fits_exponential_decay() {
        let truth = [2.0, 0.7];
        let model = |r: f64, p: &[f64]| p[0] * (-p[1] * r).exp();
        let data: Vec<(f64, f64)> = (0..20).map(|i| {
            let r = 0.25 * i as f64;
            (r, model(r, &truth))
        }).collect();
        let fit = least_squares_fit(model, &[1.0, 0.1], &data, 1e-15).unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-8);
        assert!((fit.params[1] - 0.7).abs() < 1e-8);
        assert!(fit.rms < 1e-9);
    }

    #[test]
    fn degenerate_parameters_rejected() {
        // p[1] never enters the model
        let model = |r: f64, p: &[f64]| p[0] * r;
        let data = [(1.0, 1.0), (2.0, 2.0)];
        let err = least_squares_fit(model, &[0.5, 1.0], &data, 1e-12).unwrap_err();
        assert!(err.to_string().contains("degenerate fit"));
    }
}
