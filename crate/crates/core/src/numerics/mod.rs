//! Shared numerical kernels: periodic lattice calculus, symplectic
//! integrators, finite-difference Poisson brackets, root finding and least
//! squares.
//!
//! The Laplacian convention throughout the crate is `Δ = −∇²`.

mod brackets;
mod grid;
mod integrators;
mod solve;
mod spectral;

use thiserror::Error;

pub use brackets::{
    bracket_from_gradients, bracket_matrix, fd_gradient, map_jacobian_fd, poisson_bracket_fd,
    symplectic_defect, symplectic_form, DEFAULT_FD_STEP,
};
pub use grid::{Grid3, PhasePoint, ScalarField, VectorField3};
pub use integrators::{
    implicit_midpoint_step, leapfrog_step, MidpointOptions, Newtonian, SeparableHamiltonian,
};
pub use solve::{
    least_squares_fit, least_squares_fit_with, newton_solve, newton_solve_with, FitOptions,
    FitResult, NewtonOptions,
};
pub use spectral::Spectral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} samples, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("zero-mode not invertible on torus (kernel amplitude {amplitude:e})")]
    ZeroMode { amplitude: f64 },
    #[error("dynamics diverged")]
    Diverged,
    #[error("no convergence after {iterations} iterations (last residual norm {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate fit")]
    DegenerateFit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `Δf = −∇²f` by Fourier multipliers.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    Spectral::new(f.grid()).laplacian(f)
}

/// `g` with `Δg = f`; `f` must carry no zero-mode content.
pub fn inverse_laplacian(f: &ScalarField) -> Result<ScalarField, NumericsError> {
    Spectral::new(f.grid()).inverse_laplacian(f)
}

/// Kahan-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
