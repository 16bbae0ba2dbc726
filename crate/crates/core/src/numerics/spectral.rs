//! Fourier-multiplier calculus on the periodic lattice.
//!
//! All first derivatives use the wave number `k` of each Fourier mode, except
//! that the Nyquist component (even `n`) is set to zero so that derivatives of
//! real fields stay real. The Laplacian is built from the same symbol,
//! `Δ = −∂·∂ ↦ |k_eff|²`, so the composed and direct operators agree exactly and
//! the Helmholtz projectors are consistent. Its kernel is the constant mode plus,
//! for even `n`, the modes whose every component is zero or Nyquist.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid3, ScalarField, VectorField3};
use super::NumericsError;

/// Relative size of kernel content below which a field counts as mean-free.
const KERNEL_TOL: f64 = 1e-10;

pub struct Spectral {
    grid: Grid3,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Signed wave numbers per 1D index.
    k_signed: Vec<f64>,
    /// Derivative wave numbers (Nyquist zeroed) per 1D index.
    k_deriv: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid3) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / grid.length();
        let mut k_signed = Vec::with_capacity(n);
        let mut k_deriv = Vec::with_capacity(n);
        for m in 0..n {
            let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            k_signed.push(s * dk);
            let nyquist = n.is_multiple_of(2) && m == n / 2;
            k_deriv.push(if nyquist { 0.0 } else { s * dk });
        }
        Self {
            grid,
            forward,
            inverse,
            k_signed,
            k_deriv,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    /// Derivative wave vector of the mode stored at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let c = self.grid.coords(idx);
        [self.k_deriv[c[0]], self.k_deriv[c[1]], self.k_deriv[c[2]]]
    }

    /// Signed (unfiltered) wave vector of the mode at `idx`.
    #[inline]
    pub fn signed_wavevector(&self, idx: usize) -> [f64; 3] {
        let c = self.grid.coords(idx);
        [self.k_signed[c[0]], self.k_signed[c[1]], self.k_signed[c[2]]]
    }

    /// Laplacian symbol `|k_eff|²` at `idx`.
    #[inline]
    pub fn laplacian_symbol(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let fft = if inverse { &self.inverse } else { &self.forward };
        // axis 2 is contiguous
        fft.process(data);
        let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in [1usize, 0] {
            let stride = if axis == 1 { n } else { n * n };
            // gather lines of `axis` into contiguous rows
            let mut line = 0;
            for idx in 0..data.len() {
                let c = self.grid.coords(idx);
                if c[axis] != 0 {
                    continue;
                }
                for m in 0..n {
                    scratch[line * n + m] = data[idx + m * stride];
                }
                line += 1;
            }
            fft.process(&mut scratch);
            line = 0;
            for idx in 0..data.len() {
                let c = self.grid.coords(idx);
                if c[axis] != 0 {
                    continue;
                }
                for m in 0..n {
                    data[idx + m * stride] = scratch[line * n + m];
                }
                line += 1;
            }
        }
        if inverse {
            let norm = 1.0 / data.len() as f64;
            for z in data.iter_mut() {
                *z *= norm;
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        debug_assert_eq!(f.grid(), self.grid);
        let mut buf: Vec<Complex64> = f.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> ScalarField {
        self.transform(&mut spectrum, true);
        let data = spectrum.into_iter().map(|z| z.re).collect();
        ScalarField::from_vec(self.grid, data).expect("spectrum length matches grid")
    }

    /// Applies a Fourier multiplier `symbol(idx)`.
    pub fn apply(&self, f: &ScalarField, symbol: impl Fn(usize) -> Complex64) -> ScalarField {
        let mut s = self.forward(f);
        for (idx, z) in s.iter_mut().enumerate() {
            *z *= symbol(idx);
        }
        self.inverse_real(s)
    }

    /// `Δf = −∇²f`.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply(f, |idx| Complex64::new(self.laplacian_symbol(idx), 0.0))
    }

    /// Largest amplitude carried by kernel modes of `Δ`.
    pub fn kernel_amplitude(&self, spectrum: &[Complex64]) -> f64 {
        let norm = 1.0 / spectrum.len() as f64;
        spectrum
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.laplacian_symbol(*idx) == 0.0)
            .fold(0.0, |m, (_, z)| m.max(z.norm() * norm))
    }

    /// `g` with `Δg = f` and no kernel content.
    pub fn inverse_laplacian(&self, f: &ScalarField) -> Result<ScalarField, NumericsError> {
        let mut s = self.forward(f);
        let kernel = self.kernel_amplitude(&s);
        if kernel > KERNEL_TOL * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(NumericsError::ZeroMode { amplitude: kernel });
        }
        for (idx, z) in s.iter_mut().enumerate() {
            let k2 = self.laplacian_symbol(idx);
            *z = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { *z / k2 };
        }
        Ok(self.inverse_real(s))
    }

    pub fn derivative(&self, f: &ScalarField, axis: usize) -> ScalarField {
        self.apply(f, |idx| Complex64::new(0.0, self.wavevector(idx)[axis]))
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField3 {
        let s = self.forward(f);
        let comps = std::array::from_fn(|r| {
            let d = s
                .iter()
                .enumerate()
                .map(|(idx, z)| z * Complex64::new(0.0, self.wavevector(idx)[r]))
                .collect();
            self.inverse_real(d)
        });
        VectorField3::from_components(comps).expect("same grid")
    }

    pub fn divergence(&self, v: &VectorField3) -> ScalarField {
        let n = self.grid.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..3 {
            let s = self.forward(v.component(r));
            for (idx, z) in s.into_iter().enumerate() {
                acc[idx] += z * Complex64::new(0.0, self.wavevector(idx)[r]);
            }
        }
        self.inverse_real(acc)
    }

    pub fn curl(&self, v: &VectorField3) -> VectorField3 {
        let s: [Vec<Complex64>; 3] = std::array::from_fn(|r| self.forward(v.component(r)));
        let comps = std::array::from_fn(|r| {
            let (a, b) = ((r + 1) % 3, (r + 2) % 3);
            let d = (0..self.grid.len())
                .map(|idx| {
                    let k = self.wavevector(idx);
                    Complex64::new(0.0, 1.0) * (s[b][idx] * k[a] - s[a][idx] * k[b])
                })
                .collect();
            self.inverse_real(d)
        });
        VectorField3::from_components(comps).expect("same grid")
    }

    /// Face values of `f` on the half-shifted planes `j + ½` of `axis`.
    ///
    /// The result `Φ` obeys `Φ[j] − Φ[j−1] = h ∂_axis f[j]` exactly in exact
    /// arithmetic, where `Φ[j]` sits at `j + ½`. Summing the spectral derivative
    /// over any sub-box therefore telescopes into a face flux.
    pub fn face_values(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let h = self.grid.spacing();
        self.apply(f, |idx| {
            let c = self.grid.coords(idx);
            let ks = self.k_signed[c[axis]];
            let kd = self.k_deriv[c[axis]];
            if ks == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let denom = 2.0 * (0.5 * ks * h).sin() / h;
            let phase = Complex64::from_polar(1.0, 0.5 * ks * h);
            phase * (kd / denom)
        })
    }
}
