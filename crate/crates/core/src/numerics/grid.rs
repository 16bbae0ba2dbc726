//! Periodic cubic lattice and the scalar/vector fields sampled on it.

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// A periodic cubic lattice with `n` points per axis and uniform spacing.
///
/// Samples are stored in row-major order: the flat index of `(i, j, k)` is
/// `(i * n + j) * n + k`, with `i` running along axis 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid3 {
    n: usize,
    spacing: f64,
}

impl Grid3 {
    pub const MIN_POINTS: usize = 4;

    pub fn new(n: usize, spacing: f64) -> Result<Self, NumericsError> {
        if n < Self::MIN_POINTS {
            return Err(NumericsError::InvalidGrid(format!(
                "need at least {} points per axis, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(NumericsError::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(Self { n, spacing })
    }

    /// Grid whose box side is `length`.
    pub fn with_length(n: usize, length: f64) -> Result<Self, NumericsError> {
        Self::new(n, length / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.length().powi(3)
    }

    /// Always true in this version: every grid is a 3-torus.
    pub fn is_periodic(&self) -> bool {
        true
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical position of a lattice point (origin at index 0).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            c[0] as f64 * self.spacing,
            c[1] as f64 * self.spacing,
            c[2] as f64 * self.spacing,
        ]
    }

    /// Index shifted by `offset` along `axis`, wrapping periodically.
    pub fn shifted(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.n as isize;
        c[axis] = ((c[axis] as isize + offset).rem_euclid(n)) as usize;
        self.index(c[0], c[1], c[2])
    }

    /// Minimal-image displacement from `a` to `b` on the torus.
    pub fn periodic_delta(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.length();
        let mut d = [0.0; 3];
        for r in 0..3 {
            let x = b[r] - a[r];
            d[r] = x - l * (x / l).round();
        }
        d
    }
}

/// One real sample per lattice point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid3, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != grid.len() {
            return Err(NumericsError::ShapeMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    /// Samples `f` at every lattice position.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Lattice integral `Σ f h³`.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sub_mean(&self) -> Self {
        let m = self.mean();
        self.map(|x| x - m)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Three real samples per lattice point, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField3 {
    components: [ScalarField; 3],
}

impl VectorField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_components(components: [ScalarField; 3]) -> Result<Self, NumericsError> {
        let g = components[0].grid();
        if components.iter().any(|c| c.grid() != g) {
            return Err(NumericsError::InvalidGrid(
                "vector components live on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.position(idx));
            for r in 0..3 {
                out.components[r].data[idx] = v[r];
            }
        }
        out
    }

    pub fn grid(&self) -> Grid3 {
        self.components[0].grid()
    }

    pub fn component(&self, r: usize) -> &ScalarField {
        &self.components[r]
    }

    pub fn component_mut(&mut self, r: usize) -> &mut ScalarField {
        &mut self.components[r]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0].data[idx],
            self.components[1].data[idx],
            self.components[2].data[idx],
        ]
    }

    pub fn mean(&self) -> [f64; 3] {
        [
            self.components[0].mean(),
            self.components[1].mean(),
            self.components[2].mean(),
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..3).fold(0.0, |m, r| {
            m.max(self.components[r].max_abs_diff(&other.components[r]))
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            components: std::array::from_fn(|r| {
                self.components[r].zip_map(&other.components[r], |a, b| a + b)
            }),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            components: std::array::from_fn(|r| {
                self.components[r].zip_map(&other.components[r], |a, b| a - b)
            }),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            components: std::array::from_fn(|r| self.components[r].map(|x| s * x)),
        }
    }

    /// `Σ_x |v|² h³`.
    pub fn norm_sq_integral(&self) -> f64 {
        let h3 = self.grid().cell_volume();
        self.components
            .iter()
            .map(|c| c.data.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            * h3
    }

    /// Adds a constant vector to every sample.
    pub fn offset(&self, v: [f64; 3]) -> Self {
        Self {
            components: std::array::from_fn(|r| self.components[r].map(|x| x + v[r])),
        }
    }
}

/// A pair of canonical coordinate vectors of equal length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self, NumericsError> {
        if q.len() != p.len() {
            return Err(NumericsError::ShapeMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        &mut self.p
    }

    /// Flattened `(q, p)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub fn from_flat(x: &[f64]) -> Result<Self, NumericsError> {
        if !x.len().is_multiple_of(2) {
            return Err(NumericsError::ShapeMismatch {
                expected: x.len() + 1,
                found: x.len(),
            });
        }
        let d = x.len() / 2;
        Ok(Self {
            q: x[..d].to_vec(),
            p: x[d..].to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }
}
