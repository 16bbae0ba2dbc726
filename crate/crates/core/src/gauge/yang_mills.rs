use serde::{Deserialize, Serialize};

use super::{region_flux, region_integral, GaugeError, Region};
use crate::numerics::{Grid3, ScalarField, Spectral, VectorField3};

const TABLE_TOL: f64 = 1e-12;

/// Totally antisymmetric structure constants `c_abc` of a compact Lie algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstants {
    pub name: String,
    pub dim: usize,
    /// Row-major `c[(a·dim + b)·dim + c]`.
    pub table: Vec<f64>,
}

impl StructureConstants {
    pub fn abelian(dim: usize) -> Self {
        Self {
            name: format!("u1^{dim}"),
            dim,
            table: vec![0.0; dim * dim * dim],
        }
    }

    pub fn su2() -> Self {
        let mut s = Self::abelian(3);
        s.name = "su2".into();
        s.set_antisymmetric(0, 1, 2, 1.0);
        s
    }

    pub fn su3() -> Self {
        let mut s = Self::abelian(8);
        s.name = "su3".into();
        let h = 0.5;
        let r = 0.75f64.sqrt();
        for (a, b, c, v) in [
            (1, 2, 3, 1.0),
            (1, 4, 7, h),
            (1, 6, 5, h),
            (2, 4, 6, h),
            (2, 5, 7, h),
            (3, 4, 5, h),
            (3, 7, 6, h),
            (4, 5, 8, r),
            (6, 7, 8, r),
        ] {
            s.set_antisymmetric(a - 1, b - 1, c - 1, v);
        }
        s
    }

    pub fn by_name(name: &str) -> Result<Self, GaugeError> {
        match name {
            "su2" => Ok(Self::su2()),
            "su3" => Ok(Self::su3()),
            "u1" => Ok(Self::abelian(1)),
            other => Err(GaugeError::InvalidStructure(format!("unknown algebra {other:?}"))),
        }
    }

    fn set_antisymmetric(&mut self, a: usize, b: usize, c: usize, v: f64) {
        for (i, j, k, s) in [
            (a, b, c, v),
            (b, c, a, v),
            (c, a, b, v),
            (b, a, c, -v),
            (a, c, b, -v),
            (c, b, a, -v),
        ] {
            let idx = self.index(i, j, k);
            self.table[idx] = s;
        }
    }

    #[inline]
    fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.table[self.index(a, b, c)]
    }

    pub fn is_abelian(&self) -> bool {
        self.table.iter().all(|&x| x == 0.0)
    }

    /// Total antisymmetry and the Jacobi identity
    /// `c_abe c_ecd + c_bce c_ead + c_cae c_ebd = 0`.
    pub fn validate(&self) -> Result<(), GaugeError> {
        let n = self.dim;
        if n == 0 || self.table.len() != n * n * n {
            return Err(GaugeError::InvalidStructure(format!(
                "table of length {} for dimension {n}",
                self.table.len()
            )));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = self.get(a, b, c);
                    let swaps = [-self.get(b, a, c), -self.get(a, c, b), self.get(b, c, a)];
                    if swaps.iter().any(|&w| (v - w).abs() > TABLE_TOL) {
                        return Err(GaugeError::InvalidStructure(format!(
                            "not totally antisymmetric at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = 0.0;
                        for e in 0..n {
                            s += self.get(a, b, e) * self.get(e, c, d)
                                + self.get(b, c, e) * self.get(e, a, d)
                                + self.get(c, a, e) * self.get(e, b, d);
                        }
                        if s.abs() > TABLE_TOL {
                            return Err(GaugeError::InvalidStructure(format!(
                                "Jacobi identity fails at ({a}, {b}, {c}, {d}): {s:e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Colour-indexed potentials `A_a` and momenta `π_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct YmState {
    structure: StructureConstants,
    pub a: Vec<VectorField3>,
    pub pi: Vec<VectorField3>,
}

impl YmState {
    /// Validates the table and the field shapes.
    pub fn new(
        structure: StructureConstants,
        a: Vec<VectorField3>,
        pi: Vec<VectorField3>,
    ) -> Result<Self, GaugeError> {
        structure.validate()?;
        let n = structure.dim;
        if a.len() != n || pi.len() != n {
            return Err(GaugeError::InvalidArgument(format!(
                "expected {n} colour components, found {} and {}",
                a.len(),
                pi.len()
            )));
        }
        let g = a[0].grid();
        if a.iter().chain(pi.iter()).any(|v| v.grid() != g) {
            return Err(GaugeError::GridMismatch);
        }
        Ok(Self { structure, a, pi })
    }

    pub fn zeros(structure: StructureConstants, grid: Grid3) -> Result<Self, GaugeError> {
        let n = structure.dim;
        Self::new(
            structure,
            vec![VectorField3::zeros(grid); n],
            vec![VectorField3::zeros(grid); n],
        )
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim
    }

    pub fn grid(&self) -> Grid3 {
        self.a[0].grid()
    }
}

/// `Σ_bc c_abc (u_b · w_c)` pointwise, for every colour `a`.
fn color_contract(
    c: &StructureConstants,
    u: &[VectorField3],
    w: &[VectorField3],
) -> Vec<ScalarField> {
    let n = c.dim;
    let g = u[0].grid();
    let mut out = vec![ScalarField::zeros(g); n];
    for b in 0..n {
        for cc in 0..n {
            let dot = u[b].components().iter().zip(w[cc].components()).fold(
                ScalarField::zeros(g),
                |acc, (x, y)| {
                    acc.zip_map(&x.zip_map(y, |p, q| p * q), |s, t| s + t)
                },
            );
            for (a, o) in out.iter_mut().enumerate() {
                let f = c.get(a, b, cc);
                if f != 0.0 {
                    for (x, d) in o.data_mut().iter_mut().zip(dot.data()) {
                        *x += f * d;
                    }
                }
            }
        }
    }
    out
}

/// `Γ_a = ∂·π_a + c_abc A_b·π_c`.
pub fn ym_gauss(s: &YmState) -> Vec<ScalarField> {
    let spec = Spectral::new(s.grid());
    let nonabelian = color_contract(&s.structure, &s.a, &s.pi);
    s.pi
        .iter()
        .zip(nonabelian)
        .map(|(p, extra)| spec.divergence(p).zip_map(&extra, |x, y| x + y))
        .collect()
}

/// Infinitesimal gauge transformation
/// `A_a → A_a + ∂ε_a + c_abc A_b ε_c`, `π_a → π_a + c_abc π_b ε_c`.
pub fn ym_gauge_transform(s: &YmState, eps: &[ScalarField]) -> Result<YmState, GaugeError> {
    let n = s.dim();
    if eps.len() != n {
        return Err(GaugeError::InvalidArgument(format!(
            "expected {n} gauge parameters, found {}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| e.grid() != s.grid()) {
        return Err(GaugeError::GridMismatch);
    }
    let spec = Spectral::new(s.grid());
    let rotate = |fields: &[VectorField3]| -> Vec<VectorField3> {
        (0..n)
            .map(|a| {
                let mut comps: [ScalarField; 3] = fields[a].components().clone();
                for b in 0..n {
                    for c in 0..n {
                        let f = s.structure.get(a, b, c);
                        if f == 0.0 {
                            continue;
                        }
                        for (r, comp) in comps.iter_mut().enumerate() {
                            let src = fields[b].component(r).data();
                            for ((x, y), e) in comp.data_mut().iter_mut().zip(src).zip(eps[c].data()) {
                                *x += f * y * e;
                            }
                        }
                    }
                }
                VectorField3::from_components(comps).expect("same grid")
            })
            .collect()
    };
    let a_rot = rotate(&s.a);
    let a = a_rot
        .iter()
        .zip(eps)
        .map(|(v, e)| v.add(&spec.gradient(e)))
        .collect();
    let pi = rotate(&s.pi);
    Ok(YmState {
        structure: s.structure.clone(),
        a,
        pi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ColorCharge {
    /// Flux of `π_a` through `∂Ω`.
    pub strong: f64,
    /// `c_abc ∫_Ω π_b·A_c`.
    pub weak: f64,
    /// `∫_Ω Γ_a`.
    pub gauss_integral: f64,
}

impl ColorCharge {
    /// `Q_strong − Q_weak − ∫Γ`.
    pub fn defect(&self) -> f64 {
        self.strong - self.weak - self.gauss_integral
    }
}

pub fn ym_color_charges(s: &YmState, region: &Region) -> Result<Vec<ColorCharge>, GaugeError> {
    region.validate(s.grid())?;
    let spec = Spectral::new(s.grid());
    let weak = color_contract(&s.structure, &s.pi, &s.a);
    let gauss = ym_gauss(s);
    Ok((0..s.dim())
        .map(|a| ColorCharge {
            strong: region_flux(&spec, s.pi[a].components(), region),
            weak: region_integral(&weak[a], region),
            gauss_integral: region_integral(&gauss[a], region),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::charge::{charge_identity, ChargeDensity};
    use crate::gauge::maxwell::{decompose, EmState};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid3 {
        Grid3::new(8, 0.4).unwrap()
    }

    fn smooth_field(g: Grid3, rng: &mut ChaCha8Rng) -> VectorField3 {
        let coef: Vec<[f64; 4]> = (0..3)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let k = 2.0 * std::f64::consts::PI / g.length();
        VectorField3::from_fn(g, |x| {
            std::array::from_fn(|r| {
                let c = coef[r];
                c[0] * (k * x[0]).sin() + c[1] * (k * x[1] + c[3]).cos() + c[2] * (2.0 * k * x[2]).sin()
            })
        })
    }

    fn random_state(structure: StructureConstants, seed: u64) -> YmState {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = structure.dim;
        let a = (0..n).map(|_| smooth_field(g, &mut rng)).collect();
        let pi = (0..n).map(|_| smooth_field(g, &mut rng)).collect();
        YmState::new(structure, a, pi).unwrap()
    }

    #[test]
    fn builtin_tables_pass_validation() {
        for s in [StructureConstants::su2(), StructureConstants::su3(), StructureConstants::abelian(2)] {
            s.validate().unwrap();
        }
        assert_eq!(StructureConstants::su3().get(3, 4, 7), 0.75f64.sqrt());
        assert_eq!(StructureConstants::su3().get(0, 4, 5), -0.5);
    }

    #[test]
    fn broken_tables_rejected() {
        let mut s = StructureConstants::su2();
        s.table[1] = 0.3;
        assert!(s.validate().is_err());
        // antisymmetric but not a Lie algebra
        let mut t = StructureConstants::abelian(5);
        t.set_antisymmetric(0, 1, 2, 1.0);
        t.set_antisymmetric(2, 3, 4, 1.0);
        assert!(t.validate().unwrap_err().to_string().contains("Jacobi"));
        assert!(StructureConstants::by_name("so7").is_err());
    }

    #[test]
    fn zero_momentum_has_zero_gauss() {
        let mut s = random_state(StructureConstants::su2(), 1);
        for p in s.pi.iter_mut() {
            *p = VectorField3::zeros(grid());
        }
        assert!(ym_gauss(&s).iter().all(|g| g.max_abs() == 0.0));
    }

    /// Direct per-site loop evaluation of `∂·π_a + c_abc A_b·π_c`.
    fn naive_gauss(s: &YmState) -> Vec<Vec<f64>> {
        let g = s.grid();
        let spec = Spectral::new(g);
        let n = s.dim();
        let c = s.structure();
        let derivs: Vec<[ScalarField; 3]> = s
            .pi
            .iter()
            .map(|p| std::array::from_fn(|r| spec.derivative(p.component(r), r)))
            .collect();
        (0..n)
            .map(|a| {
                (0..g.len())
                    .map(|idx| {
                        let mut v = 0.0;
                        for r in 0..3 {
                            v += derivs[a][r].data()[idx];
                        }
                        for b in 0..n {
                            for cc in 0..n {
                                for r in 0..3 {
                                    v += c.get(a, b, cc)
                                        * s.a[b].component(r).data()[idx]
                                        * s.pi[cc].component(r).data()[idx];
                                }
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn su2_gauss_matches_loop_oracle() {
        for seed in 0..5 {
            let s = random_state(StructureConstants::su2(), seed);
            let fast = ym_gauss(&s);
            let slow = naive_gauss(&s);
            for a in 0..3 {
                for (x, y) in fast[a].data().iter().zip(&slow[a]) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn abelian_reduction_matches_maxwell() {
        let s = random_state(StructureConstants::abelian(1), 3);
        let mut em = EmState::zeros(grid());
        em.a = s.a[0].clone();
        em.pi = s.pi[0].clone();
        let d = decompose(&em).unwrap();
        assert!(ym_gauss(&s)[0].max_abs_diff(&d.gamma) < 1e-12);
        let region = Region::new([1, 0, 2], [6, 5, 8]);
        let q = ym_color_charges(&s, &region).unwrap()[0];
        let m = charge_identity(&d, &ChargeDensity::zeros(grid()), &region).unwrap();
        assert!((q.strong - m.q_strong).abs() < 1e-12);
        assert_eq!(q.weak, 0.0);
        assert!((q.gauss_integral - m.gauss_integral).abs() < 1e-12);
        // abelian gauge transformation leaves π and Γ untouched
        let eps = vec![ScalarField::from_fn(grid(), |x| 0.1 * x[0].sin())];
        let t = ym_gauge_transform(&s, &eps).unwrap();
        assert_eq!(t.pi, s.pi);
    }

    #[test]
    fn color_charge_identity_holds() {
        for structure in [StructureConstants::su2(), StructureConstants::su3()] {
            let s = random_state(structure, 8);
            for region in [Region::new([0, 0, 0], [4, 4, 4]), Region::new([2, 3, 1], [7, 8, 6])] {
                for q in ym_color_charges(&s, &region).unwrap() {
                    assert!(q.defect().abs() < 1e-12, "{q:?}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// `Γ` transforms in the adjoint: `δΓ_a = c_abc Γ_b ε_c` to first order.
        #[test]
        fn gauss_law_is_covariant(seed in 0u64..1000, scale in 1e-4f64..1e-3) {
            let s = random_state(StructureConstants::su2(), seed);
            let g = grid();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let k = 2.0 * std::f64::consts::PI / g.length();
            let eps: Vec<ScalarField> = (0..3)
                .map(|_| {
                    let (p, q) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    ScalarField::from_fn(g, |x| scale * (p * (k * x[0]).sin() + q * (k * x[2]).cos()))
                })
                .collect();
            let before = ym_gauss(&s);
            let after = ym_gauss(&ym_gauge_transform(&s, &eps).unwrap());
            let c = s.structure();
            let mut worst: f64 = 0.0;
            for a in 0..3 {
                for idx in 0..g.len() {
                    let mut expect = before[a].data()[idx];
                    for b in 0..3 {
                        for cc in 0..3 {
                            expect += c.get(a, b, cc) * before[b].data()[idx] * eps[cc].data()[idx];
                        }
                    }
                    worst = worst.max((after[a].data()[idx] - expect).abs());
                }
            }
            // second-order remainder
            prop_assert!(worst < 50.0 * scale * scale, "worst {worst}");
        }
    }
}
