use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use restframe_core::checks::Suite;
use restframe_core::gauge::{
    ym_color_charges, ym_gauge_transform, ym_gauss, Region, StructureConstants, YmState,
};
use restframe_core::numerics::{Grid3, ScalarField, VectorField3};
use serde::Deserialize;

use super::GridSpec;
use crate::io::{invalid, CliError, OutDir};
use crate::io::read_json;
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    /// `"su2"`, `"su3"` or `"u1"`.
    group: String,
    grid: GridSpec,
    /// Random smooth fields with wave numbers `|m_r| ≤ max_mode` (seed from `--seed`).
    #[serde(default = "one_mode")]
    max_mode: i64,
    #[serde(default = "unit")]
    amplitude: f64,
    regions: Vec<RegionSpec>,
    /// Size of the infinitesimal gauge parameter used for the covariance check.
    #[serde(default = "small")]
    gauge_amplitude: f64,
}

fn one_mode() -> i64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn small() -> f64 {
    1e-4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSpec {
    lo: [usize; 3],
    hi: [usize; 3],
}

fn smooth_scalar(grid: Grid3, rng: &mut ChaCha8Rng, max_mode: i64, amp: f64) -> ScalarField {
    let k = std::f64::consts::TAU / grid.length();
    let mut terms = Vec::new();
    for i in -max_mode..=max_mode {
        for j in -max_mode..=max_mode {
            for l in -max_mode..=max_mode {
                if (i, j, l) == (0, 0, 0) {
                    continue;
                }
                terms.push(([i as f64 * k, j as f64 * k, l as f64 * k], rng.random_range(-amp..amp), rng.random_range(0.0..std::f64::consts::TAU)));
            }
        }
    }
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(kv, c, ph)| c * (kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2] + ph).cos())
            .sum()
    })
}

fn smooth_vector(grid: Grid3, rng: &mut ChaCha8Rng, max_mode: i64, amp: f64) -> VectorField3 {
    VectorField3::from_components(std::array::from_fn(|_| smooth_scalar(grid, rng, max_mode, amp)))
        .expect("same grid")
}

pub fn run(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: Scenario = read_json(path)?;
    let structure = StructureConstants::by_name(&s.group).map_err(invalid)?;
    let grid = s.grid.build()?;
    if 2 * s.max_mode >= grid.n() as i64 || s.max_mode < 1 {
        return Err(CliError::Validation(format!("max_mode {} out of range for n = {}", s.max_mode, grid.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let n = structure.dim;
    let a = (0..n).map(|_| smooth_vector(grid, &mut rng, s.max_mode, s.amplitude)).collect();
    let pi = (0..n).map(|_| smooth_vector(grid, &mut rng, s.max_mode, s.amplitude)).collect();
    let state = YmState::new(structure.clone(), a, pi).map_err(invalid)?;

    let mut rows = Vec::new();
    let mut identity: f64 = 0.0;
    for (ri, r) in s.regions.iter().enumerate() {
        let region = Region::new(r.lo, r.hi);
        for (c, q) in ym_color_charges(&state, &region).map_err(invalid)?.iter().enumerate() {
            identity = identity.max(q.defect().abs());
            rows.push(vec![ri as f64, c as f64, q.strong, q.weak, q.gauss_integral, q.defect()]);
        }
    }
    let out = OutDir::create(&g.out)?;
    out.write_csv("ym_charges.csv", &["region", "color", "q_strong", "q_weak", "gauss_integral", "defect"], &rows)?;

    // Γ_a changes by c_abc Γ_b ε_c to first order in ε
    let eps: Vec<ScalarField> = (0..n)
        .map(|_| smooth_scalar(grid, &mut rng, 1, s.gauge_amplitude))
        .collect();
    let gauss = ym_gauss(&state);
    let moved = ym_gauss(&ym_gauge_transform(&state, &eps).map_err(invalid)?);
    let mut covariance: f64 = 0.0;
    let scale = gauss.iter().map(|x| x.max_abs()).fold(0.0, f64::max) * s.gauge_amplitude;
    for a in 0..n {
        for idx in 0..grid.len() {
            let mut expect = gauss[a].data()[idx];
            for b in 0..n {
                for c in 0..n {
                    expect += structure.get(a, b, c) * gauss[b].data()[idx] * eps[c].data()[idx];
                }
            }
            covariance = covariance.max((moved[a].data()[idx] - expect).abs());
        }
    }

    let mut rep = Reporter::new("ym", Suite::Ym, g);
    rep.check("ym.color_charge_identity", identity, 1e-12);
    let rel = if scale > 0.0 { covariance / scale } else { covariance };
    rep.check("ym.gauss_covariance_relative", rel, 1e3 * s.gauge_amplitude.max(1e-13));
    rep.finish(g, &out)
}
