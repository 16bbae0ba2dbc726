use std::path::Path;

use restframe_core::checks::Suite;
use restframe_core::gauge::{
    cfl_limit, charge_identity, coulomb_field, decompose, evolve_free_with, gauss_residual, radiation_gauge,
    random_transverse_field, recompose, transverse_mode, ChargeDensity, EmState, GaugeError, PointCharge,
    Region,
};
use restframe_core::numerics::{Spectral, VectorField3};
use serde::Deserialize;

use super::{default_every, GridSpec};
use crate::io::{invalid, numerical, read_json, CliError, OutDir};
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    grid: GridSpec,
    #[serde(default)]
    modes: Vec<ModeSpec>,
    /// Seeded random transverse radiation (seed from `--seed`).
    #[serde(default)]
    random: Option<RandomSpec>,
    #[serde(default)]
    charges: Vec<PointCharge>,
    #[serde(default)]
    charge_width: Option<f64>,
    /// Box `[lo, hi)` for the strong/weak charges; whole lattice by default.
    #[serde(default)]
    region: Option<RegionSpec>,
    /// Start from a generic gauge and run the radiation-gauge cascade.
    #[serde(default)]
    gauge_sequence: bool,
    tau_span: (f64, f64),
    dt: f64,
    #[serde(default = "default_every")]
    record_every: usize,
    /// Write `em_snapshot.bin` with the final transverse fields.
    #[serde(default)]
    snapshot: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSpec {
    m: [i64; 3],
    polarization: [f64; 3],
    amplitude: f64,
    #[serde(default)]
    phase: f64,
    /// `"a"` (vector potential, default) or `"pi"` (electric field).
    #[serde(default = "field_a")]
    field: String,
}

fn field_a() -> String {
    "a".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomSpec {
    max_mode: i64,
    amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSpec {
    lo: [usize; 3],
    hi: [usize; 3],
}

fn gauge_err(e: GaugeError) -> CliError {
    match e {
        GaugeError::Numerics(_) => numerical(e),
        _ => invalid(e),
    }
}

pub fn run(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: Scenario = read_json(path)?;
    let grid = s.grid.build()?;
    let spec = Spectral::new(grid);

    let mut a = VectorField3::zeros(grid);
    let mut pi = VectorField3::zeros(grid);
    for m in &s.modes {
        let f = transverse_mode(grid, m.m, m.polarization, m.amplitude, m.phase).map_err(gauge_err)?;
        match m.field.as_str() {
            "a" => a = a.add(&f),
            "pi" => pi = pi.add(&f),
            other => return Err(CliError::Validation(format!("mode field {other:?} must be \"a\" or \"pi\""))),
        }
    }
    if let Some(r) = &s.random {
        a = a.add(&random_transverse_field(grid, g.seed, r.max_mode, r.amplitude).map_err(gauge_err)?);
        pi = pi.add(&random_transverse_field(grid, g.seed.wrapping_add(1), r.max_mode, r.amplitude).map_err(gauge_err)?);
    }
    let rho = if s.charges.is_empty() {
        ChargeDensity::zeros(grid)
    } else {
        let width = s.charge_width.unwrap_or(3.0 * grid.spacing());
        ChargeDensity::smeared(grid, &s.charges, width).map_err(gauge_err)?
    };
    if !s.charges.is_empty() {
        pi = pi.add(&coulomb_field(&rho).map_err(gauge_err)?);
    }
    let mut state = EmState::zeros(grid);
    state.a = a;
    state.pi = pi;

    let mut rep = Reporter::new("em", Suite::Em, g);
    if s.gauge_sequence {
        // generic gauge: pure-gauge longitudinal A and a nonzero A_τ
        let chi = restframe_core::numerics::ScalarField::from_fn(grid, |x| {
            let k = std::f64::consts::TAU / grid.length();
            (k * x[0]).sin() * (k * x[1]).cos() + 0.5 * (k * x[2]).sin()
        });
        state.a = state.a.add(&spec.gradient(&chi));
        state.a_tau = chi.map(|x| 0.2 * x);
    }
    let d0 = decompose(&state).map_err(gauge_err)?;
    if d0.has_mean_modes() {
        rep.note("A or pi has a nonzero lattice mean; it is kept apart from eta and Gamma and does not evolve");
    }
    let back = recompose(&d0).map_err(gauge_err)?;
    rep.check("em.roundtrip", back.a.max_abs_diff(&state.a).max(back.pi.max_abs_diff(&state.pi)), 1e-12);
    let d = if s.gauge_sequence {
        let (fixed, lambda) = radiation_gauge(&d0);
        rep.check("em.radiation_gauge_multiplier", lambda.max_abs(), 0.0);
        rep.check(
            "em.gauge_fixing_keeps_transverse_sector",
            fixed.a_perp.max_abs_diff(&d0.a_perp).max(fixed.pi_perp.max_abs_diff(&d0.pi_perp)),
            0.0,
        );
        fixed
    } else {
        d0
    };

    let region = match &s.region {
        Some(r) => Region::new(r.lo, r.hi),
        None => Region::whole(grid),
    };
    region.validate(grid).map_err(gauge_err)?;
    let dt_limit = cfl_limit(grid);
    let mut rows = Vec::new();
    let mut failure = None;
    let mut last = None;
    evolve_free_with(&d, s.tau_span, s.dt, s.record_every, |tau, ev| {
        if failure.is_some() {
            return;
        }
        let st = ev.state();
        let res = gauss_residual(&st, &rho).and_then(|gr| {
            let id = charge_identity(&st, &rho, &region)?;
            Ok((gr.max_abs(), id))
        });
        match res {
            Ok((gr, id)) => {
                rows.push(vec![tau, ev.energy(), st.transversality_defect(), gr, id.q_strong, id.q_weak]);
                last = Some(st);
            }
            Err(e) => failure = Some(e),
        }
    })
    .map_err(gauge_err)?;
    if let Some(e) = failure {
        return Err(gauge_err(e));
    }
    let out = OutDir::create(&g.out)?;
    out.write_csv(
        "em_series.csv",
        &["tau", "energy", "transversality", "gauss_residual", "q_strong", "q_weak"],
        &rows,
    )?;

    let col = |j: usize| rows.iter().map(move |r| r[j]);
    let e0 = rows[0][1];
    let energy_dev = col(1).map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE);
    // leapfrog energy error bound from the fastest lattice mode
    let kmax = 3f64.sqrt() * std::f64::consts::PI / grid.spacing();
    let dt = s.dt.min(dt_limit);
    rep.check("em.transversality", col(2).fold(0.0, f64::max), 1e-10);
    rep.check("em.energy_deviation", if e0 > 0.0 { energy_dev } else { 0.0 }, 0.25 * (kmax * dt).powi(2));
    let g0 = rows[0][3];
    rep.check("em.gauss_residual_drift", col(3).map(|x| (x - g0).abs()).fold(0.0, f64::max), 0.0);
    let (qs0, qw0) = (rows[0][4], rows[0][5]);
    rep.check(
        "em.charge_drift",
        rows.iter().map(|r| (r[4] - qs0).abs().max((r[5] - qw0).abs())).fold(0.0, f64::max),
        1e-12,
    );
    rep.check("em.strong_equals_weak", col(4).zip(col(5)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max), 1e-10);

    if s.snapshot {
        let st = last.expect("at least one sample");
        let a = st.a_perp.components();
        let p = st.pi_perp.components();
        out.write_binary(
            "em_snapshot.bin",
            &[a[0].data(), a[1].data(), a[2].data(), p[0].data(), p[1].data(), p[2].data()],
        )?;
        rep.note(format!(
            "em_snapshot.bin: A_perp x,y,z then pi_perp x,y,z; each {n}^3 little-endian f64, index (i*{n}+j)*{n}+k",
            n = grid.n()
        ));
    }
    rep.finish(g, &out)
}
