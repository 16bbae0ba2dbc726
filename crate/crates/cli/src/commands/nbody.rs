use std::path::Path;

use restframe_core::checks::Suite;
use restframe_core::kinematics::{Embedding, Vec3, Vec4};
use restframe_core::nbody::{
    evolve, reconstruct_worldlines, two_body_split, NbodyError, Particle, Potential, TwoBodyMass,
    TwoBodySplit,
};
use serde::Deserialize;

use super::{default_every, default_one};
use crate::io::{invalid, numerical, read_json, CliError, OutDir};
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    #[serde(default = "default_one")]
    c: f64,
    #[serde(default)]
    potential: Potential,
    /// Per-particle data `(m, η, κ)`; the pair must be at rest (κ₁ + κ₂ = 0).
    #[serde(default)]
    particles: Option<[Particle; 2]>,
    /// Alternative: relative variables directly.
    #[serde(default)]
    relative: Option<Relative>,
    /// External centre-of-mass velocity `P/Mc` for the world-line embedding.
    #[serde(default)]
    h: Vec3,
    #[serde(default)]
    y0: Vec4,
    tau_span: (f64, f64),
    dt: f64,
    #[serde(default = "default_every")]
    record_every: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Relative {
    m1: f64,
    m2: f64,
    rho: Vec3,
    pi: Vec3,
}

fn initial_split(s: &Scenario) -> Result<TwoBodySplit, CliError> {
    match (&s.particles, &s.relative) {
        (Some([a, b]), None) => {
            a.validate().map_err(invalid)?;
            b.validate().map_err(invalid)?;
            Ok(two_body_split(a, b))
        }
        (None, Some(r)) => Ok(TwoBodySplit {
            eta_plus: Vec3::zeros(),
            kappa_plus: Vec3::zeros(),
            rho: r.rho,
            pi: r.pi,
            m1: r.m1,
            m2: r.m2,
        }),
        _ => Err(CliError::Validation("give exactly one of `particles` or `relative`".into())),
    }
}

fn map_err(e: NbodyError) -> CliError {
    match e {
        NbodyError::Diverged { .. } | NbodyError::BoostConstraint(_) => numerical(e),
        _ => invalid(e),
    }
}

pub fn run(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: Scenario = read_json(path)?;
    if !(s.c > 0.0 && s.c.is_finite()) {
        return Err(CliError::Validation(format!("c = {} must be positive", s.c)));
    }
    let split = initial_split(&s)?;
    if !(split.m1 > 0.0 && split.m2 > 0.0) {
        return Err(CliError::Validation("masses must be positive".into()));
    }
    let mass = TwoBodyMass { m1: split.m1, m2: split.m2, c: s.c, potential: s.potential };
    let traj = evolve(&split, &mass, s.tau_span, s.dt, s.record_every).map_err(map_err)?;
    let out = OutDir::create(&g.out)?;

    let rows: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|p| {
            let mut r = vec![p.tau];
            r.extend(p.rho.iter());
            r.extend(p.pi.iter());
            r.extend(p.eta_plus.iter());
            r.extend([p.mc, p.p_norm, p.j_norm]);
            r
        })
        .collect();
    out.write_csv(
        "nbody_trajectory.csv",
        &[
            "tau", "rho_x", "rho_y", "rho_z", "pi_x", "pi_y", "pi_z", "eta_plus_x", "eta_plus_y", "eta_plus_z",
            "mc", "p_norm", "j_norm",
        ],
        &rows,
    )?;

    let lines = reconstruct_worldlines(&traj, &Embedding::new(s.y0, s.h));
    let mut wl = Vec::new();
    for line in &lines {
        for (tau, x) in &line.points {
            wl.push(vec![*tau, line.particle as f64, x[0], x[1], x[2], x[3]]);
        }
    }
    out.write_csv("nbody_worldlines.csv", &["tau", "particle", "x0", "x1", "x2", "x3"], &wl)?;

    let mut rep = Reporter::new("nbody", Suite::Nbody, g);
    let j0 = traj.first().map_or(0.0, |p| p.j_norm);
    let spin_drift = traj.samples.iter().map(|p| (p.j_norm - j0).abs()).fold(0.0, f64::max);
    let momentum = traj.samples.iter().map(|p| p.p_norm).fold(0.0, f64::max);
    rep.check("nbody.relative_mass_drift", traj.relative_mass_drift(), 1e-6);
    rep.check("nbody.internal_momentum", momentum, 1e-10);
    rep.check("nbody.spin_drift", spin_drift / (1.0 + j0), 1e-10);
    if s.potential.is_free() {
        let pi0 = split.pi;
        let drift = traj.samples.iter().map(|p| (p.pi - pi0).amax()).fold(0.0, f64::max);
        rep.check("nbody.free_relative_momentum_drift", drift, 0.0);
    }
    rep.finish(g, &out)
}
