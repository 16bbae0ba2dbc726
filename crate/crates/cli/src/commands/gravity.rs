use std::path::{Path, PathBuf};

use clap::Subcommand;
use restframe_core::checks::Suite;
use restframe_core::kinematics::{Signature, Vec3};
use restframe_core::numerics::ScalarField;
use restframe_core::york::{
    adm_energy, christoffel_scalar, metric_from_york, pn_evolve, rotation_curve_fit, DeltaProfile,
    FitSettings, GammaMatrix, GravityConstants, PnOptions, PnParticle, RadialRateProfile, RotationCurve,
    UniformRateProfile, YorkBasisPoint, YorkError, YorkGrid, YorkProfile, ZeroProfile,
};
use serde::{Deserialize, Serialize};

use super::{default_every, GridSpec};
use crate::io::{invalid, mat_rows, numerical, read_json, CliError, OutDir};
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Subcommand)]
pub enum GravityMode {
    /// Reconstruct the 4-metric at one York-basis point.
    Metric { point: PathBuf },
    /// Weak ADM energy of York-basis data on a lattice.
    Energy { grid: PathBuf },
    /// Post-Newtonian N-body motion with a York-time inertial-mass shift.
    Pn { scenario: PathBuf },
    /// Fit a mass-shift profile to a rotation curve (CSV columns `r,v`).
    Fit {
        curve: PathBuf,
        #[arg(long)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        /// Comma-separated knot radii; log-spaced over the data when absent.
        #[arg(long, value_delimiter = ',')]
        knots: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        knot_count: usize,
        #[arg(long)]
        nonnegative: bool,
    },
}

fn york_err(e: YorkError) -> CliError {
    match e {
        YorkError::Collision { .. } | YorkError::NonPositiveInertia { .. } | YorkError::Numerics(_) => numerical(e),
        _ => invalid(e),
    }
}

pub fn run(mode: &GravityMode, g: &GlobalOpts) -> Result<bool, CliError> {
    match mode {
        GravityMode::Metric { point } => metric(point, g),
        GravityMode::Energy { grid } => energy(grid, g),
        GravityMode::Pn { scenario } => pn(scenario, g),
        GravityMode::Fit { curve, mass, g: gn, knots, knot_count, nonnegative } => {
            let settings = FitSettings {
                knots: knots.clone(),
                knot_count: *knot_count,
                nonnegative: *nonnegative,
                ..Default::default()
            };
            fit(curve, *mass, *gn, &settings, g)
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricInput {
    #[serde(default)]
    point: YorkBasisPoint,
    /// Explicit `γ` rows; otherwise the reference solution, optionally moved by `gamma_seed`.
    #[serde(default)]
    gamma: Option<GammaMatrix>,
    #[serde(default)]
    gamma_seed: Option<u64>,
    #[serde(default)]
    signature: Signature,
}

#[derive(Serialize)]
struct MetricOutput {
    gamma: GammaMatrix,
    metric: Vec<Vec<f64>>,
    triad: Vec<Vec<f64>>,
    three_determinant: f64,
    lapse_combination: Option<f64>,
    three_eigenvalues: [f64; 3],
}

fn pick_gamma(explicit: Option<GammaMatrix>, seed: Option<u64>) -> Result<GammaMatrix, CliError> {
    match (explicit, seed) {
        (Some(_), Some(_)) => Err(CliError::Validation("give at most one of `gamma` and `gamma_seed`".into())),
        (Some(gm), None) => Ok(gm),
        (None, s) => Ok(GammaMatrix::solve(s)),
    }
}

fn metric(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: MetricInput = read_json(path)?;
    let gamma = pick_gamma(s.gamma, s.gamma_seed)?;
    let m = metric_from_york(&s.point, &gamma, s.signature).map_err(york_err)?;
    let out = OutDir::create(&g.out)?;
    let det = m.three_determinant();
    let lapse = m.lapse_combination();
    let eig = m.three_eigenvalues();
    out.write_json(
        "metric.json",
        &MetricOutput {
            gamma,
            metric: mat_rows(&m.g),
            triad: mat_rows(&m.triad),
            three_determinant: det,
            lapse_combination: lapse,
            three_eigenvalues: eig,
        },
    )?;
    let mut rep = Reporter::new("gravity metric", Suite::Gravity, g);
    rep.check("gamma.residual", gamma.residuals().max(), 1e-12);
    let phi2 = s.point.phi_tilde * s.point.phi_tilde;
    rep.check("metric.determinant_relative", (det - phi2).abs() / phi2, 1e-12);
    let want = s.signature.epsilon() * (1.0 + s.point.n).powi(2);
    let lapse_err = lapse.map_or(f64::INFINITY, |l| (l - want).abs() / want.abs().max(1.0));
    rep.check("metric.lapse_combination", lapse_err, 1e-12);
    // negative margin means the spatial metric is positive definite
    rep.check("metric.min_eigenvalue_margin", -eig[0], 0.0);
    rep.finish(g, &out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyInput {
    grid: GridSpec,
    /// One point per lattice site, row-major `(i*n + j)*n + k`.
    #[serde(default)]
    points: Option<Vec<YorkBasisPoint>>,
    /// Same data at every site.
    #[serde(default)]
    uniform: Option<YorkBasisPoint>,
    #[serde(default)]
    matter: Option<Vec<f64>>,
    #[serde(default)]
    matter_uniform: Option<f64>,
    /// Replace the finite-difference curvature term with these site values.
    #[serde(default)]
    s_override: Option<Vec<f64>>,
    #[serde(default)]
    constants: GravityConstants,
    #[serde(default)]
    gamma: Option<GammaMatrix>,
    #[serde(default)]
    gamma_seed: Option<u64>,
}

#[derive(Serialize)]
struct EnergyOutput {
    adm_energy: f64,
    matter_energy: f64,
    curvature_term_max_abs: f64,
}

fn site_field(grid: restframe_core::numerics::Grid3, v: Vec<f64>, what: &str) -> Result<ScalarField, CliError> {
    ScalarField::from_vec(grid, v).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

fn energy(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: EnergyInput = read_json(path)?;
    s.constants.validate().map_err(york_err)?;
    let grid = s.grid.build()?;
    let gamma = pick_gamma(s.gamma, s.gamma_seed)?;
    let points = match (s.points, s.uniform) {
        (Some(p), None) => YorkGrid::new(grid, p),
        (None, Some(p)) => YorkGrid::uniform(grid, p),
        (None, None) => YorkGrid::uniform(grid, YorkBasisPoint::flat()),
        _ => return Err(CliError::Validation("give at most one of `points` and `uniform`".into())),
    }
    .map_err(york_err)?;
    let matter = match (s.matter, s.matter_uniform) {
        (Some(v), None) => site_field(grid, v, "matter")?,
        (None, Some(m)) => ScalarField::from_fn(grid, |_| m),
        (None, None) => ScalarField::zeros(grid),
        _ => return Err(CliError::Validation("give at most one of `matter` and `matter_uniform`".into())),
    };
    let s_field = match s.s_override {
        Some(v) => site_field(grid, v, "s_override")?,
        None => christoffel_scalar(&points, &gamma).map_err(york_err)?,
    };
    let total = adm_energy(&points, &matter, &gamma, Some(&s_field), &s.constants).map_err(york_err)?;
    let matter_energy = s.constants.c * matter.integral();
    let out = OutDir::create(&g.out)?;
    out.write_json(
        "energy.json",
        &EnergyOutput { adm_energy: total, matter_energy, curvature_term_max_abs: s_field.max_abs() },
    )?;
    let mut rep = Reporter::new("gravity energy", Suite::Gravity, g);
    rep.check("gamma.residual", gamma.residuals().max(), 1e-12);
    rep.check("energy.finite", if total.is_finite() { 0.0 } else { f64::INFINITY }, 0.0);
    rep.finish(g, &out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
enum ProfileSpec {
    Zero,
    Uniform { delta: f64 },
    Radial { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PnInput {
    #[serde(default)]
    constants: GravityConstants,
    particles: Vec<PnParticle>,
    #[serde(default = "zero_profile")]
    profile: ProfileSpec,
    t_span: (f64, f64),
    dt: f64,
    #[serde(default = "default_every")]
    record_every: usize,
    #[serde(default)]
    collision_radius: Option<f64>,
}

fn zero_profile() -> ProfileSpec {
    ProfileSpec::Zero
}

fn pn(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: PnInput = read_json(path)?;
    s.constants.validate().map_err(york_err)?;
    let c = s.constants.c;
    let profile: Box<dyn YorkProfile> = match &s.profile {
        ProfileSpec::Zero => Box::new(ZeroProfile),
        ProfileSpec::Uniform { delta } => Box::new(UniformRateProfile { delta: *delta, c }),
        ProfileSpec::Radial { radii, values } => Box::new(RadialRateProfile {
            delta: DeltaProfile::new(radii.clone(), values.clone()).map_err(york_err)?,
            c,
        }),
    };
    let mut opts = PnOptions { record_every: s.record_every, ..Default::default() };
    if let Some(r) = s.collision_radius {
        opts.collision_radius = r;
    }
    let traj = pn_evolve(&s.particles, profile.as_ref(), &s.constants, s.t_span, s.dt, &opts).map_err(york_err)?;

    let n = s.particles.len();
    let mut rows = Vec::new();
    for k in 0..traj.len() {
        for i in 0..n {
            let (x, v, p) = (traj.positions[k][i], traj.velocities[k][i], traj.momenta[k][i]);
            let mut r = vec![traj.times[k], i as f64];
            r.extend(x.iter().chain(v.iter()).chain(p.iter()));
            rows.push(r);
        }
    }
    let out = OutDir::create(&g.out)?;
    out.write_csv(
        "pn_trajectory.csv",
        &["t", "particle", "x", "y", "z", "vx", "vy", "vz", "px", "py", "pz"],
        &rows,
    )?;

    let last = traj.len() - 1;
    let p0 = traj.total_momentum(0);
    let scale_p = 1.0 + traj.momenta[0].iter().map(|p| p.norm()).sum::<f64>();
    let p_drift = (0..=last).map(|k| (traj.total_momentum(k) - p0).norm()).fold(0.0, f64::max) / scale_p;
    let canonical_l = |k: usize| -> Vec3 {
        traj.positions[k].iter().zip(&traj.momenta[k]).map(|(x, p)| x.cross(p)).sum()
    };
    let l0 = canonical_l(0);
    let l_drift = (0..=last).map(|k| (canonical_l(k) - l0).norm()).fold(0.0, f64::max) / (1.0 + l0.norm());

    let mut rep = Reporter::new("gravity pn", Suite::Gravity, g);
    rep.check("pn.total_momentum_drift", p_drift, 1e-10);
    rep.check("pn.angular_momentum_drift", l_drift, 1e-10);
    if matches!(s.profile, ProfileSpec::Zero) && n > 1 {
        let e0 = traj.newtonian_energy(0, s.constants.g);
        let de = (0..=last)
            .map(|k| (traj.newtonian_energy(k, s.constants.g) - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs().max(f64::MIN_POSITIVE);
        rep.check("pn.newtonian_energy_drift", de, 1e-4);
    }
    rep.finish(g, &out)
}

fn read_curve(path: &Path) -> Result<RotationCurve, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let (mut r, mut v) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (a, b) = rec.map_err(|e| CliError::Validation(format!("{}: record {}: {e}", path.display(), line + 1)))?;
        r.push(a);
        v.push(b);
    }
    RotationCurve::new(r, v).map_err(york_err)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    central_mass: f64,
    g: f64,
    profile: &'a DeltaProfile,
    rms: f64,
    iterations: usize,
    halo: &'a [restframe_core::york::HaloPoint],
}

fn fit(path: &Path, mass: f64, gn: f64, settings: &FitSettings, g: &GlobalOpts) -> Result<bool, CliError> {
    let curve = read_curve(path)?;
    let f = rotation_curve_fit(&curve, mass, gn, settings).map_err(york_err)?;
    let out = OutDir::create(&g.out)?;
    out.write_json(
        "fit.json",
        &FitOutput { central_mass: mass, g: gn, profile: &f.profile, rms: f.rms, iterations: f.iterations, halo: &f.halo },
    )?;
    let rows: Vec<Vec<f64>> = curve
        .radii
        .iter()
        .zip(&curve.speeds)
        .zip(f.predicted.iter().zip(&f.residuals))
        .map(|((r, v), (p, res))| vec![*r, *v, *p, *res, f.profile.eval(*r)])
        .collect();
    out.write_csv("fit_curve.csv", &["r", "v_data", "v_model", "residual", "delta"], &rows)?;

    let mut rep = Reporter::new("gravity fit", Suite::Gravity, g);
    let vmax = curve.speeds.iter().copied().fold(0.0, f64::max);
    rep.note(format!("rms / max speed = {:e}", f.rms / vmax));
    let min_delta = f.profile.values.iter().copied().fold(f64::INFINITY, f64::min);
    // negative margin: 1 + δ stays positive at every knot
    rep.check("fit.inertia_margin", -(1.0 + min_delta), 0.0);
    rep.finish(g, &out)
}
