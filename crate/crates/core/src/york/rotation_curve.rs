use serde::{Deserialize, Serialize};

use super::YorkError;
use crate::numerics::{least_squares_fit_with, FitOptions, NumericsError};

/// Inertial-mass shift `δ(r)`, piecewise linear in `ln r` between knots and
/// constant beyond the outermost ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl DeltaProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self, YorkError> {
        let p = Self { radii, values };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(delta: f64) -> Self {
        Self { radii: vec![1.0], values: vec![delta] }
    }

    pub fn validate(&self) -> Result<(), YorkError> {
        if self.radii.is_empty() || self.radii.len() != self.values.len() {
            return Err(YorkError::InvalidCurve(format!(
                "{} knots but {} values",
                self.radii.len(),
                self.values.len()
            )));
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(YorkError::InvalidCurve("knot radii must be positive".into()));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(YorkError::InvalidCurve("knot radii must increase".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(YorkError::InvalidCurve("non-finite knot value".into()));
        }
        Ok(())
    }

    fn segment(&self, r: f64) -> Option<(usize, f64)> {
        let n = self.radii.len();
        if n == 1 || r <= self.radii[0] || r >= self.radii[n - 1] {
            return None;
        }
        let k = self.radii.partition_point(|&x| x <= r) - 1;
        let (a, b) = (self.radii[k].ln(), self.radii[k + 1].ln());
        Some((k, (r.ln() - a) / (b - a)))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.segment(r) {
            Some((k, s)) => self.values[k] * (1.0 - s) + self.values[k + 1] * s,
            None if r <= self.radii[0] => self.values[0],
            None => *self.values.last().unwrap(),
        }
    }

    /// `dδ/dr`; zero outside the knot range.
    pub fn derivative(&self, r: f64) -> f64 {
        match self.segment(r) {
            Some((k, _)) => {
                let dl = (self.radii[k + 1] / self.radii[k]).ln();
                (self.values[k + 1] - self.values[k]) / (dl * r)
            }
            None => 0.0,
        }
    }
}

/// Observed circular speeds `v_k` at radii `r_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationCurve {
    pub radii: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl RotationCurve {
    pub fn new(radii: Vec<f64>, speeds: Vec<f64>) -> Result<Self, YorkError> {
        if radii.is_empty() {
            return Err(YorkError::InvalidCurve("no samples".into()));
        }
        if radii.len() != speeds.len() {
            return Err(YorkError::InvalidCurve(format!(
                "{} radii but {} speeds",
                radii.len(),
                speeds.len()
            )));
        }
        if radii.iter().chain(&speeds).any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(YorkError::InvalidCurve("radii and speeds must be positive".into()));
        }
        Ok(Self { radii, speeds })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// `v(r) = √(G M / (r (1 + δ(r))))` for test bodies on circular orbits.
pub fn rotation_curve_predict(
    central_mass: f64,
    delta: &DeltaProfile,
    g: f64,
    radii: &[f64],
) -> Result<Vec<f64>, YorkError> {
    radii
        .iter()
        .map(|&r| {
            let d = delta.eval(r);
            if !(d > -1.0) {
                return Err(YorkError::InvalidCurve(format!("δ({r}) = {d} ≤ −1")));
            }
            Ok((g * central_mass / (r * (1.0 + d))).sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    /// Explicit knot radii; when absent, `knot_count` log-spaced knots span
    /// the data.
    pub knots: Option<Vec<f64>>,
    pub knot_count: usize,
    pub nonnegative: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            knots: None,
            knot_count: 8,
            nonnegative: false,
            tol: 1e-14,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaloPoint {
    pub r: f64,
    pub delta: f64,
    /// `M δ(r)`, the first-order halo reading.
    pub delta_mass: f64,
    /// Extra central mass `−M δ/(1 + δ)` giving the same Newtonian speed.
    pub halo_equivalent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationFit {
    pub profile: DeltaProfile,
    pub predicted: Vec<f64>,
    /// `v_model − v_data` per sample.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
    pub halo: Vec<HaloPoint>,
}

fn knot_radii(data: &RotationCurve, s: &FitSettings) -> Result<Vec<f64>, YorkError> {
    let knots = match &s.knots {
        Some(k) => k.clone(),
        None => {
            let lo = data.radii.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = data.radii.iter().cloned().fold(0.0, f64::max);
            let n = s.knot_count;
            match n {
                0 => return Err(YorkError::InvalidArgument("knot_count must be positive".into())),
                1 => vec![(lo * hi).sqrt()],
                _ if hi <= lo => return Err(NumericsError::DegenerateFit.into()),
                _ => (0..n)
                    .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
                    .collect(),
            }
        }
    };
    DeltaProfile::new(knots.clone(), vec![0.0; knots.len()])?;
    Ok(knots)
}

/// Every knot must carry weight at some sample, or its value is undetermined.
fn check_identifiable(knots: &[f64], radii: &[f64]) -> Result<(), YorkError> {
    if knots.len() > radii.len() {
        return Err(NumericsError::DegenerateFit.into());
    }
    let probe_values = vec![0.0; knots.len()];
    for k in 0..knots.len() {
        let mut vals = probe_values.clone();
        vals[k] = 1.0;
        let basis = DeltaProfile { radii: knots.to_vec(), values: vals };
        if radii.iter().all(|&r| basis.eval(r) < 1e-12) {
            return Err(NumericsError::DegenerateFit.into());
        }
    }
    Ok(())
}

/// Inverse circular balance `δ = G M/(r v²) − 1`, sampled at the knots by
/// linear interpolation in `ln r` through the data.
fn initial_delta(data: &RotationCurve, central_mass: f64, g: f64, knots: &[f64]) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = data
        .radii
        .iter()
        .zip(&data.speeds)
        .map(|(&r, &v)| (r, g * central_mass / (r * v * v) - 1.0))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let interp = DeltaProfile {
        radii: pts.iter().map(|p| p.0).collect(),
        values: pts.iter().map(|p| p.1).collect(),
    };
    knots.iter().map(|&r| interp.eval(r)).collect()
}

/// Least-squares fit of the knot values of `δ(r)` to the observed speeds.
pub fn rotation_curve_fit(
    data: &RotationCurve,
    central_mass: f64,
    g: f64,
    settings: &FitSettings,
) -> Result<RotationFit, YorkError> {
    if data.is_empty() {
        return Err(YorkError::InvalidCurve("no samples".into()));
    }
    if !(central_mass > 0.0 && g > 0.0) {
        return Err(YorkError::InvalidArgument("central mass and G must be positive".into()));
    }
    let knots = knot_radii(data, settings)?;
    check_identifiable(&knots, &data.radii)?;
    let guess = initial_delta(data, central_mass, g, &knots);
    let nonneg = settings.nonnegative;
    let to_delta = |p: &[f64]| -> Vec<f64> {
        if nonneg {
            p.iter().map(|s| s * s).collect()
        } else {
            p.to_vec()
        }
    };
    let params0: Vec<f64> = if nonneg {
        guess.iter().map(|d| d.max(1e-4).sqrt()).collect()
    } else {
        guess.iter().map(|d| d.max(-0.99)).collect()
    };
    let model = |r: f64, p: &[f64]| {
        let prof = DeltaProfile { radii: knots.clone(), values: to_delta(p) };
        let d = prof.eval(r);
        if d > -1.0 {
            (g * central_mass / (r * (1.0 + d))).sqrt()
        } else {
            f64::NAN
        }
    };
    let samples: Vec<(f64, f64)> = data.radii.iter().cloned().zip(data.speeds.iter().cloned()).collect();
    let opts = FitOptions { max_iter: settings.max_iter, ..FitOptions::default() };
    let fit = least_squares_fit_with(model, &params0, &samples, settings.tol, opts)?;
    let profile = DeltaProfile::new(knots, to_delta(&fit.params))?;
    let predicted = rotation_curve_predict(central_mass, &profile, g, &data.radii)?;
    let residuals: Vec<f64> = predicted.iter().zip(&data.speeds).map(|(p, v)| p - v).collect();
    let rms = (residuals.iter().map(|x| x * x).sum::<f64>() / residuals.len() as f64).sqrt();
    let halo = data
        .radii
        .iter()
        .map(|&r| {
            let delta = profile.eval(r);
            HaloPoint {
                r,
                delta,
                delta_mass: central_mass * delta,
                halo_equivalent: -central_mass * delta / (1.0 + delta),
            }
        })
        .collect();
    Ok(RotationFit {
        profile,
        predicted,
        residuals,
        rms,
        iterations: fit.iterations,
        halo,
    })
}
