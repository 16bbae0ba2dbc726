use std::path::Path;

use restframe_core::checks::Suite;
use restframe_core::kinematics::{
    external_generators, moller_radius, wigner_boost, Conventions, Embedding, JacobiData, Vec3, Vec4,
};
use serde::{Deserialize, Serialize};

use crate::io::{invalid, mat_rows, read_json, CliError, OutDir};
use crate::report::Reporter;
use crate::GlobalOpts;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    #[serde(default)]
    conventions: Conventions,
    #[serde(default)]
    boosts: Vec<Vec3>,
    #[serde(default)]
    jacobi: Vec<JacobiData>,
    #[serde(default)]
    embedding: Option<EmbeddingSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingSpec {
    #[serde(default)]
    y0: Vec4,
    h: Vec3,
    points: Vec<EmbedPoint>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EmbedPoint {
    tau: f64,
    sigma: Vec3,
}

#[derive(Serialize)]
struct BoostOut {
    h: Vec3,
    matrix: Vec<Vec<f64>>,
    metric_defect: f64,
}

#[derive(Serialize)]
struct GeneratorsOut {
    p: Vec4,
    j: Vec3,
    k: Vec3,
    mass_shell: f64,
    moller_radius: f64,
}

#[derive(Serialize)]
struct EmbeddedOut {
    tau: f64,
    sigma: Vec3,
    x: Vec4,
}

#[derive(Serialize)]
struct Output {
    boosts: Vec<BoostOut>,
    generators: Vec<GeneratorsOut>,
    embedding: Vec<EmbeddedOut>,
}

pub fn run(path: &Path, g: &GlobalOpts) -> Result<bool, CliError> {
    let s: Scenario = read_json(path)?;
    s.conventions.validate().map_err(invalid)?;
    let sig = s.conventions.epsilon;
    let out = OutDir::create(&g.out)?;
    let mut rep = Reporter::new("kinematics", Suite::Kinematics, g);

    let boosts: Vec<BoostOut> = s
        .boosts
        .iter()
        .map(|h| {
            let b = wigner_boost(h);
            BoostOut { h: *h, matrix: mat_rows(b.matrix()), metric_defect: b.metric_defect(sig) }
        })
        .collect();
    let worst_boost = boosts.iter().map(|b| b.metric_defect).fold(0.0, f64::max);

    let mut shell: f64 = 0.0;
    let generators = s
        .jacobi
        .iter()
        .map(|d| {
            let gens = external_generators(d);
            let m = gens.mass_shell(sig);
            shell = shell.max((m - d.mc * d.mc).abs() / (d.mc * d.mc));
            Ok(GeneratorsOut {
                p: gens.p,
                j: gens.j,
                k: gens.k,
                mass_shell: m,
                moller_radius: moller_radius(d.mc, &d.spin).map_err(invalid)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut embedding = Vec::new();
    let mut fokker_pryce: f64 = 0.0;
    if let Some(e) = &s.embedding {
        let emb = Embedding::new(e.y0, e.h);
        for p in &e.points {
            embedding.push(EmbeddedOut { tau: p.tau, sigma: p.sigma, x: emb.embed(p.tau, &p.sigma) });
            let origin = emb.embed(p.tau, &Vec3::zeros());
            fokker_pryce = fokker_pryce.max((origin - emb.fokker_pryce(p.tau)).amax());
        }
    }

    rep.check("boost.metric_defect", worst_boost, 1e-12);
    rep.check("generators.mass_shell", shell, 1e-12);
    rep.check("embedding.origin_is_centroid", fokker_pryce, 1e-12);
    out.write_json("kinematics.json", &Output { boosts, generators, embedding })?;
    rep.finish(g, &out)
}
