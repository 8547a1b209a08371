//! End-to-end construction: sample, project, refine, interpolate, certify and
//! export, driven by a TOML configuration.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{
    facet_liouville, liouville_polygon, symplectic_density, weak_norm_seeded, WeakNorm, DEFAULT_ALPHA,
    DEFAULT_HOLDER_SEED,
};
use crate::immersion::{builtin, sample_tri, ImmersionSpec};
use crate::lattice::{Chart, LatticeError};
use crate::mesh::{QuadMesh, TriMesh};
use crate::plmap::{
    build_pl, check_embedding, check_immersion, distances, export_mesh, pl_distance, pl_isotropy_residual,
    triangle_scales, ImmersionWitness, PlMap, DEFAULT_EMBEDDING_TOL, DEFAULT_IMMERSION_TOL, DEFAULT_OVERSAMPLE,
};
use crate::refine::{apex_refine, barycentric_apexes, default_iso_tol, RefineError};
use crate::solver::{project_isotropic, SolveError, SolveOptions, SolveReport};

/// Bound on `|omega|` per triangle, relative to its squared longest edge.
pub const ISOTROPY_CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Built-in map name, e.g. `clifford` or `product:figure8,circle`.
    pub spec: String,
    /// Subdivision count `N`.
    pub n: usize,
    /// Rotation angle (radians) of the reference isometry of the chart.
    pub chart_angle: f64,
    /// Seed for the sampled Hölder seminorm on large charts.
    pub seed: u64,
    pub solver: SolveOptions,
    pub certify: CertifyConfig,
    pub output: OutputConfig,
    pub study: StudyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            spec: "clifford".into(),
            n: 16,
            chart_angle: 0.0,
            seed: DEFAULT_HOLDER_SEED,
            solver: SolveOptions::default(),
            certify: CertifyConfig::default(),
            output: OutputConfig::default(),
            study: StudyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub immersion_tol: f64,
    pub embedding_check: bool,
    /// Relative to the mean image edge length.
    pub embedding_tol: f64,
    /// Subdivisions per triangle edge when sampling distances.
    pub oversample: usize,
    /// Polygon tolerance of the apex system; derived from the solver
    /// tolerance when absent.
    pub iso_tol: Option<f64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            immersion_tol: DEFAULT_IMMERSION_TOL,
            embedding_check: false,
            embedding_tol: DEFAULT_EMBEDDING_TOL,
            oversample: DEFAULT_OVERSAMPLE,
            iso_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving `report.json`, meshes and study tables.
    pub dir: Option<PathBuf>,
    /// Three coordinates for the projected mesh file.
    pub projection: Option<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
    /// Adds per-stage wall times to study tables (they are not reproducible).
    pub timings: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_list: vec![8, 16, 32, 64],
            timings: false,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Config = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if builtin(&self.spec).is_none() {
            return bad(format!("unknown spec `{}`", self.spec));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !positive(self.solver.tol) {
            return bad(format!("solver tolerance must be positive, got {}", self.solver.tol));
        }
        if !positive(self.solver.inner_tol) {
            return bad("inner tolerance must be positive".into());
        }
        if !positive(self.certify.immersion_tol) || !positive(self.certify.embedding_tol) {
            return bad("certification tolerances must be positive".into());
        }
        if self.certify.iso_tol.is_some_and(|t| !positive(t)) {
            return bad("iso_tol must be positive".into());
        }
        if self.certify.oversample == 0 {
            return bad("oversample must be positive".into());
        }
        if !self.chart_angle.is_finite() {
            return bad("chart_angle must be finite".into());
        }
        if let Some(p) = self.output.projection {
            let dim = builtin(&self.spec).map(|s| s.dim()).unwrap_or(0);
            if p.iter().any(|&c| c >= dim) {
                return bad(format!("projection coordinates must be below {dim}"));
            }
        }
        Ok(())
    }

    pub fn immersion(&self) -> ImmersionSpec {
        builtin(&self.spec).expect("validated spec name")
    }

    pub fn chart(&self, n: usize) -> Result<Chart, PipelineError> {
        let spec = self.immersion();
        let (s, c) = self.chart_angle.sin_cos();
        Chart::build(*spec.gamma_basis(), Matrix2::new(c, -s, s, c), n).map_err(PipelineError::Chart)
    }

    pub fn iso_tol(&self, n: usize) -> f64 {
        self.certify.iso_tol.unwrap_or_else(|| default_iso_tol(self.solver.tol, n))
    }
}

/// False for NaN as well as for non-positive values.
fn positive(x: f64) -> bool {
    x > 0.0
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("chart: {0}")]
    Chart(#[source] LatticeError),
    #[error("stage `solve`: {0}")]
    Solve(#[source] SolveError),
    #[error("stage `refine`: {0}")]
    Refine(#[source] RefineError),
    #[error("stage `export`: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code: 2 for configuration, 3 for solver and refinement
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Chart(_) => 2,
            PipelineError::Solve(_) | PipelineError::Refine(_) => 3,
            PipelineError::Io(_) => 1,
        }
    }
}

/// How far down the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Sample,
    Solve,
    Refine,
    Certify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub mu_c0: f64,
    pub mu_c1w: f64,
    pub mu_holder: f64,
    /// Largest facet Liouville integral, `mu_c0 / N^2` by a second route.
    pub liouville_c0: f64,
    /// Sum of `mu` over all facets.
    pub mu_sum: f64,
}

impl DensityReport {
    pub fn of(mesh: &QuadMesh, seed: u64) -> Self {
        let mu = symplectic_density(mesh);
        Self {
            mu_c0: mu.max_abs(),
            mu_c1w: weak_norm_seeded(&mu, WeakNorm::C1w, seed),
            mu_holder: weak_norm_seeded(&mu, WeakNorm::C0AlphaW(DEFAULT_ALPHA), seed),
            liouville_c0: facet_liouville(mesh).max_abs(),
            mu_sum: mu.sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    /// `max |rho' - tau'|` over corners and apexes.
    pub tri_c0: f64,
    /// `max |barycentric apex - tau'|`.
    pub barycentric_c0: f64,
    /// `max |optimal apex - barycenter|`.
    pub apex_offset_c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlReport {
    pub c0: f64,
    pub c1: f64,
    /// Distances of the plain interpolant of the samples.
    pub interpolant_c0: f64,
    pub interpolant_c1: f64,
    /// Piecewise C^1 distance between the map and the plain interpolant.
    pub to_interpolant_c1: f64,
    /// Largest `|omega|` over triangles.
    pub isotropy_residual: f64,
    /// Largest `|omega| / scale^2`, with `scale` the longest edge.
    pub isotropy_ratio: f64,
    /// Largest disagreement between `|omega|` and twice the triangle's
    /// Liouville integral.
    pub liouville_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionReport {
    pub passed: bool,
    pub witnesses: usize,
    /// The first few witnesses, rendered.
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub passed: bool,
    pub threshold: f64,
    /// `(first, second, distance)` triangle pairs.
    pub pairs: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: String,
    pub n: usize,
    pub chart_angle: f64,
    pub m_matrix: [[i64; 2]; 2],
    pub num_facets: usize,
    pub samples: DensityReport,
    pub solve: Option<SolveReport>,
    pub projected: Option<DensityReport>,
    pub refine: Option<RefineReport>,
    pub pl: Option<PlReport>,
    pub immersion: Option<ImmersionReport>,
    pub embedding: Option<EmbeddingReport>,
}

impl Report {
    /// Whether every certification that ran succeeded; `None` before certification.
    pub fn certified(&self) -> Option<bool> {
        let pl = self.pl.as_ref()?;
        let imm = self.immersion.as_ref()?;
        let emb = self.embedding.as_ref().is_none_or(|e| e.passed);
        Some(pl.isotropy_ratio <= ISOTROPY_CERT_TOL && imm.passed && emb)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wall time per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub sample: Duration,
    pub solve: Duration,
    pub refine: Duration,
    pub certify: Duration,
}

/// Meshes produced by a run, as far as it got.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub chart: Chart,
    pub samples: TriMesh,
    pub projected: Option<QuadMesh>,
    pub refined: Option<TriMesh>,
    pub map: Option<PlMap>,
    pub report: Report,
    pub timings: Timings,
}

impl Artifacts {
    /// The most refined triangular mesh available.
    pub fn latest_tri(&self) -> TriMesh {
        match (&self.refined, &self.projected) {
            (Some(t), _) => t.clone(),
            (None, Some(q)) => barycentric_apexes(q),
            (None, None) => self.samples.clone(),
        }
    }
}

pub fn run_pipeline(config: &Config) -> Result<Artifacts, PipelineError> {
    run_stages(config, config.n, Stage::Certify)
}

/// Runs the pipeline at subdivision `n` up to and including `last`.
pub fn run_stages(config: &Config, n: usize, last: Stage) -> Result<Artifacts, PipelineError> {
    config.validate()?;
    let spec = config.immersion();
    let chart = config.chart(n)?;

    let t = Instant::now();
    let samples = sample_tri(&spec, &chart);
    let tau = samples.quad().clone();
    let mut report = Report {
        spec: config.spec.clone(),
        n,
        chart_angle: config.chart_angle,
        m_matrix: chart.m_matrix(),
        num_facets: chart.num_cells(),
        samples: DensityReport::of(&tau, config.seed),
        solve: None,
        projected: None,
        refine: None,
        pl: None,
        immersion: None,
        embedding: None,
    };
    let mut timings = Timings {
        sample: t.elapsed(),
        ..Default::default()
    };
    let mut art = Artifacts {
        chart: chart.clone(),
        samples: samples.clone(),
        projected: None,
        refined: None,
        map: None,
        report: report.clone(),
        timings,
    };
    if last == Stage::Sample {
        return Ok(art);
    }

    let t = Instant::now();
    let (rho, solve) = project_isotropic(&tau, &config.solver).map_err(PipelineError::Solve)?;
    timings.solve = t.elapsed();
    report.projected = Some(DensityReport::of(&rho, config.seed));
    report.solve = Some(solve);
    art.projected = Some(rho.clone());
    if last == Stage::Solve {
        art.report = report;
        art.timings = timings;
        return Ok(art);
    }

    let t = Instant::now();
    let refined = apex_refine(&rho, config.iso_tol(n)).map_err(PipelineError::Refine)?;
    let bary = barycentric_apexes(&rho);
    timings.refine = t.elapsed();
    report.refine = Some(RefineReport {
        tri_c0: refined.c0_distance(&samples),
        barycentric_c0: bary.c0_distance(&samples),
        apex_offset_c0: refined.c0_distance(&bary),
    });
    art.refined = Some(refined.clone());
    if last == Stage::Refine {
        art.report = report;
        art.timings = timings;
        return Ok(art);
    }

    let t = Instant::now();
    let map = build_pl(refined);
    let interp = build_pl(samples);
    let d = distances(&map, &spec, config.certify.oversample);
    let di = distances(&interp, &spec, config.certify.oversample);
    let residuals = pl_isotropy_residual(&map);
    let scales = triangle_scales(&map);
    let mut ratio: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    for (id, (r, s)) in residuals.iter().zip(&scales).enumerate() {
        if *s > 0.0 {
            ratio = ratio.max(r / (s * s));
        }
        let lv = liouville_polygon(&map.triangle_image(id));
        mismatch = mismatch.max((r - 2.0 * lv.abs()).abs());
    }
    report.pl = Some(PlReport {
        c0: d.c0,
        c1: d.c1(),
        interpolant_c0: di.c0,
        interpolant_c1: di.c1(),
        to_interpolant_c1: pl_distance(&map, &interp).c1(),
        isotropy_residual: residuals.iter().copied().fold(0.0, f64::max),
        isotropy_ratio: ratio,
        liouville_mismatch: mismatch,
    });
    let imm = check_immersion(&map, config.certify.immersion_tol);
    report.immersion = Some(ImmersionReport {
        passed: imm.passed(),
        witnesses: imm.witnesses.len(),
        examples: imm.witnesses.iter().take(8).map(describe_witness).collect(),
    });
    if config.certify.embedding_check {
        let emb = check_embedding(&map, config.certify.embedding_tol);
        report.embedding = Some(EmbeddingReport {
            passed: emb.passed(),
            threshold: emb.threshold,
            pairs: emb.pairs.iter().map(|p| (p.first, p.second, p.distance)).collect(),
        });
    }
    timings.certify = t.elapsed();
    art.map = Some(map);
    art.report = report;
    art.timings = timings;
    Ok(art)
}

fn describe_witness(w: &ImmersionWitness) -> String {
    match w {
        ImmersionWitness::Degenerate {
            triangle,
            sigma_min,
            sigma_max,
        } => format!("degenerate triangle {triangle} (sigma {sigma_min:e} / {sigma_max:e})"),
        ImmersionWitness::Fold { node, triangles } => {
            format!("fold at node {node} between triangles {} and {}", triangles.0, triangles.1)
        }
        ImmersionWitness::ConeContact {
            node,
            triangles,
            distance,
        } => format!(
            "cones of triangles {} and {} touch at node {node} (distance {distance:e})",
            triangles.0, triangles.1
        ),
    }
}

/// Writes `report.json` and, when available, `mesh.symmesh` (plus a projected
/// `mesh.obj`) into the configured output directory.
pub fn write_outputs(config: &Config, art: &Artifacts) -> Result<Vec<PathBuf>, PipelineError> {
    let Some(dir) = &config.output.dir else {
        return Ok(Vec::new());
    };
    std::fs::create_dir_all(dir)?;
    let report = dir.join("report.json");
    std::fs::write(&report, art.report.to_json())?;
    let mesh = dir.join("mesh.symmesh");
    let map = art.map.clone().unwrap_or_else(|| build_pl(art.latest_tri()));
    export_mesh(&map, &mesh, config.output.projection)?;
    let mut written = vec![report, mesh.clone()];
    if config.output.projection.is_some() {
        written.push(mesh.with_extension("obj"));
    }
    Ok(written)
}
