//! Scene files and the batch pipeline behind the command line tool.
//!
//! A scene is a JSON document listing surfaces, sphere families, sphere pairs
//! and planes together with the analyses to run on each. Running a scene
//! yields an [`AnalysisReport`] plus the mesh and CSV files it refers to.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canal::{detect_canal, CanalReport, Stratum};
use crate::conformal::{classify_pencil, lift_sphere, PencilClass, PolyVector};
use crate::darboux::{classify_tube_plane, singular_series, SingularReport, TubeClass};
use crate::envelope::{causal_classify_family, envelope_mesh, EnvelopeChart, FamilyCausalReport, MeshResolution};
use crate::error::GeomError;
use crate::family::{FamilySpec, SphereFamily};
use crate::jets::DerivativeProvider;
use crate::report::{obj_string, points_csv, sigma_cloud, singular_csv};
use crate::surfaces::{parameter_grid, Chart, SurfaceSpec};
use crate::tolerances::Tolerances;

pub const SCENE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    CanalDetect,
    Dupin,
    Causal,
    Envelope,
    Singularities,
    Pencil,
    PlaneClassify,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::CanalDetect,
        Analysis::Dupin,
        Analysis::Causal,
        Analysis::Envelope,
        Analysis::Singularities,
        Analysis::Pencil,
        Analysis::PlaneClassify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::CanalDetect => "canal-detect",
            Analysis::Dupin => "dupin",
            Analysis::Causal => "causal",
            Analysis::Envelope => "envelope",
            Analysis::Singularities => "singularities",
            Analysis::Pencil => "pencil",
            Analysis::PlaneClassify => "plane-classify",
        }
    }

    fn allowed_for(self, kind: EntryKind) -> bool {
        use Analysis::*;
        match kind {
            EntryKind::Surface => matches!(self, CanalDetect | Dupin),
            EntryKind::Family => matches!(self, CanalDetect | Dupin | Causal | Envelope | Singularities),
            EntryKind::Pencil => self == Pencil,
            EntryKind::Plane => self == PlaneClassify,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Surface,
    Family,
    Pencil,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Samples per chart axis for canal detection.
    pub surface_samples: usize,
    /// Parameter samples for causal classification and singular sets.
    pub family_samples: usize,
    pub mesh: MeshResolution,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            surface_samples: 20,
            family_samples: 64,
            mesh: MeshResolution {
                along: 128,
                angular: 48,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceEntry {
    pub name: String,
    pub surface: SurfaceSpec,
    #[serde(default = "surface_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub provider: DerivativeProvider,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyEntry {
    pub name: String,
    pub family: FamilySpec,
    #[serde(default = "family_analyses")]
    pub analyses: Vec<Analysis>,
}

/// A hypersphere given geometrically or as a raw polyspherical vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SphereInput {
    Geometric { center: Vec<f64>, radius: f64 },
    Vector { vector: Vec<f64> },
}

impl SphereInput {
    fn lift(&self) -> crate::Result<PolyVector> {
        match self {
            SphereInput::Geometric { center, radius } => lift_sphere(center, *radius),
            SphereInput::Vector { vector } => PolyVector::from_coords(vector.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilEntry {
    pub name: String,
    pub first: SphereInput,
    pub second: SphereInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneEntry {
    pub name: String,
    /// Three vectors of the `n = 3` model (five coordinates each).
    pub span: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: String,
    pub meshes: bool,
    pub singular_csv: bool,
    pub sigma_cloud: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            report: "report.json".into(),
            meshes: true,
            singular_csv: true,
            sigma_cloud: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub version: u32,
    pub tolerances: Tolerances,
    pub grid: GridSpec,
    pub surfaces: Vec<SurfaceEntry>,
    pub families: Vec<FamilyEntry>,
    pub pencils: Vec<PencilEntry>,
    pub planes: Vec<PlaneEntry>,
    pub outputs: OutputSpec,
}

impl SceneSpec {
    pub fn empty() -> SceneSpec {
        SceneSpec {
            version: SCENE_VERSION,
            tolerances: Tolerances::default(),
            grid: GridSpec::default(),
            surfaces: Vec::new(),
            families: Vec::new(),
            pencils: Vec::new(),
            planes: Vec::new(),
            outputs: OutputSpec::default(),
        }
    }
}

fn surface_analyses() -> Vec<Analysis> {
    vec![Analysis::CanalDetect]
}

fn family_analyses() -> Vec<Analysis> {
    vec![Analysis::Causal]
}

/// A problem found while reading a scene, located by line/column for syntax
/// errors and by field path otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

fn diag(location: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        location: location.into(),
        message: message.into(),
    }
}

const TOP_LEVEL: [&str; 8] = [
    "version",
    "tolerances",
    "grid",
    "surfaces",
    "families",
    "pencils",
    "planes",
    "outputs",
];

fn parse_field<T: serde::de::DeserializeOwned>(value: Value, location: &str, out: &mut Vec<Diagnostic>) -> Option<T> {
    match serde_json::from_value(value) {
        Ok(v) => Some(v),
        Err(e) => {
            out.push(diag(location, e.to_string()));
            None
        }
    }
}

fn parse_list<T: serde::de::DeserializeOwned>(
    obj: &mut serde_json::Map<String, Value>,
    key: &str,
    out: &mut Vec<Diagnostic>,
) -> Vec<T> {
    let Some(value) = obj.remove(key) else {
        return Vec::new();
    };
    let Value::Array(items) = value else {
        out.push(diag(key, "must be an array"));
        return Vec::new();
    };
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, item)| {
            let name = item.get("name").and_then(Value::as_str).map(|s| format!(" ({s})")).unwrap_or_default();
            parse_field(item, &format!("{key}[{i}]{name}"), out)
        })
        .collect()
}

/// File-name-safe form of an entry name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Parses and checks a scene. Returns every problem found, not just the first.
pub fn parse_scene(text: &str) -> Result<SceneSpec, Vec<Diagnostic>> {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![diag(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )])
        }
    };
    let Value::Object(mut obj) = value else {
        return Err(vec![diag("scene", "must be a JSON object")]);
    };
    let mut out = Vec::new();
    for key in obj.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            out.push(diag(key.clone(), format!("unknown field, expected one of {}", TOP_LEVEL.join(", "))));
        }
    }
    let version = match obj.remove("version") {
        None => {
            out.push(diag("version", "missing scene version"));
            None
        }
        Some(v) => parse_field::<u32>(v, "version", &mut out),
    };
    if let Some(v) = version {
        if v != SCENE_VERSION {
            out.push(diag("version", format!("unsupported scene version {v}, expected {SCENE_VERSION}")));
        }
    }
    let tolerances = obj
        .remove("tolerances")
        .and_then(|v| parse_field::<Tolerances>(v, "tolerances", &mut out))
        .unwrap_or_default();
    for name in tolerances.invalid_fields() {
        out.push(diag(format!("tolerances.{name}"), "must be positive"));
    }
    let grid = obj
        .remove("grid")
        .and_then(|v| parse_field::<GridSpec>(v, "grid", &mut out))
        .unwrap_or_default();
    out.extend(grid_diagnostics(&grid));
    let outputs = obj
        .remove("outputs")
        .and_then(|v| parse_field::<OutputSpec>(v, "outputs", &mut out))
        .unwrap_or_default();
    if outputs.report.is_empty() || outputs.report.contains(['/', '\\']) {
        out.push(diag("outputs.report", "must be a plain file name"));
    }
    let scene = SceneSpec {
        version: version.unwrap_or(SCENE_VERSION),
        tolerances,
        grid,
        surfaces: parse_list(&mut obj, "surfaces", &mut out),
        families: parse_list(&mut obj, "families", &mut out),
        pencils: parse_list(&mut obj, "pencils", &mut out),
        planes: parse_list(&mut obj, "planes", &mut out),
        outputs,
    };
    out.extend(entry_diagnostics(&scene));
    if out.is_empty() {
        Ok(scene)
    } else {
        Err(out)
    }
}

/// Diagnostics for a scene file; an unreadable file is an I/O error.
pub fn validate_scene(path: &Path) -> std::io::Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_scene(&text).err().unwrap_or_default())
}

fn grid_diagnostics(grid: &GridSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut range = |field: &str, v: usize, lo: usize, hi: usize| {
        if v < lo || v > hi {
            out.push(diag(format!("grid.{field}"), format!("must lie in [{lo}, {hi}], got {v}")));
        }
    };
    range("surface_samples", grid.surface_samples, 2, 2000);
    range("family_samples", grid.family_samples, 1, 100_000);
    range("mesh.along", grid.mesh.along, 2, 100_000);
    range("mesh.angular", grid.mesh.angular, 3, 100_000);
    out
}

fn entry_diagnostics(scene: &SceneSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut stems = BTreeSet::new();
    let mut names = |loc: &str, name: &str, out: &mut Vec<Diagnostic>| {
        if name.trim().is_empty() {
            out.push(diag(format!("{loc}.name"), "must not be empty"));
        } else if !stems.insert(file_stem(name)) {
            out.push(diag(format!("{loc}.name"), format!("duplicate entry name {name:?}")));
        }
    };
    let check_analyses = |loc: &str, list: &[Analysis], kind: EntryKind, out: &mut Vec<Diagnostic>| {
        let mut seen = BTreeSet::new();
        for a in list {
            if !a.allowed_for(kind) {
                out.push(diag(format!("{loc}.analyses"), format!("{} does not apply to a {kind:?} entry", a.name())));
            }
            if !seen.insert(*a) {
                out.push(diag(format!("{loc}.analyses"), format!("{} requested twice", a.name())));
            }
        }
    };
    for (i, e) in scene.surfaces.iter().enumerate() {
        let loc = format!("surfaces[{i}] ({})", e.name);
        names(&loc, &e.name, &mut out);
        for (field, msg) in e.surface.diagnostics() {
            out.push(diag(format!("{loc}.surface.{field}"), msg));
        }
        check_analyses(&loc, &e.analyses, EntryKind::Surface, &mut out);
        if let DerivativeProvider::FiniteDifference { step, third_step } = e.provider {
            if !(step > 0.0 && third_step > 0.0) {
                out.push(diag(format!("{loc}.provider"), "steps must be positive"));
            }
        }
    }
    for (i, e) in scene.families.iter().enumerate() {
        let loc = format!("families[{i}] ({})", e.name);
        names(&loc, &e.name, &mut out);
        let problems = e.family.diagnostics();
        for (field, msg) in &problems {
            out.push(diag(format!("{loc}.family.{field}"), msg.clone()));
        }
        check_analyses(&loc, &e.analyses, EntryKind::Family, &mut out);
        if problems.is_empty() {
            match e.family.build() {
                Ok(f) => {
                    if e.analyses.contains(&Analysis::Singularities) && (f.dim_n() != 3 || f.rank() != 1) {
                        out.push(diag(
                            format!("{loc}.analyses"),
                            "singularities needs a one-parameter family in R^3",
                        ));
                    }
                    if e.analyses.contains(&Analysis::Dupin) && f.dim_n() != 3 {
                        out.push(diag(format!("{loc}.analyses"), "dupin applies to surfaces in R^3"));
                    }
                }
                Err(err) => out.push(diag(format!("{loc}.family"), err.to_string())),
            }
        }
    }
    for (i, e) in scene.pencils.iter().enumerate() {
        let loc = format!("pencils[{i}] ({})", e.name);
        names(&loc, &e.name, &mut out);
        let mut dims = Vec::new();
        for (field, s) in [("first", &e.first), ("second", &e.second)] {
            if let SphereInput::Geometric { radius, .. } = s {
                if !(*radius > 0.0 && radius.is_finite()) {
                    out.push(diag(format!("{loc}.{field}.radius"), format!("must be positive, got {radius}")));
                    continue;
                }
            }
            match s.lift() {
                Ok(v) => dims.push(v.dim_n()),
                Err(err) => out.push(diag(format!("{loc}.{field}"), err.to_string())),
            }
        }
        if dims.len() == 2 && dims[0] != dims[1] {
            out.push(diag(&loc, format!("spheres live in different dimensions ({} and {})", dims[0], dims[1])));
        }
    }
    for (i, e) in scene.planes.iter().enumerate() {
        let loc = format!("planes[{i}] ({})", e.name);
        names(&loc, &e.name, &mut out);
        if e.span.len() != 3 || e.span.iter().any(|v| v.len() != 5) {
            out.push(diag(format!("{loc}.span"), "needs three vectors with five coordinates each"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub scene_version: u32,
    /// Seconds since the Unix epoch; the only field that differs between runs.
    pub timestamp: u64,
    pub tolerances: Tolerances,
    pub grid: GridSpec,
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanalSummary {
    pub surface: String,
    pub samples: usize,
    pub strata: Vec<Stratum>,
    pub is_canal: bool,
    pub umbilic_samples: usize,
    pub failed_samples: usize,
    pub coincides_with_hypersphere: bool,
    pub max_apolarity_a: f64,
    pub max_apolarity_a3: f64,
    pub max_symmetry_lam3: f64,
    pub warnings: Vec<String>,
}

impl CanalSummary {
    fn new(r: &CanalReport) -> CanalSummary {
        CanalSummary {
            surface: r.surface.clone(),
            samples: r.samples.len(),
            strata: r.strata.clone(),
            is_canal: r.is_canal(),
            umbilic_samples: r.umbilic_samples,
            failed_samples: r.failed_samples,
            coincides_with_hypersphere: r.coincides_with_hypersphere,
            max_apolarity_a: r.max_apolarity_a,
            max_apolarity_a3: r.max_apolarity_a3,
            max_symmetry_lam3: r.max_symmetry_lam3,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DupinSummary {
    pub dupin: bool,
    /// Largest normalized `‖a_ijk‖` over the grid.
    pub max_a3_relative: f64,
    pub samples_without_a3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub vertices: usize,
    pub faces: usize,
    pub skipped_samples: usize,
    /// Largest `| |p − c| − ρ |` over the vertices.
    pub max_sphere_residual: f64,
    pub file: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleError {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSummary {
    pub samples: usize,
    pub with_singular_points: usize,
    pub double_points: usize,
    pub min_discriminant: f64,
    pub max_discriminant: f64,
    pub max_circle_residual: f64,
    pub max_focal_residual: f64,
    pub csv: Option<String>,
    pub sigma_cloud: Option<String>,
    pub errors: Vec<SampleError>,
    pub series: Vec<SingularReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnalysisResult {
    Canal(CanalSummary),
    Dupin(DupinSummary),
    Causal(FamilyCausalReport),
    Envelope(EnvelopeSummary),
    Singularities(SingularSummary),
    Pencil(PencilClass),
    Plane { class: TubeClass },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Result(AnalysisResult),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRecord {
    pub analysis: Analysis,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub kind: EntryKind,
    pub label: String,
    pub results: Vec<AnalysisRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub entries: Vec<EntryReport>,
    /// Number of analyses that ended in an error.
    pub errors: usize,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutput {
    pub report: AnalysisReport,
    /// Meshes and CSV files referenced by the report, in entry order.
    pub files: Vec<OutputFile>,
}

impl SceneOutput {
    /// Writes the report and every emitted file into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in &self.files {
            let p = dir.join(&f.name);
            std::fs::write(&p, &f.contents)?;
            written.push(p);
        }
        let p = dir.join(&self.report.provenance.outputs.report);
        std::fs::write(&p, self.report.to_json())?;
        written.push(p);
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 lets the thread pool decide.
    pub jobs: usize,
}

struct EntryRun {
    report: EntryReport,
    files: Vec<OutputFile>,
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs every requested analysis. Entries run concurrently; the report and the
/// files come out in scene order whatever the parallelism.
pub fn run_scene(scene: &SceneSpec, opts: RunOptions) -> Result<SceneOutput, GeomError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| GeomError::Domain(format!("thread pool: {e}")))?;
    let ctx = Context {
        tol: scene.tolerances,
        grid: scene.grid,
        outputs: scene.outputs.clone(),
    };
    let mut jobs: Vec<EntryJob<'_>> = Vec::new();
    for e in &scene.surfaces {
        jobs.push(Box::new(move |c| run_surface(e, c)));
    }
    for e in &scene.families {
        jobs.push(Box::new(move |c| run_family(e, c)));
    }
    for e in &scene.pencils {
        jobs.push(Box::new(move |c| run_pencil(e, c)));
    }
    for e in &scene.planes {
        jobs.push(Box::new(move |c| run_plane(e, c)));
    }
    let runs: Vec<EntryRun> = pool.install(|| jobs.par_iter().map(|j| j(&ctx)).collect());
    let mut entries = Vec::with_capacity(runs.len());
    let mut files = Vec::new();
    for r in runs {
        entries.push(r.report);
        files.extend(r.files);
    }
    let errors = entries
        .iter()
        .flat_map(|e| &e.results)
        .filter(|r| matches!(r.outcome, Outcome::Error(_)))
        .count();
    Ok(SceneOutput {
        report: AnalysisReport {
            provenance: Provenance {
                tool: "canal".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                scene_version: scene.version,
                timestamp: now(),
                tolerances: scene.tolerances,
                grid: scene.grid,
                outputs: scene.outputs.clone(),
            },
            entries,
            errors,
        },
        files,
    })
}

type EntryJob<'a> = Box<dyn Fn(&Context) -> EntryRun + Send + Sync + 'a>;

struct Context {
    tol: Tolerances,
    grid: GridSpec,
    outputs: OutputSpec,
}

fn record(analysis: Analysis, r: Result<AnalysisResult, String>) -> AnalysisRecord {
    AnalysisRecord {
        analysis,
        outcome: match r {
            Ok(v) => Outcome::Result(v),
            Err(e) => Outcome::Error(e),
        },
    }
}

fn all_failed(name: &str, kind: EntryKind, analyses: &[Analysis], message: String) -> EntryRun {
    EntryRun {
        report: EntryReport {
            name: name.to_string(),
            kind,
            label: String::new(),
            results: analyses.iter().map(|a| record(*a, Err(message.clone()))).collect(),
        },
        files: Vec::new(),
    }
}

fn canal_records(chart: &dyn Chart, analyses: &[Analysis], provider: DerivativeProvider, ctx: &Context) -> Vec<AnalysisRecord> {
    let mut out = Vec::new();
    let wanted = |a| analyses.contains(&a);
    if !(wanted(Analysis::CanalDetect) || wanted(Analysis::Dupin)) {
        return out;
    }
    let dom = chart.domain();
    let grid = parameter_grid(&dom, &vec![ctx.grid.surface_samples; dom.len()]);
    let report = detect_canal(chart, &grid, &ctx.tol, provider);
    for a in analyses {
        match a {
            Analysis::CanalDetect => {
                let r = if report.failed_samples == report.samples.len() {
                    Err(format!("every sample failed: {}", report.warnings.join("; ")))
                } else {
                    Ok(AnalysisResult::Canal(CanalSummary::new(&report)))
                };
                out.push(record(*a, r));
            }
            Analysis::Dupin => {
                let r = if chart.dim_n() != 3 {
                    Err("dupin applies to surfaces in R^3".to_string())
                } else {
                    let live = report.samples.iter().filter(|s| s.error.is_none() && !s.umbilic);
                    let (mut worst, mut missing) = (0.0f64, 0usize);
                    for s in live {
                        match s.a3_relative {
                            Some(x) => worst = worst.max(x),
                            None => missing += 1,
                        }
                    }
                    Ok(AnalysisResult::Dupin(DupinSummary {
                        dupin: report.dupin,
                        max_a3_relative: worst,
                        samples_without_a3: missing,
                    }))
                };
                out.push(record(*a, r));
            }
            _ => {}
        }
    }
    out
}

fn run_surface(e: &SurfaceEntry, ctx: &Context) -> EntryRun {
    let chart = match e.surface.build() {
        Ok(c) => c,
        Err(err) => return all_failed(&e.name, EntryKind::Surface, &e.analyses, err.to_string()),
    };
    EntryRun {
        report: EntryReport {
            name: e.name.clone(),
            kind: EntryKind::Surface,
            label: chart.label(),
            results: canal_records(chart.as_ref(), &e.analyses, e.provider, ctx),
        },
        files: Vec::new(),
    }
}

fn family_grid(f: &dyn SphereFamily, samples: usize) -> Vec<Vec<f64>> {
    let dom = f.domain();
    let per_axis = if f.rank() == 1 {
        samples
    } else {
        (samples as f64).powf(1.0 / f.rank() as f64).ceil() as usize
    };
    parameter_grid(&dom, &vec![per_axis.max(1); dom.len()])
}

fn run_family(e: &FamilyEntry, ctx: &Context) -> EntryRun {
    let family: Arc<dyn SphereFamily> = match e.family.build() {
        Ok(f) => f,
        Err(err) => return all_failed(&e.name, EntryKind::Family, &e.analyses, err.to_string()),
    };
    let stem = file_stem(&e.name);
    let mut files = Vec::new();
    let mut results = Vec::new();
    let chart = EnvelopeChart::new(family.clone());
    let grid = family_grid(family.as_ref(), ctx.grid.family_samples);
    let mut canal_done = false;
    for a in &e.analyses {
        match a {
            Analysis::Causal => {
                let r = causal_classify_family(family.as_ref(), &grid, &ctx.tol);
                results.push(record(*a, Ok(AnalysisResult::Causal(r))));
            }
            Analysis::Envelope => {
                let mesh = envelope_mesh(family.clone(), ctx.grid.mesh, &ctx.tol);
                if mesh.vertices.is_empty() {
                    results.push(record(*a, Err(format!("no sample produced a real characteristic: {}", mesh.warnings.join("; ")))));
                    continue;
                }
                let max_sphere_residual = mesh
                    .params
                    .iter()
                    .zip(&mesh.vertices)
                    .map(|(u, p)| {
                        let (c, rho) = family.center_radius(&u[..family.rank()]);
                        let d = p.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                        (d - rho).abs()
                    })
                    .fold(0.0, f64::max);
                let file = ctx.outputs.meshes.then(|| {
                    let (name, contents) = if family.dim_n() == 3 && family.rank() == 1 {
                        (format!("{stem}_envelope.obj"), obj_string(&mesh, &format!("envelope of {}", family.label())))
                    } else {
                        (format!("{stem}_envelope.csv"), points_csv(&mesh.vertices))
                    };
                    files.push(OutputFile {
                        name: name.clone(),
                        contents,
                    });
                    name
                });
                results.push(record(
                    *a,
                    Ok(AnalysisResult::Envelope(EnvelopeSummary {
                        vertices: mesh.vertices.len(),
                        faces: mesh.faces.len(),
                        skipped_samples: mesh.skipped.len(),
                        max_sphere_residual,
                        file,
                        warnings: mesh.warnings,
                    })),
                ));
            }
            Analysis::Singularities => {
                results.push(record(*a, singularities(&chart, &grid, &stem, ctx, &mut files)));
            }
            Analysis::CanalDetect | Analysis::Dupin => {
                if !canal_done {
                    canal_done = true;
                    results.extend(canal_records(&chart, &e.analyses, DerivativeProvider::Analytic, ctx));
                }
            }
            Analysis::Pencil | Analysis::PlaneClassify => {
                results.push(record(*a, Err(format!("{} does not apply to families", a.name()))));
            }
        }
    }
    // canal records were appended in request order; restore it
    results.sort_by_key(|r| e.analyses.iter().position(|a| *a == r.analysis));
    EntryRun {
        report: EntryReport {
            name: e.name.clone(),
            kind: EntryKind::Family,
            label: family.label(),
            results,
        },
        files,
    }
}

fn singularities(
    chart: &EnvelopeChart,
    grid: &[Vec<f64>],
    stem: &str,
    ctx: &Context,
    files: &mut Vec<OutputFile>,
) -> Result<AnalysisResult, String> {
    let f = chart.family.as_ref();
    if f.dim_n() != 3 || f.rank() != 1 {
        return Err("singularities needs a one-parameter family in R^3".into());
    }
    let ts: Vec<f64> = grid.iter().map(|t| t[0]).collect();
    let mut series = Vec::new();
    let mut errors = Vec::new();
    for (t, r) in ts.iter().zip(singular_series(chart, &ts, &ctx.tol)) {
        match r {
            Ok(rep) => series.push(rep),
            Err(e) => errors.push(SampleError {
                t: *t,
                message: e.to_string(),
            }),
        }
    }
    if series.is_empty() {
        return Err(format!(
            "no sample admits an adapted frame: {}",
            errors.first().map(|e| e.message.as_str()).unwrap_or("no samples")
        ));
    }
    let fold = |f: &dyn Fn(&SingularReport) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        series.iter().map(f).fold(init, pick)
    };
    let csv = ctx.outputs.singular_csv.then(|| {
        let name = format!("{stem}_singular.csv");
        files.push(OutputFile {
            name: name.clone(),
            contents: singular_csv(&series),
        });
        name
    });
    let cloud = ctx.outputs.sigma_cloud.then(|| {
        let name = format!("{stem}_sigma.xyz");
        files.push(OutputFile {
            name: name.clone(),
            contents: sigma_cloud(&series),
        });
        name
    });
    let residual = |pick: fn(&crate::darboux::SingularPoint) -> f64| {
        series.iter().flat_map(|r| r.points.iter().map(pick)).fold(0.0, f64::max)
    };
    Ok(AnalysisResult::Singularities(SingularSummary {
        samples: ts.len(),
        with_singular_points: series.iter().filter(|r| r.count > 0).count(),
        double_points: series.iter().filter(|r| r.double).count(),
        min_discriminant: fold(&|r| r.discriminant, f64::INFINITY, f64::min),
        max_discriminant: fold(&|r| r.discriminant, f64::NEG_INFINITY, f64::max),
        max_circle_residual: residual(|p| p.circle_residual),
        max_focal_residual: residual(|p| p.focal_residual),
        csv,
        sigma_cloud: cloud,
        errors,
        series,
    }))
}

fn run_pencil(e: &PencilEntry, ctx: &Context) -> EntryRun {
    let r = e
        .first
        .lift()
        .and_then(|x| e.second.lift().map(|y| (x, y)))
        .and_then(|(x, y)| classify_pencil(&x, &y, &ctx.tol))
        .map(AnalysisResult::Pencil)
        .map_err(|err| err.to_string());
    EntryRun {
        report: EntryReport {
            name: e.name.clone(),
            kind: EntryKind::Pencil,
            label: "sphere pair".into(),
            results: vec![record(Analysis::Pencil, r)],
        },
        files: Vec::new(),
    }
}

fn run_plane(e: &PlaneEntry, ctx: &Context) -> EntryRun {
    let r = e
        .span
        .iter()
        .map(|v| PolyVector::new(3, v.clone()))
        .collect::<crate::Result<Vec<_>>>()
        .and_then(|span| classify_tube_plane(&span, &ctx.tol))
        .map(|class| AnalysisResult::Plane { class })
        .map_err(|err| err.to_string());
    EntryRun {
        report: EntryReport {
            name: e.name.clone(),
            kind: EntryKind::Plane,
            label: "plane of P^4".into(),
            results: vec![record(Analysis::PlaneClassify, r)],
        },
        files: Vec::new(),
    }
}

/// Catalog listing used by `canal catalog`.
pub fn catalog() -> BTreeMap<&'static str, Vec<(String, String)>> {
    let mut m = BTreeMap::new();
    m.insert(
        "surfaces",
        crate::surfaces::SURFACE_CATALOG
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    );
    m.insert(
        "families",
        crate::family::FAMILY_CATALOG
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    );
    m.insert(
        "analyses",
        Analysis::ALL
            .iter()
            .map(|a| {
                let applies = [EntryKind::Surface, EntryKind::Family, EntryKind::Pencil, EntryKind::Plane]
                    .into_iter()
                    .filter(|k| a.allowed_for(*k))
                    .map(|k| format!("{k:?}").to_lowercase())
                    .collect::<Vec<_>>()
                    .join(", ");
                (a.name().to_string(), format!("applies to: {applies}"))
            })
            .collect(),
    );
    let tol = Tolerances::default();
    let json = serde_json::to_value(tol).unwrap_or_default();
    m.insert(
        "tolerances",
        Tolerances::NAMES
            .iter()
            .map(|n| (n.to_string(), format!("default {}", json[*n])))
            .collect(),
    );
    m
}
