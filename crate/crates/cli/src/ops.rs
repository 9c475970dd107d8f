//! The operations shared by subcommands and scenarios. Each takes a JSON
//! argument object, which is parsed (and its names resolved) before
//! anything runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fractembed::embed::{
    bb_search, iterate_rescale_sequence, structure_find, verify_with, ParamBox, SearchOptions, VerdictStatus,
    VerifyMode, VerifyOptions,
};
use fractembed::group::{group_closure, DEFAULT_GROUP_CAP};
use fractembed::ifs::{bounding_ball, check_ssc, presets, similarity_dimension, AffineMap2, Ifs, SscVerdict};
use fractembed::measure::{dimension_conservation_check, entropy_dimension, SelfSimilarMeasure};
use fractembed::numerics::{eigen_analyze, Matrix2, Scalar, ScalarMode, Vector2};
use fractembed::slice::{
    approx_slice_sequence, approx_slices, gallery_delta, gdifs_dimension, miniset_gallery, project_gdifs,
    psi_xr_count, slice_cover, sn_number, vertical_slice_gallery, wsc_test, AffineLine, WscVerdict,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cache::{self, CacheUse};
use crate::error::{CliError, Result};
use crate::render::{write_svg, SvgStyle};
use crate::report::Status;

/// Names accepted in the `op` field, in the order of the CLI surface.
pub const OPS: [&str; 14] = [
    "analyze",
    "embed-check",
    "embed-search",
    "structure",
    "rescale",
    "eigen",
    "entropy",
    "conservation",
    "slice",
    "approx-slices",
    "project",
    "wsc",
    "gallery",
    "render",
];

/// Flags shared by every operation; per-command arguments win.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub depth: Option<usize>,
    pub eps: Option<f64>,
    pub seed: u64,
    pub strict: bool,
}

pub struct Context {
    pub ifs: BTreeMap<String, Ifs>,
    pub measures: BTreeMap<String, SelfSimilarMeasure>,
    pub globals: Globals,
    /// Relative IFS file paths are resolved here.
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(globals: Globals, out_dir: PathBuf) -> Self {
        Context { ifs: BTreeMap::new(), measures: BTreeMap::new(), globals, base_dir: PathBuf::from("."), out_dir }
    }
}

/// An IFS by scenario name, preset name, JSON file path, or inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IfsRef {
    Name(String),
    Inline(Ifs),
}

impl IfsRef {
    pub fn resolve(&self, ctx: &Context) -> Result<Ifs> {
        match self {
            IfsRef::Inline(f) => Ok(f.clone()),
            IfsRef::Name(n) => {
                if let Some(f) = ctx.ifs.get(n) {
                    return Ok(f.clone());
                }
                if let Some(f) = presets::by_name(n) {
                    return Ok(f);
                }
                if n.ends_with(".json") {
                    let p = ctx.base_dir.join(n);
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                    return Ok(serde_json::from_str(&text)?);
                }
                Err(CliError::UnknownName(n.clone()))
            }
        }
    }
}

/// A measure by scenario name, inline `{ifs, weights}`, or an IFS
/// reference carrying its natural measure.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MeasureRef {
    Name(String),
    Inline { ifs: IfsRef, weights: Option<Vec<Scalar>> },
}

impl MeasureRef {
    pub fn resolve(&self, ctx: &Context) -> Result<SelfSimilarMeasure> {
        match self {
            MeasureRef::Name(n) => match ctx.measures.get(n) {
                Some(m) => Ok(m.clone()),
                None => Ok(SelfSimilarMeasure::natural(IfsRef::Name(n.clone()).resolve(ctx)?)),
            },
            MeasureRef::Inline { ifs, weights } => build_measure(ifs.resolve(ctx)?, weights.as_deref()),
        }
    }
}

pub fn build_measure(ifs: Ifs, weights: Option<&[Scalar]>) -> Result<SelfSimilarMeasure> {
    Ok(match weights {
        None => SelfSimilarMeasure::natural(ifs),
        Some(w) => SelfSimilarMeasure::new(ifs, w.iter().map(Scalar::to_f64).collect())?,
    })
}

fn mode_of(exact: bool) -> ScalarMode {
    if exact {
        ScalarMode::Exact
    } else {
        ScalarMode::Interval
    }
}

/// What an operation hands back to the report writer.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub mode: ScalarMode,
    pub eps: Option<f64>,
    pub depth: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    /// Side files as `(suffix, contents)`, written next to the report.
    pub tables: Vec<(&'static str, String)>,
    /// Files written by the operation itself.
    pub files: Vec<PathBuf>,
    pub cache: CacheUse,
}

impl Outcome {
    fn new(result: Value, mode: ScalarMode) -> Self {
        Outcome {
            status: Status::Ok,
            result,
            mode,
            eps: None,
            depth: None,
            tolerances: BTreeMap::new(),
            tables: Vec::new(),
            files: Vec::new(),
            cache: CacheUse::Off,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeArgs {
    ifs: IfsRef,
    depth: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedCheckArgs {
    map: AffineMap2,
    source: IfsRef,
    target: Option<IfsRef>,
    eps: Option<f64>,
    mode: Option<VerifyMode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedSearchArgs {
    source: IfsRef,
    target: Option<IfsRef>,
    #[serde(rename = "box")]
    param_box: ParamBox,
    eps: Option<f64>,
    node_cap: Option<usize>,
    delta_box: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureArgs {
    map: AffineMap2,
    ifs: IfsRef,
    #[serde(default = "four")]
    k_max: usize,
    #[serde(default = "three")]
    len_max: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RescaleArgs {
    map: AffineMap2,
    ifs: IfsRef,
    n_max: Option<usize>,
    eps: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenArgs {
    matrix: Matrix2,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropyArgs {
    measure: MeasureRef,
    #[serde(default = "eight")]
    n_min: usize,
    n_max: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConservationArgs {
    measure: MeasureRef,
    #[serde(default = "eight")]
    n_min: usize,
    n_max: Option<usize>,
    #[serde(default = "eight")]
    samples: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceArgs {
    ifs: IfsRef,
    direction: Option<[Scalar; 2]>,
    offset: [Scalar; 2],
    depth: Option<usize>,
    /// Compare the exponent with `s_n`.
    sn: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxSlicesArgs {
    ifs: IfsRef,
    x: Scalar,
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectArgs {
    ifs: IfsRef,
    direction: Option<[Scalar; 2]>,
    #[serde(default = "yes")]
    dedup: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PsiArgs {
    x: Scalar,
    r: Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WscArgs {
    ifs: IfsRef,
    depth_max: Option<usize>,
    #[serde(default = "gap_floor")]
    gap_floor: f64,
    psi: Option<PsiArgs>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum GalleryKind {
    VerticalSlices,
    Minisets,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GalleryArgs {
    kind: GalleryKind,
    ifs: IfsRef,
    #[serde(default = "twenty_four")]
    samples: usize,
    #[serde(default = "four")]
    m_min: usize,
    #[serde(default = "twelve")]
    m_max: usize,
    /// Slice positions for `vertical-slices`; defaults to sampled anchors.
    xs: Option<Vec<Scalar>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderArgs {
    ifs: IfsRef,
    depth: Option<usize>,
    path: Option<String>,
}

fn yes() -> bool {
    true
}
fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn eight() -> usize {
    8
}
fn twelve() -> usize {
    12
}
fn twenty_four() -> usize {
    24
}
fn gap_floor() -> f64 {
    0.01
}

/// A parsed operation.
enum Parsed {
    Analyze(AnalyzeArgs),
    EmbedCheck(EmbedCheckArgs),
    EmbedSearch(EmbedSearchArgs),
    Structure(StructureArgs),
    Rescale(RescaleArgs),
    Eigen(EigenArgs),
    Entropy(EntropyArgs),
    Conservation(ConservationArgs),
    Slice(SliceArgs),
    ApproxSlices(ApproxSlicesArgs),
    Project(ProjectArgs),
    Wsc(WscArgs),
    Gallery(GalleryArgs),
    Render(RenderArgs),
}

fn args<T: DeserializeOwned>(op: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Parse(format!("{op}: {e}")))
}

fn parse(op: &str, v: &Value) -> Result<Parsed> {
    Ok(match op {
        "analyze" => Parsed::Analyze(args(op, v)?),
        "embed-check" => Parsed::EmbedCheck(args(op, v)?),
        "embed-search" => Parsed::EmbedSearch(args(op, v)?),
        "structure" => Parsed::Structure(args(op, v)?),
        "rescale" => Parsed::Rescale(args(op, v)?),
        "eigen" => Parsed::Eigen(args(op, v)?),
        "entropy" => Parsed::Entropy(args(op, v)?),
        "conservation" => Parsed::Conservation(args(op, v)?),
        "slice" => Parsed::Slice(args(op, v)?),
        "approx-slices" => Parsed::ApproxSlices(args(op, v)?),
        "project" => Parsed::Project(args(op, v)?),
        "wsc" => Parsed::Wsc(args(op, v)?),
        "gallery" => Parsed::Gallery(args(op, v)?),
        "render" => Parsed::Render(args(op, v)?),
        _ => return Err(CliError::Parse(format!("unknown op {op:?}; expected one of {}", OPS.join(", ")))),
    })
}

impl Parsed {
    /// Resolves every name the operation refers to.
    fn check_names(&self, ctx: &Context) -> Result<()> {
        let ifs: Vec<&IfsRef> = match self {
            Parsed::Analyze(a) => vec![&a.ifs],
            Parsed::EmbedCheck(a) => std::iter::once(&a.source).chain(a.target.as_ref()).collect(),
            Parsed::EmbedSearch(a) => std::iter::once(&a.source).chain(a.target.as_ref()).collect(),
            Parsed::Structure(a) => vec![&a.ifs],
            Parsed::Rescale(a) => vec![&a.ifs],
            Parsed::Slice(a) => vec![&a.ifs],
            Parsed::ApproxSlices(a) => vec![&a.ifs],
            Parsed::Project(a) => vec![&a.ifs],
            Parsed::Wsc(a) => vec![&a.ifs],
            Parsed::Gallery(a) => vec![&a.ifs],
            Parsed::Render(a) => vec![&a.ifs],
            Parsed::Entropy(a) => return a.measure.resolve(ctx).map(|_| ()),
            Parsed::Conservation(a) => return a.measure.resolve(ctx).map(|_| ()),
            Parsed::Eigen(_) => vec![],
        };
        ifs.into_iter().try_for_each(|r| r.resolve(ctx).map(|_| ()))
    }
}

/// Parses and name-checks without running.
pub fn validate(op: &str, v: &Value, ctx: &Context) -> Result<()> {
    parse(op, v)?.check_names(ctx)
}

/// Runs one operation. `stem` names side files in the output directory.
pub fn execute(op: &str, v: &Value, ctx: &Context, stem: &str) -> Result<Outcome> {
    let g = &ctx.globals;
    match parse(op, v)? {
        Parsed::Analyze(a) => {
            let f = a.ifs.resolve(ctx)?;
            let depth = a.depth.or(g.depth).unwrap_or(4);
            let (cover, cache) = cache::cover(&f, depth)?;
            let group = group_closure(&f, DEFAULT_GROUP_CAP);
            let ssc = check_ssc(&f, depth.max(1))?;
            let result = json!({
                "label": f.label,
                "maps": f.len(),
                "homothetic": f.is_homothetic(),
                "similarity_dimension": similarity_dimension(&f),
                "alpha_min": f.alpha_min(),
                "alpha_max": f.alpha_max(),
                "bbox": f.bbox(),
                "exact_bbox": f.exact_bbox().map(|b| b.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
                "bounding_radius": bounding_ball(&f),
                "group": group,
                "ssc": ssc,
                "cover_boxes": cover.len(),
                "cover_max_diam": cover.max_diam(),
            });
            let mut out = Outcome::new(result, mode_of(f.is_exact()));
            out.depth = Some(depth);
            out.cache = cache;
            if matches!(ssc, SscVerdict::Violated { .. }) {
                out.status = Status::Violated;
            }
            Ok(out)
        }
        Parsed::EmbedCheck(a) => {
            let f = a.source.resolve(ctx)?;
            let e = a.target.as_ref().map_or_else(|| Ok(f.clone()), |t| t.resolve(ctx))?;
            let eps = a.eps.or(g.eps).unwrap_or(1.0 / 1024.0);
            let opts = VerifyOptions { mode: a.mode.unwrap_or(VerifyMode::Auto), ..VerifyOptions::default() };
            let verdict = verify_with(&a.map, &f, &e, eps, &opts)?;
            let eigen = eigen_analyze(&a.map.linear).ok();
            let mut out = Outcome::new(
                json!({ "verdict": verdict, "eigen": eigen }),
                mode_of(a.map.is_exact() && f.is_exact() && e.is_exact()),
            );
            out.eps = Some(verdict.eps);
            out.status = match verdict.status {
                VerdictStatus::Certified => Status::Ok,
                VerdictStatus::Refuted => Status::Refuted,
                VerdictStatus::Inconclusive => Status::Inconclusive,
            };
            Ok(out)
        }
        Parsed::EmbedSearch(a) => {
            let f = a.source.resolve(ctx)?;
            let e = a.target.as_ref().map_or_else(|| Ok(f.clone()), |t| t.resolve(ctx))?;
            let eps = a.eps.or(g.eps).unwrap_or(1.0 / 256.0);
            let mut opts = SearchOptions::new(eps);
            if let Some(c) = a.node_cap {
                opts.node_cap = c;
            }
            if let Some(d) = a.delta_box {
                opts.delta_box = d;
            }
            let report = bb_search(&f, &e, &a.param_box, &opts)?;
            let eigen: Vec<Value> = report
                .certified()
                .map(|h| json!(eigen_analyze(&h.center.linear).ok()))
                .collect();
            let mut out = Outcome::new(json!({ "search": report, "certified_eigen": eigen }), ScalarMode::Interval);
            out.eps = Some(eps);
            out.tolerances.insert("delta_box".into(), opts.delta_box);
            if report.hits.is_empty() {
                out.status = Status::Inconclusive;
            }
            Ok(out)
        }
        Parsed::Structure(a) => {
            let f = a.ifs.resolve(ctx)?;
            let sol = structure_find(&a.map, &f, a.k_max, a.len_max)?;
            let holds = sol.as_ref().map(|s| s.holds(&a.map, &f));
            let mut out = Outcome::new(json!({ "solution": sol, "rechecked": holds }), ScalarMode::Exact);
            if sol.is_none() {
                out.status = Status::Inconclusive;
            }
            Ok(out)
        }
        Parsed::Rescale(a) => {
            let f = a.ifs.resolve(ctx)?;
            let n = a.n_max.or(g.depth).unwrap_or(12);
            let eps = a.eps.or(g.eps).unwrap_or(1e-6);
            let r = iterate_rescale_sequence(&a.map, &f, n, eps)?;
            let mut out = Outcome::new(to_value(&r), mode_of(a.map.is_exact() && f.is_exact()));
            out.depth = Some(n);
            out.eps = Some(eps);
            Ok(out)
        }
        Parsed::Eigen(a) => {
            let r = eigen_analyze(&a.matrix)?;
            let residuals = r.residuals(&a.matrix);
            let mode = r.mode;
            Ok(Outcome::new(json!({ "eigen": r, "residuals": residuals }), mode))
        }
        Parsed::Entropy(a) => {
            let m = a.measure.resolve(ctx)?;
            let n_max = a.n_max.or(g.depth).unwrap_or(14);
            let d = entropy_dimension(&m, a.n_min, n_max)?;
            let mut out = Outcome::new(
                json!({ "weights": m.weights, "similarity_dimension": similarity_dimension(&m.ifs), "entropy": d }),
                ScalarMode::Interval,
            );
            out.depth = Some(n_max);
            out.tables.push(("csv", d.to_csv()));
            Ok(out)
        }
        Parsed::Conservation(a) => {
            let m = a.measure.resolve(ctx)?;
            let n_max = a.n_max.or(g.depth).unwrap_or(12);
            let r = dimension_conservation_check(&m, a.n_min, n_max, a.samples, g.seed)?;
            let mut out = Outcome::new(to_value(&r), ScalarMode::Interval);
            out.depth = Some(n_max);
            Ok(out)
        }
        Parsed::Slice(a) => {
            let f = a.ifs.resolve(ctx)?;
            let depth = a.depth.or(g.depth).unwrap_or(8);
            let dir = a.direction.clone().unwrap_or([Scalar::zero(), Scalar::one()]);
            let line = AffineLine::new(dir, a.offset.clone())?;
            let s = slice_cover(&f, &line, depth)?;
            let sn = a.sn.map(sn_number).transpose()?;
            let below_sn = match (s.exponent_upper, sn) {
                (Some(e), Some(v)) => Some(e < v),
                _ => None,
            };
            let mut out = Outcome::new(
                json!({
                    "line": line,
                    "counts": s.counts,
                    "exponent": s.exponent,
                    "exponent_upper": s.exponent_upper,
                    "boxes": s.cover.len(),
                    "sn": sn,
                    "exponent_upper_below_sn": below_sn,
                }),
                mode_of(f.is_exact()),
            );
            out.depth = Some(depth);
            Ok(out)
        }
        Parsed::ApproxSlices(a) => {
            let f = a.ifs.resolve(ctx)?;
            let s = approx_slices(&f, a.n, &a.x)?;
            let seq = approx_slice_sequence(&f, &a.x, a.n)?;
            let slices: Vec<Value> = s
                .slices
                .iter()
                .map(|sl| json!({ "projected": sl.projected, "boxes": sl.cover.len(), "bbox": sl.cover.bbox() }))
                .collect();
            let mut out = Outcome::new(
                json!({ "x": s.x, "n": s.n, "p": s.p, "slices": slices, "p_sequence": seq }),
                mode_of(f.is_exact() && a.x.is_exact()),
            );
            out.depth = Some(a.n);
            Ok(out)
        }
        Parsed::Project(a) => {
            let f = a.ifs.resolve(ctx)?;
            let dir = a.direction.clone().unwrap_or([Scalar::one(), Scalar::zero()]);
            let gd = project_gdifs(&f, &dir)?;
            let dim = gdifs_dimension(&gd, a.dedup)?;
            let mut out = Outcome::new(json!({ "gdifs": gd, "dimension": dim }), mode_of(f.is_exact()));
            out.tolerances.insert("spectral".into(), 1e-9);
            Ok(out)
        }
        Parsed::Wsc(a) => {
            let f = a.ifs.resolve(ctx)?;
            let depth = a.depth_max.or(g.depth).unwrap_or(6);
            let r = wsc_test(&f, depth, a.gap_floor)?;
            let psi = a.psi.as_ref().map(|p| psi_xr_count(&f, &p.x, &p.r)).transpose()?;
            let mut out = Outcome::new(json!({ "wsc": r, "psi_count": psi }), ScalarMode::Exact);
            out.depth = Some(depth);
            out.tolerances.insert("gap_floor".into(), a.gap_floor);
            out.status = match r.verdict {
                WscVerdict::WscEvidence => Status::Ok,
                WscVerdict::ViolationEvidence => Status::Violated,
                WscVerdict::Inconclusive => Status::Inconclusive,
            };
            Ok(out)
        }
        Parsed::Gallery(a) => {
            let f = a.ifs.resolve(ctx)?;
            let resolution = 0.5f64.powi(a.m_max as i32);
            let anchors = sample_anchors(&f, a.samples)?;
            let gallery = match a.kind {
                GalleryKind::VerticalSlices => {
                    let xs = match &a.xs {
                        Some(xs) => xs.clone(),
                        None => anchors.iter().map(|p| p.x.clone()).collect(),
                    };
                    vertical_slice_gallery(&f, &xs, resolution)?
                }
                GalleryKind::Minisets => {
                    let params: Vec<([f64; 2], f64)> = anchors
                        .iter()
                        .enumerate()
                        .map(|(i, p)| ([p.x.to_f64(), p.y.to_f64()], 1.0 + (i % 6) as f64))
                        .collect();
                    miniset_gallery(&f, &params, resolution)?
                }
            };
            let d = gallery_delta(&gallery, (a.m_min, a.m_max))?;
            let mut out = Outcome::new(json!({ "generator": gallery.generator, "delta": d }), ScalarMode::Interval);
            out.tables.push(("csv", d.to_csv()));
            out.tolerances.insert("resolution".into(), resolution);
            Ok(out)
        }
        Parsed::Render(a) => {
            let f = a.ifs.resolve(ctx)?;
            let depth = a.depth.or(g.depth).unwrap_or(4);
            let (cover, cache) = cache::cover(&f, depth)?;
            let name = a.path.clone().unwrap_or_else(|| format!("{stem}.svg"));
            let path = ctx.out_dir.join(&name);
            let rects = write_svg(&cover, &path, &SvgStyle::default(), Some(&f))?;
            let mut out = Outcome::new(json!({ "path": name, "rects": rects }), mode_of(f.is_exact()));
            out.depth = Some(depth);
            out.files.push(path);
            out.cache = cache;
            Ok(out)
        }
    }
}

/// `count` distinct attractor points: fixed points pushed through words of
/// growing length, read in order and thinned evenly.
fn sample_anchors(f: &Ifs, count: usize) -> Result<Vec<Vector2>> {
    let mut depth = 0;
    while f.len().pow(depth as u32) < count && depth < 12 {
        depth += 1;
    }
    let mut pts: Vec<Vector2> = Vec::new();
    for w in fractembed::ifs::CylinderWord::all_of_length(f.len(), depth) {
        let p = f.compose_word(w.as_slice()).apply(f.fixed_point(0));
        let dup = pts.iter().any(|q| (q.x.to_f64() - p.x.to_f64()).abs() < 1e-12 && (q.y.to_f64() - p.y.to_f64()).abs() < 1e-12);
        if !dup {
            pts.push(p);
        }
    }
    if pts.len() > count {
        let step = pts.len() as f64 / count as f64;
        pts = (0..count).map(|i| pts[(i as f64 * step) as usize].clone()).collect();
    }
    Ok(pts)
}

