use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fractembed::numerics::Scalar;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::ops::{build_measure, execute, validate, Context, Globals, IfsRef};
use crate::report::{Provenance, Report, Status, Timing};

pub const SCENARIO_VERSION: &str = "1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDef {
    pub ifs: IfsRef,
    #[serde(default)]
    pub weights: Option<Vec<Scalar>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Command {
    pub op: String,
    #[serde(default = "empty_args")]
    pub args: Value,
    /// Report file name inside the output directory.
    #[serde(default)]
    pub output: Option<String>,
}

fn empty_args() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    #[serde(default)]
    pub ifs: BTreeMap<String, IfsRef>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureDef>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Default)]
pub struct RunSummary {
    pub reports: Vec<PathBuf>,
    pub files: Vec<PathBuf>,
    pub statuses: Vec<Status>,
}

impl RunSummary {
    pub fn any_negative(&self) -> bool {
        self.statuses.iter().any(|s| s.is_negative())
    }
}

/// Runs one operation and wraps the outcome in a report.
pub fn run_op(op: &str, args: &Value, ctx: &Context, stem: &str) -> Result<(Report, Vec<(String, String)>, Vec<PathBuf>)> {
    let t0 = Instant::now();
    let out = execute(op, args, ctx, stem)?;
    let report = Report {
        op: op.to_string(),
        args: args.clone(),
        status: out.status,
        result: out.result,
        provenance: Provenance {
            mode: out.mode,
            eps: out.eps,
            depth: out.depth,
            seed: ctx.globals.seed,
            tolerances: out.tolerances,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        timing: Timing { wall_ms: t0.elapsed().as_secs_f64() * 1e3, cache: Some(out.cache.label().to_string()) },
    };
    let tables = out.tables.into_iter().map(|(ext, body)| (format!("{stem}.{ext}"), body)).collect();
    Ok((report, tables, out.files))
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| CliError::io(path, e))
}

/// Parses `text`, defines its IFSs and measures, validates every command,
/// then runs them in order, writing one JSON report each.
pub fn run_scenario_str(text: &str, base_dir: &Path, globals: Globals, out_dir: &Path) -> Result<RunSummary> {
    let sc: Scenario = serde_json::from_str(text)?;
    if sc.version != SCENARIO_VERSION {
        return Err(CliError::Parse(format!("scenario version {:?}, expected {SCENARIO_VERSION:?}", sc.version)));
    }
    let mut globals = globals;
    if let Some(s) = sc.seed {
        globals.seed = s;
    }
    let mut ctx = Context::new(globals, out_dir.to_path_buf());
    ctx.base_dir = base_dir.to_path_buf();
    for (name, r) in &sc.ifs {
        let mut f = r.resolve(&ctx)?;
        f.label = name.clone();
        ctx.ifs.insert(name.clone(), f);
    }
    for (name, m) in &sc.measures {
        let f = m.ifs.resolve(&ctx)?;
        ctx.measures.insert(name.clone(), build_measure(f, m.weights.as_deref())?);
    }
    let mut seen = std::collections::HashSet::new();
    for (i, c) in sc.commands.iter().enumerate() {
        validate(&c.op, &c.args, &ctx)?;
        if !seen.insert(report_name(i, c)) {
            return Err(CliError::Parse(format!("two commands write {}", report_name(i, c))));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut summary = RunSummary::default();
    for (i, c) in sc.commands.iter().enumerate() {
        let name = report_name(i, c);
        let stem = name.strip_suffix(".json").unwrap_or(&name).to_string();
        let (report, tables, files) = run_op(&c.op, &c.args, &ctx, &stem)?;
        let path = out_dir.join(&name);
        write(&path, &report.to_json())?;
        for (n, body) in tables {
            let p = out_dir.join(n);
            write(&p, &body)?;
            summary.files.push(p);
        }
        summary.files.extend(files);
        summary.statuses.push(report.status);
        summary.reports.push(path);
    }
    Ok(summary)
}

pub fn run_scenario(path: &Path, globals: Globals, out_dir: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_scenario_str(&text, base, globals, out_dir)
}

fn report_name(i: usize, c: &Command) -> String {
    c.output.clone().unwrap_or_else(|| format!("{:02}-{}.json", i + 1, c.op))
}
