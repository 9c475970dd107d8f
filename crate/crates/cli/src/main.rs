use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fractembed_cli::ops::{Context, Globals};
use fractembed_cli::scenario::{run_op, run_scenario};
use fractembed_cli::{CliError, Result};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "fractembed", version, about = "Affine embeddings, entropy and slices of planar self-similar sets")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GlobalFlags {
    /// Cover depth, entropy level or search depth, depending on the command.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Resolution of numeric verdicts.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Exit with 2 when any verdict is refuted or violated.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write reports and side files here instead of printing.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimension, separation, group and cover summary of an IFS.
    Analyze {
        /// Preset name or JSON file.
        ifs: String,
    },
    /// Certify or refute g(F) ⊆ E.
    EmbedCheck {
        /// `a,b,c,d,tx,ty` (rationals or decimals), inline JSON, or a JSON file.
        #[arg(long)]
        map: String,
        #[arg(long)]
        source: String,
        /// Defaults to the source.
        #[arg(long)]
        target: Option<String>,
        /// numeric | symbolic | auto
        #[arg(long)]
        mode: Option<String>,
    },
    /// Branch-and-bound search for embeddings in a parameter box.
    EmbedSearch {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: Option<String>,
        /// Parameter box as inline JSON or a JSON file.
        #[arg(long = "box")]
        param_box: String,
        #[arg(long)]
        node_cap: Option<usize>,
    },
    /// Solve g^k ∘ φ_I = φ_J exactly.
    Structure {
        #[arg(long)]
        map: String,
        #[arg(long)]
        ifs: String,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 3)]
        len_max: usize,
    },
    /// Iterate-and-rescale sequence of a map.
    Rescale {
        #[arg(long)]
        map: String,
        #[arg(long)]
        ifs: String,
    },
    /// Entropy dimension of a self-similar measure.
    Entropy {
        ifs: String,
        /// Comma-separated weights; natural weights when omitted.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 8)]
        n_min: usize,
    },
    /// Cylinder counts along a line.
    Slice {
        ifs: String,
        /// Vertical line x = X (the default line shape).
        #[arg(long, conflicts_with = "direction")]
        x: Option<String>,
        #[arg(long, requires = "offset")]
        direction: Option<String>,
        #[arg(long)]
        offset: Option<String>,
        /// Compare the exponent with s_n.
        #[arg(long)]
        sn: Option<u32>,
    },
    /// Project onto a direction as a graph-directed system.
    Project {
        ifs: String,
        #[arg(long, default_value = "1,0")]
        direction: String,
        #[arg(long)]
        no_dedup: bool,
    },
    /// Weak separation evidence for a system on the x-axis.
    Wsc {
        ifs: String,
        #[arg(long, default_value_t = 0.01)]
        gap_floor: f64,
        #[arg(long, requires = "psi_r")]
        psi_x: Option<String>,
        #[arg(long, requires = "psi_x")]
        psi_r: Option<String>,
    },
    /// Gallery dimension estimate from sampled minisets.
    Gallery {
        ifs: String,
        /// vertical-slices | minisets
        #[arg(long, default_value = "minisets")]
        kind: String,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        m_min: usize,
        #[arg(long, default_value_t = 12)]
        m_max: usize,
    },
    /// SVG of the attractor cover.
    Render {
        ifs: String,
        /// File name inside the output directory.
        #[arg(long, default_value = "render.svg")]
        output: String,
    },
    /// Execute a JSON scenario.
    Run { scenario: PathBuf },
}

fn scalar_list(s: &str) -> Vec<Value> {
    s.split(',').map(|t| Value::String(t.trim().to_string())).collect()
}

fn json_or_file(s: &str) -> Result<Value> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(serde_json::from_str(s)?);
    }
    let text = std::fs::read_to_string(s).map_err(|e| CliError::io(s, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn map_arg(s: &str) -> Result<Value> {
    let parts = scalar_list(s);
    if parts.len() == 6 && !s.trim_start().starts_with('{') {
        return Ok(json!({
            "linear": { "a": parts[0], "b": parts[1], "c": parts[2], "d": parts[3] },
            "translation": { "x": parts[4], "y": parts[5] },
        }));
    }
    json_or_file(s)
}

fn pair(s: &str) -> Result<Value> {
    let p = scalar_list(s);
    if p.len() != 2 {
        return Err(CliError::Parse(format!("expected two comma-separated numbers, got {s:?}")));
    }
    Ok(Value::Array(p))
}

fn put(m: &mut Map<String, Value>, k: &str, v: impl Into<Value>) {
    m.insert(k.to_string(), v.into());
}

/// The operation name and its argument object.
fn to_op(cmd: Cmd) -> Result<(&'static str, Value)> {
    let mut a = Map::new();
    let op = match cmd {
        Cmd::Analyze { ifs } => {
            put(&mut a, "ifs", ifs);
            "analyze"
        }
        Cmd::EmbedCheck { map, source, target, mode } => {
            put(&mut a, "map", map_arg(&map)?);
            put(&mut a, "source", source);
            if let Some(t) = target {
                put(&mut a, "target", t);
            }
            if let Some(m) = mode {
                put(&mut a, "mode", m);
            }
            "embed-check"
        }
        Cmd::EmbedSearch { source, target, param_box, node_cap } => {
            put(&mut a, "source", source);
            if let Some(t) = target {
                put(&mut a, "target", t);
            }
            put(&mut a, "box", json_or_file(&param_box)?);
            if let Some(c) = node_cap {
                put(&mut a, "node_cap", c);
            }
            "embed-search"
        }
        Cmd::Structure { map, ifs, k_max, len_max } => {
            put(&mut a, "map", map_arg(&map)?);
            put(&mut a, "ifs", ifs);
            put(&mut a, "k_max", k_max);
            put(&mut a, "len_max", len_max);
            "structure"
        }
        Cmd::Rescale { map, ifs } => {
            put(&mut a, "map", map_arg(&map)?);
            put(&mut a, "ifs", ifs);
            "rescale"
        }
        Cmd::Entropy { ifs, weights, n_min } => {
            let mut m = Map::new();
            put(&mut m, "ifs", ifs);
            if let Some(w) = weights {
                put(&mut m, "weights", scalar_list(&w));
            }
            put(&mut a, "measure", m);
            put(&mut a, "n_min", n_min);
            "entropy"
        }
        Cmd::Slice { ifs, x, direction, offset, sn } => {
            put(&mut a, "ifs", ifs);
            match (x, direction) {
                (_, Some(d)) => {
                    put(&mut a, "direction", pair(&d)?);
                    put(&mut a, "offset", pair(offset.as_deref().unwrap_or("0,0"))?);
                }
                (x, None) => put(&mut a, "offset", json!([x.unwrap_or_else(|| "0".into()), "0"])),
            }
            if let Some(n) = sn {
                put(&mut a, "sn", n);
            }
            "slice"
        }
        Cmd::Project { ifs, direction, no_dedup } => {
            put(&mut a, "ifs", ifs);
            put(&mut a, "direction", pair(&direction)?);
            put(&mut a, "dedup", !no_dedup);
            "project"
        }
        Cmd::Wsc { ifs, gap_floor, psi_x, psi_r } => {
            put(&mut a, "ifs", ifs);
            put(&mut a, "gap_floor", gap_floor);
            if let (Some(x), Some(r)) = (psi_x, psi_r) {
                put(&mut a, "psi", json!({ "x": x, "r": r }));
            }
            "wsc"
        }
        Cmd::Gallery { ifs, kind, samples, m_min, m_max } => {
            put(&mut a, "ifs", ifs);
            put(&mut a, "kind", kind);
            put(&mut a, "samples", samples);
            put(&mut a, "m_min", m_min);
            put(&mut a, "m_max", m_max);
            "gallery"
        }
        Cmd::Render { ifs, output } => {
            put(&mut a, "ifs", ifs);
            put(&mut a, "path", output);
            "render"
        }
        Cmd::Run { .. } => unreachable!("handled by the caller"),
    };
    Ok((op, Value::Object(a)))
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Parse(format!("--threads: {e}")))?;
    }
    let globals = Globals { depth: g.depth, eps: g.eps, seed: g.seed, strict: g.strict };
    if let Cmd::Run { scenario } = &cli.cmd {
        let out = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let summary = run_scenario(scenario, globals, &out)?;
        for p in summary.reports.iter().chain(&summary.files) {
            println!("{}", p.display());
        }
        return Ok(summary.any_negative());
    }
    let out_dir = g.out_dir.clone();
    let ctx = Context::new(globals, out_dir.clone().unwrap_or_else(|| PathBuf::from(".")));
    let (op, args) = to_op(cli.cmd)?;
    if let Some(d) = &out_dir {
        std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }
    let (report, tables, _) = run_op(op, &args, &ctx, op)?;
    match &out_dir {
        Some(d) => {
            let p = d.join(format!("{op}.json"));
            std::fs::write(&p, report.to_json()).map_err(|e| CliError::io(&p, e))?;
            for (n, body) in tables {
                let q = d.join(n);
                std::fs::write(&q, body).map_err(|e| CliError::io(&q, e))?;
            }
            println!("{}", p.display());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(report.status.is_negative())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let strict = cli.global.strict;
    match run(cli) {
        Ok(negative) if negative && strict => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
