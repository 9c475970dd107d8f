use std::collections::BTreeMap;

use fractembed::numerics::ScalarMode;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Inconclusive,
    Refuted,
    Violated,
}

impl Status {
    /// Verdicts that fail a `--strict` run.
    pub fn is_negative(self) -> bool {
        matches!(self, Status::Refuted | Status::Violated)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `exact` when every input was rational, `interval` otherwise.
    pub mode: ScalarMode,
    pub eps: Option<f64>,
    pub depth: Option<usize>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
}

/// Everything that may differ between two identical runs lives here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
    #[serde(default)]
    pub cache: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub op: String,
    pub args: Value,
    pub status: Status,
    pub result: Value,
    pub provenance: Provenance,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
