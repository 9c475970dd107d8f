use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dyadic::{cell_index, shannon_of, Cell, DyadicMeasure};
use crate::error::{Error, Result};
use crate::ifs::AffineMap2;

fn unit(v: [f64; 2]) -> Result<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("direction {v:?} is not a nonzero vector")));
    }
    Ok([v[0] / n, v[1] / n])
}

/// Projection of the atoms onto the normal `V⊥` of a direction.
fn normal_coordinates(m: &DyadicMeasure, v: [f64; 2]) -> Result<Vec<(f64, f64)>> {
    let v = unit(v)?;
    let u = [-v[1], v[0]];
    Ok(m.atoms().map(|(c, p)| (c[0] * u[0] + c[1] * u[1], p)).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SaturationReport {
    pub saturated: bool,
    /// `H_k(μ) − (1 + H_k(P_{V⊥}μ)) + ε`; saturated iff nonnegative.
    pub margin: f64,
    pub entropy: f64,
    pub projected_entropy: f64,
    pub level: usize,
    pub eps: f64,
}

/// `(V, k, ε)`-saturation: `H_k(μ) ≥ dim V + H_k(P_{V⊥}μ) − ε`, with the
/// projection binned from level-`k` cell centres.
pub fn saturation_test(m: &DyadicMeasure, v: [f64; 2], k: usize, eps: f64) -> Result<SaturationReport> {
    if k == 0 {
        return Err(Error::Domain("saturation needs level k ≥ 1".into()));
    }
    let coarse = m.coarsen(k)?;
    let entropy = coarse.shannon(k)? / k as f64;
    let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
    for (t, p) in normal_coordinates(&coarse, v)? {
        *bins.entry(cell_index(t, k)).or_insert(0.0) += p;
    }
    let projected_entropy = shannon_of(&bins.into_values().collect::<Vec<_>>()) / k as f64;
    let margin = entropy - (1.0 + projected_entropy) + eps;
    Ok(SaturationReport { saturated: margin >= 0.0, margin, entropy, projected_entropy, level: k, eps })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConcentrationReport {
    pub concentrated: bool,
    /// Largest mass in a strip of width `2ε` parallel to `V`.
    pub best_mass: f64,
    /// Signed offset of the best strip's centre line along the unit normal.
    pub translate: f64,
    pub eps: f64,
    /// Grid on which translates were scanned (the cell side).
    pub resolution: f64,
}

/// `(V, ε)`-concentration: some strip of width `2ε` parallel to `V` holds
/// mass `≥ 1 − ε`. Cells are treated as point masses at their centres.
pub fn concentration_test(m: &DyadicMeasure, v: [f64; 2], eps: f64) -> Result<ConcentrationReport> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut pts = normal_coordinates(m, v)?;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut best, mut best_at) = (0.0, pts[0].0);
    let (mut j, mut acc) = (0, 0.0);
    for i in 0..pts.len() {
        while j < pts.len() && pts[j].0 <= pts[i].0 + 2.0 * eps {
            acc += pts[j].1;
            j += 1;
        }
        if acc > best {
            best = acc;
            best_at = pts[i].0 + eps;
        }
        acc -= pts[i].1;
    }
    Ok(ConcentrationReport {
        concentrated: best >= 1.0 - eps,
        best_mass: best,
        translate: best_at,
        eps,
        resolution: 1.0 / (1u64 << m.depth) as f64,
    })
}

/// `ν.μ = Σ_g ν(g)·g_*μ`, with each cell pushed through `g` at its centre and
/// re-binned at `depth`.
pub fn convolve(nu: &[(AffineMap2, f64)], m: &DyadicMeasure, depth: usize) -> Result<DyadicMeasure> {
    if nu.is_empty() || nu.iter().any(|(_, p)| !(*p > 0.0)) {
        return Err(Error::Domain("ν needs positive weights on at least one map".into()));
    }
    let total: f64 = nu.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("ν has total mass {total}")));
    }
    let flat = m.dim == 1
        && nu.iter().all(|(g, _)| {
            let c = g.coefficients();
            c[2] == 0.0 && c[5] == 0.0
        });
    let dim = if flat { 1 } else { 2 };
    let atoms: Vec<([f64; 2], f64)> = m.atoms().collect();
    let parts: Vec<HashMap<Cell, f64>> = nu
        .par_iter()
        .map(|(g, w)| {
            let [a, b, c, d, tx, ty] = g.coefficients();
            let mut out = HashMap::new();
            for (p, mass) in &atoms {
                let x = a * p[0] + b * p[1] + tx;
                let y = c * p[0] + d * p[1] + ty;
                let cell = [cell_index(x, depth), if flat { 0 } else { cell_index(y, depth) }];
                *out.entry(cell).or_insert(0.0) += w * mass;
            }
            out
        })
        .collect();
    let mut cells: BTreeMap<Cell, f64> = BTreeMap::new();
    for part in parts {
        let mut part: Vec<_> = part.into_iter().collect();
        part.sort_by(|a, b| a.0.cmp(&b.0));
        for (c, p) in part {
            *cells.entry(c).or_insert(0.0) += p;
        }
    }
    DyadicMeasure::new(dim, depth, cells)
}
