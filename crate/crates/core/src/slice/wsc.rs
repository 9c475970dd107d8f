use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{stopping_family, Ifs};
use crate::numerics::Scalar;

/// Cap on distinct maps enumerated by [`wsc_test`].
pub const WSC_MAP_CAP: usize = 200_000;
/// Cap on compared pairs.
pub const WSC_PAIR_CAP: u64 = 400_000_000;

/// Exact map `u ↦ a·u + b` on the line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Map1 {
    pub a: BigRational,
    pub b: BigRational,
}

impl Map1 {
    pub(crate) fn compose(&self, o: &Map1) -> Map1 {
        Map1 { a: &self.a * &o.a, b: &self.a * &o.b + &self.b }
    }

    /// `self⁻¹ ∘ other`.
    fn relative(&self, other: &Map1) -> Map1 {
        Map1 { a: &other.a / &self.a, b: (&other.b - &self.b) / &self.a }
    }
}

/// The maps of a system on the x-axis, exactly.
pub fn line_maps(ifs: &Ifs) -> Result<Vec<Map1>> {
    let mut out = Vec::with_capacity(ifs.len());
    for i in 0..ifs.len() {
        let m = ifs.affine(i);
        let c = m.coefficients();
        if c[2] != 0.0 || c[5] != 0.0 || c[1] != 0.0 {
            return Err(Error::Domain("system does not act on the x-axis".into()));
        }
        let ex = |s: &Scalar| s.exact().cloned().ok_or_else(|| Error::Domain("line maps must be exact".into()));
        out.push(Map1 { a: ex(&m.linear.a)?, b: ex(&m.translation.x)? });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WscVerdict {
    WscEvidence,
    ViolationEvidence,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WscReport {
    pub verdict: WscVerdict,
    /// Smallest `|log a| + |b|` over `ψ_I⁻¹ψ_J ≠ Id` with comparable ratios.
    pub min_gap: f64,
    /// The same gap exactly, when attained by a translation (`a = 1`).
    pub min_gap_exact: Option<Scalar>,
    /// Per-depth minimum over pairs with `max(|I|, |J|) = depth`.
    pub gap_table: Vec<(usize, Option<f64>)>,
    /// Distinct first-level maps shared by two or more letters.
    pub exact_overlap_classes: usize,
    /// Unordered pairs of distinct words of equal length with identical maps.
    pub exact_overlap_pairs: u64,
    pub gap_floor: f64,
    pub criterion: String,
}

/// Numerical evidence for the weak separation condition: `Id` should not be
/// an accumulation point of `{ψ_I⁻¹ψ_J} ∖ {Id}` over pairs whose ratio
/// `a_J/a_I` lies in the open window `(λ_min, 1/λ_min)`.
pub fn wsc_test(psi: &Ifs, depth_max: usize, gap_floor: f64) -> Result<WscReport> {
    if depth_max < 2 {
        return Err(Error::Domain("wsc_test needs depth_max >= 2".into()));
    }
    let maps = line_maps(psi)?;
    let lam_min = maps.iter().map(|m| m.a.abs()).min().expect("at least two maps");
    let window = (lam_min.clone(), lam_min.recip());
    let mut first: HashMap<&Map1, usize> = HashMap::new();
    for m in &maps {
        *first.entry(m).or_insert(0) += 1;
    }
    let exact_overlap_classes = first.values().filter(|&&c| c > 1).count();

    // distinct maps per word length, with multiplicities
    let mut levels: Vec<Vec<(Map1, u64)>> = vec![vec![(Map1 { a: BigRational::one(), b: BigRational::zero() }, 1)]];
    let mut exact_overlap_pairs = 0u64;
    let mut total = 1usize;
    for _ in 1..=depth_max {
        let mut next: HashMap<Map1, u64> = HashMap::new();
        for (m, k) in levels.last().expect("nonempty") {
            for f in &maps {
                *next.entry(m.compose(f)).or_insert(0) += k;
            }
        }
        exact_overlap_pairs += next.values().map(|&k| k * (k - 1) / 2).sum::<u64>();
        total += next.len();
        if total > WSC_MAP_CAP {
            return Err(Error::ResourceLimit { what: "distinct maps", requested: total as u128, cap: WSC_MAP_CAP as u128 });
        }
        let mut lvl: Vec<(Map1, u64)> = next.into_iter().collect();
        lvl.sort_by(|x, y| (&x.0.a, &x.0.b).cmp(&(&y.0.a, &y.0.b)));
        levels.push(lvl);
    }
    let pairs: u64 = (1..=depth_max).map(|d| (levels[d].len() * (0..=d).map(|e| levels[e].len()).sum::<usize>()) as u64).sum();
    if pairs > WSC_PAIR_CAP {
        return Err(Error::ResourceLimit { what: "compared pairs", requested: pairs as u128, cap: WSC_PAIR_CAP as u128 });
    }

    let comparable = |r: &BigRational| {
        let r = r.abs();
        r > window.0 && r < window.1
    };
    let mut best: Option<(f64, Map1)> = None;
    let mut gap_table = Vec::with_capacity(depth_max);
    for d in 1..=depth_max {
        let mut row: Option<f64> = None;
        for (x, _) in &levels[d] {
            for lower in &levels[..=d] {
                for (y, _) in lower {
                    if x == y {
                        continue;
                    }
                    for rel in [y.relative(x), x.relative(y)] {
                        if !comparable(&rel.a) {
                            continue;
                        }
                        let g = rel.a.abs().to_f64().expect("finite").ln().abs() + rel.b.abs().to_f64().expect("finite");
                        if row.is_none_or(|r| g < r) {
                            row = Some(g);
                        }
                        if best.as_ref().is_none_or(|b| g < b.0) {
                            best = Some((g, rel));
                        }
                    }
                }
            }
        }
        gap_table.push((d, row));
    }
    let min_gap = best.as_ref().map_or(f64::INFINITY, |b| b.0);
    let min_gap_exact = best.as_ref().filter(|b| b.1.a.is_one()).map(|b| Scalar::Exact(b.1.b.abs()));
    let tail: Vec<f64> = gap_table.iter().filter_map(|r| r.1).collect();
    let last3 = &tail[tail.len().saturating_sub(3)..];
    let verdict = if last3.len() == 3 && last3.windows(2).all(|w| w[1] < w[0]) && last3[2] < gap_floor {
        WscVerdict::ViolationEvidence
    } else if min_gap >= gap_floor && last3.len() == 3 && last3.windows(2).all(|w| w[1] >= w[0]) {
        WscVerdict::WscEvidence
    } else {
        WscVerdict::Inconclusive
    };
    let criterion = format!(
        "wsc-evidence: min gap >= {gap_floor} and per-depth minima non-decreasing over the last 3 depths; \
         violation-evidence: per-depth minima strictly decreasing over the last 3 depths and below {gap_floor}; \
         gap = |log a| + |b|; exact overlaps are excluded"
    );
    Ok(WscReport {
        verdict,
        min_gap,
        min_gap_exact,
        gap_table,
        exact_overlap_classes,
        exact_overlap_pairs,
        gap_floor,
        criterion,
    })
}

/// `|Ψ(x, r)|`: distinct maps `ψ_I` of the stopping family `Ψ_r` whose
/// hull image meets the closed ball `B(x, r)`. Decided exactly.
pub fn psi_xr_count(psi: &Ifs, x: &Scalar, r: &Scalar) -> Result<usize> {
    let maps = line_maps(psi)?;
    let (x, r) = match (x.exact(), r.exact()) {
        (Some(x), Some(r)) => (x.clone(), r.clone()),
        _ => return Err(Error::Domain("psi_xr_count needs exact x and r".into())),
    };
    let hull = psi.exact_bbox().ok_or_else(|| Error::Domain("no exact hull for the system".into()))?;
    let (h0, h1) = (hull[0].clone(), hull[1].clone());
    let words = stopping_family(psi, &Scalar::Exact(r.clone()))?;
    let (lo, hi) = (&x - &r, &x + &r);
    let mut seen: Vec<Map1> = Vec::new();
    let mut inside = false;
    for w in &words {
        let m = w.as_slice().iter().fold(Map1 { a: BigRational::one(), b: BigRational::zero() }, |acc, &i| {
            acc.compose(&maps[i as usize])
        });
        let (p, q) = (&m.a * &h0 + &m.b, &m.a * &h1 + &m.b);
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        inside |= p <= x && x <= q;
        if p <= hi && q >= lo && !seen.contains(&m) {
            seen.push(m);
        }
    }
    if !inside {
        return Err(Error::Domain(format!("x = {x} is not covered by the level-r cylinders")));
    }
    Ok(seen.len())
}
