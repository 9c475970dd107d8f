use std::cmp::Ordering;
use std::collections::HashMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::affine::Rect;
use super::cover::{anchors, attractor_cover, cylinder_boxes, exact_anchors_under, CoverBox};
use super::hausdorff::RectIndex;
use super::system::Ifs;
use super::word::CylinderWord;
use crate::error::{Error, Result};
use crate::numerics::{Interval, Scalar};

/// Cap on the size of a stopping-time family.
pub const STOPPING_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SscVerdict {
    /// First-level cylinders are pairwise separated; `gap` encloses the
    /// smallest distance between them.
    HoldsWithGap { gap: Interval },
    /// Two first-level cylinders share the exact attractor point `point`.
    Violated { point: [Scalar; 2], first: u8, second: u8 },
    Inconclusive { gap_upper: f64 },
}

impl SscVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SscVerdict::HoldsWithGap { .. })
    }

    pub fn gap(&self) -> Option<Interval> {
        match self {
            SscVerdict::HoldsWithGap { gap } => Some(*gap),
            _ => None,
        }
    }
}

fn anchor_depth(ifs: &Ifs, max: usize) -> usize {
    let mut k = 1;
    while k < max && ifs.len().pow(k as u32 + 1) * ifs.len() <= 20_000 {
        k += 1;
    }
    k
}

/// Strong separation check on the depth-`n` cover.
pub fn check_ssc(ifs: &Ifs, depth: usize) -> Result<SscVerdict> {
    if depth == 0 {
        return Err(Error::Domain("check_ssc needs depth >= 1".into()));
    }
    let cover = attractor_cover(ifs, depth)?;
    let l = ifs.len();
    let mut groups: Vec<Vec<Rect>> = vec![Vec::new(); l];
    for b in &cover.boxes {
        groups[b.word.first().expect("depth >= 1") as usize].push(b.rect);
    }
    let indexes: Vec<RectIndex> = groups.iter().map(|g| RectIndex::new(g.clone())).collect();
    let lower = (0..l)
        .flat_map(|i| ((i + 1)..l).map(move |j| (i, j)))
        .map(|(i, j)| {
            groups[i]
                .par_iter()
                .map(|r| indexes[j].min_dist(r).lo())
                .reduce(|| f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);

    // attractor points from different first-level cylinders bound the gap above
    let ad = anchor_depth(ifs, depth);
    let pts = anchors(ifs, ad)?;
    let mut by_first: Vec<Vec<Rect>> = vec![Vec::new(); l];
    for a in &pts {
        by_first[a.word.first().expect("depth >= 1") as usize].push(Rect::from_point(&a.point));
    }
    let pidx: Vec<RectIndex> = by_first.iter().map(|g| RectIndex::new(g.clone())).collect();
    let mut upper = f64::INFINITY;
    for i in 0..l {
        for j in (i + 1)..l {
            for p in &by_first[i] {
                upper = upper.min(pidx[j].min_max_dist(p));
            }
        }
    }

    if lower > 0.0 {
        return Ok(SscVerdict::HoldsWithGap { gap: Interval::new(lower, upper.max(lower)) });
    }
    if ifs.is_exact() {
        let mut owner: HashMap<[BigRational; 2], u8> = HashMap::new();
        for i in 0..l as u8 {
            let Some(pts) = exact_anchors_under(ifs, &CylinderWord::from_slice(&[i]), ad.min(4) - 1) else {
                break;
            };
            for p in pts {
                match owner.get(&p) {
                    Some(&j) if j != i => {
                        return Ok(SscVerdict::Violated {
                            point: [Scalar::Exact(p[0].clone()), Scalar::Exact(p[1].clone())],
                            first: j,
                            second: i,
                        });
                    }
                    Some(_) => {}
                    None => {
                        owner.insert(p, i);
                    }
                }
            }
        }
    }
    Ok(SscVerdict::Inconclusive { gap_upper: upper })
}

fn certain(a: &Scalar, b: &Scalar, what: &str) -> Result<Ordering> {
    a.cmp_certain(b).ok_or_else(|| Error::Domain(format!("cannot order {a} and {b} ({what})")))
}

/// The stopping-time family `Ψ_r`: words with `α_I ≤ r < α_{I⁻}`, where `I⁻`
/// drops the last letter. Lexicographic order.
pub fn stopping_family(ifs: &Ifs, r: &Scalar) -> Result<Vec<CylinderWord>> {
    if certain(r, &Scalar::zero(), "r > 0")? != Ordering::Greater {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    for m in ifs.maps() {
        if certain(r, &m.scale, "r < alpha_min")? != Ordering::Less {
            return Err(Error::Domain(format!("r = {r} is not below the smallest ratio {}", ifs.alpha_min_scalar())));
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(CylinderWord::empty(), Scalar::one())];
    while let Some((w, p)) = stack.pop() {
        for i in 0..ifs.len() as u8 {
            let q = &p * &ifs.maps()[i as usize].scale;
            if certain(&q, r, "cylinder ratio vs r")? != Ordering::Greater {
                out.push(w.child(i));
                if out.len() > STOPPING_CAP {
                    return Err(Error::ResourceLimit {
                        what: "stopping family",
                        requested: out.len() as u128,
                        cap: STOPPING_CAP as u128,
                    });
                }
            } else {
                stack.push((w.child(i), q));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Decides `dist(φ_I(F), φ_J(F)) ≤ r` by refining boxes (lower bound) and
/// exact anchors (upper bound).
pub fn cylinders_within(ifs: &Ifs, a: &CylinderWord, b: &CylinderWord, r: &Scalar) -> Result<bool> {
    if a == b {
        return Ok(true);
    }
    let ri = r.to_interval();
    let r2 = r * r;
    let mut extra = 0;
    loop {
        let ba: Vec<CoverBox> = cylinder_boxes(ifs, a, extra);
        let bb = RectIndex::new(cylinder_boxes(ifs, b, extra).into_iter().map(|c| c.rect).collect());
        let lb = ba.iter().map(|c| bb.min_dist(&c.rect).lo()).fold(f64::INFINITY, f64::min);
        if lb > ri.hi() {
            return Ok(false);
        }
        if let (Some(pa), Some(pb)) = (exact_anchors_under(ifs, a, extra), exact_anchors_under(ifs, b, extra)) {
            let r2 = r2.exact().cloned();
            if let Some(r2) = r2 {
                let hit = pa.iter().any(|p| {
                    pb.iter().any(|q| {
                        let dx = &p[0] - &q[0];
                        let dy = &p[1] - &q[1];
                        &dx * &dx + &dy * &dy <= r2
                    })
                });
                if hit {
                    return Ok(true);
                }
            }
        } else {
            let pa = super::cover::anchors_under(ifs, a, extra)?;
            let pb = super::cover::anchors_under(ifs, b, extra)?;
            let idx = RectIndex::new(pb.iter().map(|x| Rect::from_point(&x.point)).collect());
            let ub = pa.iter().map(|x| idx.min_max_dist(&Rect::from_point(&x.point))).fold(f64::INFINITY, f64::min);
            if ub <= ri.lo() {
                return Ok(true);
            }
        }
        extra += 1;
        if ifs.len().pow(extra as u32) > 256 {
            return Err(Error::AmbiguousCylinder(format!(
                "distance between cylinders {a} and {b} too close to r = {r} to decide"
            )));
        }
    }
}

/// `|{J ∈ Ψ_r : dist(φ_I(F), φ_J(F)) ≤ r}|`, counting `I` itself.
pub fn neighbor_count(ifs: &Ifs, r: &Scalar, word: &CylinderWord) -> Result<usize> {
    ifs.check_word(word)?;
    let family = stopping_family(ifs, r)?;
    if family.binary_search(word).is_err() {
        return Err(Error::Domain(format!("word {word} is not in the stopping family for r = {r}")));
    }
    let rects: Vec<Rect> = family.iter().map(|w| ifs.cylinder_rect(w)).collect();
    let index = RectIndex::new(rects);
    let near = index.within(&ifs.cylinder_rect(word), r.to_interval().hi());
    let mut count = 0;
    for k in near {
        if cylinders_within(ifs, word, &family[k], r)? {
            count += 1;
        }
    }
    Ok(count)
}
