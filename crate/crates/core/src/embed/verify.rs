use std::collections::HashMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::TargetTree;
use crate::error::{Error, Result};
use crate::ifs::{anchors_under, exact_point, AffineMap2, CylinderWord, IAffine, Ifs, Rect};
use crate::numerics::{Interval, Scalar, Vector2};

/// Default cap on the number of maps in a symbolic certificate.
pub const SYMBOLIC_CAP: usize = 1 << 14;
/// Cap on source cylinders examined by a numeric check.
pub const NUMERIC_NODE_CAP: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Numeric,
    Symbolic,
    /// Symbolic first when the inputs are exact, numeric otherwise.
    Auto,
}

/// A point of `F` whose image is certified to be far from `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub source: [Scalar; 2],
    pub image: [Scalar; 2],
    /// Certified lower bound on `dist(g(source), E)`.
    pub distance_lower: f64,
}

/// One step of a self-referential containment proof:
/// `maps[from] ∘ φ_letter = ψ_target ∘ maps[to]` holds exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub letter: u8,
    pub target: CylinderWord,
    pub to: usize,
}

/// A finite set of exact affine maps, starting with `g`, closed under the
/// transitions above. Since every target word is nonempty, each map sends
/// `F` into `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicCertificate {
    pub maps: Vec<AffineMap2>,
    pub transitions: Vec<Transition>,
}

impl SymbolicCertificate {
    /// Re-checks every transition with exact arithmetic.
    pub fn check(&self, f: &Ifs, e: &Ifs) -> bool {
        let mut seen = vec![vec![false; f.len()]; self.maps.len()];
        for t in &self.transitions {
            if t.target.is_empty() || t.from >= self.maps.len() || t.to >= self.maps.len() {
                return false;
            }
            let lhs = self.maps[t.from].compose(f.affine(t.letter as usize));
            let rhs = e.compose_word(t.target.as_slice()).compose(&self.maps[t.to]);
            if !lhs.exact_eq(&rhs) {
                return false;
            }
            seen[t.from][t.letter as usize] = true;
        }
        seen.iter().all(|row| row.iter().all(|&b| b))
    }

    pub fn max_target_len(&self) -> usize {
        self.transitions.iter().map(|t| t.target.len()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub status: VerdictStatus,
    /// Resolution of the statement; 0 for a symbolic certificate.
    pub eps: f64,
    pub witness: Option<Witness>,
    pub symbolic_certificate: Option<SymbolicCertificate>,
    /// Number of source cylinders examined by the numeric check.
    pub source_boxes: usize,
    pub mode: VerifyMode,
}

impl EmbeddingVerdict {
    pub fn is_certified(&self) -> bool {
        self.status == VerdictStatus::Certified
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub mode: VerifyMode,
    pub symbolic_cap: usize,
    /// Depth of the anchors tried as refutation witnesses.
    pub anchor_depth: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { mode: VerifyMode::Auto, symbolic_cap: SYMBOLIC_CAP, anchor_depth: None }
    }
}

/// Checks `g(F) ⊆ E`: symbolically when possible, else at resolution `eps`.
pub fn verify_containment(g: &AffineMap2, f: &Ifs, e: &Ifs, eps: f64) -> Result<EmbeddingVerdict> {
    verify_with(g, f, e, eps, &VerifyOptions::default())
}

pub fn verify_with(g: &AffineMap2, f: &Ifs, e: &Ifs, eps: f64, opts: &VerifyOptions) -> Result<EmbeddingVerdict> {
    let exact = g.is_exact() && f.is_exact() && e.is_exact();
    if opts.mode != VerifyMode::Numeric && exact {
        if let Some(cert) = symbolic_certificate(g, f, e, opts.symbolic_cap) {
            return Ok(EmbeddingVerdict {
                status: VerdictStatus::Certified,
                eps: 0.0,
                witness: None,
                symbolic_certificate: Some(cert),
                source_boxes: 0,
                mode: VerifyMode::Symbolic,
            });
        }
    }
    if opts.mode == VerifyMode::Symbolic {
        if !exact {
            return Err(Error::Domain("symbolic verification needs exact rational inputs".into()));
        }
        if !(eps > 0.0) {
            return Ok(EmbeddingVerdict {
                status: VerdictStatus::Inconclusive,
                eps: 0.0,
                witness: None,
                symbolic_certificate: None,
                source_boxes: 0,
                mode: VerifyMode::Symbolic,
            });
        }
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("numeric verification needs eps > 0, got {eps}")));
    }
    numeric_verdict(g, f, e, eps, opts.anchor_depth)
}

fn exact_rect(m: &AffineMap2, b: &Rect) -> Rect {
    m.to_interval().apply_rect(b)
}

/// Builds a symbolic certificate by closing `{g}` under
/// `h ↦ ψ_J⁻¹ ∘ h ∘ φ_i`, with `J` chosen by descending `E`'s tree.
pub fn symbolic_certificate(g: &AffineMap2, f: &Ifs, e: &Ifs, cap: usize) -> Option<SymbolicCertificate> {
    if !(g.is_exact() && f.is_exact() && e.is_exact()) {
        return None;
    }
    let tree = TargetTree::new(e);
    let fbox = *f.bbox();
    let mut maps = vec![g.clone()];
    let mut index: HashMap<Vec<BigRational>, usize> = HashMap::new();
    index.insert(key(g)?, 0);
    let mut transitions = Vec::new();
    let mut head = 0;
    while head < maps.len() {
        let h = maps[head].clone();
        for i in 0..f.len() {
            let m = h.compose(f.affine(i));
            let img = exact_rect(&m, &fbox);
            let target = deepest_container(&tree, &img)?;
            let next = e.compose_word(target.as_slice()).inverse().ok()?.compose(&m);
            let k = key(&next)?;
            let to = match index.get(&k) {
                Some(&t) => t,
                None => {
                    if maps.len() >= cap || strays(&next, f, &tree) {
                        return None;
                    }
                    index.insert(k, maps.len());
                    maps.push(next);
                    maps.len() - 1
                }
            };
            transitions.push(Transition { from: head, letter: i as u8, target, to });
        }
        head += 1;
    }
    Some(SymbolicCertificate { maps, transitions })
}

// A new map sending a fixed point of `F` off `E` cannot belong to a
// certificate for a genuine embedding with separated cylinders; stop early.
fn strays(m: &AffineMap2, f: &Ifs, tree: &TargetTree) -> bool {
    let mi = m.to_interval();
    let res = tree.ifs().diameter() / 64.0;
    f.fixed_points().iter().any(|p| tree.dist_lower(&Rect::from_point(&mi.apply(&p.to_intervals())), res, 0.0) > 0.0)
}

pub(crate) fn key(m: &AffineMap2) -> Option<Vec<BigRational>> {
    let mut k = Vec::with_capacity(6);
    for s in m.linear.entries() {
        k.push(s.exact()?.clone());
    }
    k.push(m.translation.x.exact()?.clone());
    k.push(m.translation.y.exact()?.clone());
    Some(k)
}

// Longest nonempty word whose cylinder box contains `img` (unique child at
// every level).
fn deepest_container(tree: &TargetTree, img: &Rect) -> Option<CylinderWord> {
    let e = tree.ifs();
    let mut w = CylinderWord::empty();
    let mut m = IAffine::identity();
    for _ in 0..64 {
        let mut hit = None;
        for i in 0..e.len() {
            let g = m.compose(e.imap(i));
            if g.apply_rect(e.bbox()).inflate(1e-12).contains_rect(img) {
                if hit.is_some() {
                    hit = None;
                    break;
                }
                hit = Some((i, g));
            }
        }
        match hit {
            Some((i, g)) => {
                w.push(i as u8);
                m = g;
            }
            None => break,
        }
    }
    (!w.is_empty()).then_some(w)
}

/// Anchor depth with at most ~4096 anchors.
fn default_anchor_depth(f: &Ifs) -> usize {
    let mut d = 0;
    while f.len().pow(d as u32 + 1) * f.len() <= 4096 {
        d += 1;
    }
    d
}

fn numeric_verdict(g: &AffineMap2, f: &Ifs, e: &Ifs, eps: f64, anchor_depth: Option<usize>) -> Result<EmbeddingVerdict> {
    let tree = TargetTree::new(e);
    let gi = g.to_interval();
    let (ok, boxes) = numeric_cover_check(&gi, f, &tree, eps);
    if ok {
        return Ok(EmbeddingVerdict {
            status: VerdictStatus::Certified,
            eps,
            witness: None,
            symbolic_certificate: None,
            source_boxes: boxes,
            mode: VerifyMode::Numeric,
        });
    }
    let witness = refutation_witness(g, f, &tree, eps, anchor_depth.unwrap_or_else(|| default_anchor_depth(f)))?;
    Ok(EmbeddingVerdict {
        status: if witness.is_some() { VerdictStatus::Refuted } else { VerdictStatus::Inconclusive },
        eps,
        witness,
        symbolic_certificate: None,
        source_boxes: boxes,
        mode: VerifyMode::Numeric,
    })
}

/// Adaptive descent through `F`'s cylinders: a source cylinder is settled
/// once its image box lies within `eps` of a single node of `E`'s tree.
/// Returns whether every cylinder settled, and how many were examined.
pub fn numeric_cover_check(g: &IAffine, f: &Ifs, tree: &TargetTree, eps: f64) -> (bool, usize) {
    let fbox = *f.bbox();
    let floor = 0.25 * eps;
    let settle = |m: &IAffine| -> Option<bool> {
        let img = g.compose(m).apply_rect(&fbox);
        if tree.covers(&img, eps, floor) {
            Some(true)
        } else if img.diam() < 0.45 * eps {
            Some(false)
        } else {
            None
        }
    };
    // breadth-first down to a level with enough subtrees for the pool
    let mut frontier = vec![IAffine::identity()];
    let mut examined = 0usize;
    while frontier.len() < 256 {
        let mut next = Vec::new();
        for m in &frontier {
            examined += 1;
            match settle(m) {
                Some(true) => {}
                Some(false) => return (false, examined),
                None => next.extend((0..f.len()).map(|i| m.compose(f.imap(i)))),
            }
        }
        if next.is_empty() {
            return (true, examined);
        }
        frontier = next;
    }
    let results: Vec<(bool, usize)> = frontier
        .par_iter()
        .map(|root| {
            let mut stack = vec![*root];
            let mut count = 0usize;
            while let Some(m) = stack.pop() {
                count += 1;
                if count > NUMERIC_NODE_CAP / 256 {
                    return (false, count);
                }
                match settle(&m) {
                    Some(true) => {}
                    Some(false) => return (false, count),
                    None => stack.extend((0..f.len()).map(|i| m.compose(f.imap(i)))),
                }
            }
            (true, count)
        })
        .collect();
    let ok = results.iter().all(|r| r.0);
    (ok, examined + results.iter().map(|r| r.1).sum::<usize>())
}

/// The anchor of `F` whose image is certifiably farthest from `E`, if that
/// distance exceeds `eps`.
pub fn refutation_witness(g: &AffineMap2, f: &Ifs, tree: &TargetTree, eps: f64, depth: usize) -> Result<Option<Witness>> {
    let gi = g.to_interval();
    let pts = anchors_under(f, &CylinderWord::empty(), depth)?;
    let res = (eps / 4.0).max(1e-9);
    let best = pts
        .par_iter()
        .enumerate()
        .map(|(k, a)| {
            let img = Rect::from_point(&gi.apply(&a.point));
            (k, tree.dist_lower(&img, res, f64::INFINITY))
        })
        .reduce(|| (usize::MAX, f64::NEG_INFINITY), |x, y| if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x });
    if best.0 == usize::MAX || best.1 <= eps {
        return Ok(None);
    }
    let a = &pts[best.0];
    let src = f.compose_word(a.word.as_slice()).apply(f.fixed_point(a.fixed as usize));
    let (source, image) = match (exact_point(&src), g.is_exact()) {
        (Some(_), true) => {
            let im = g.apply(&src);
            ([src.x.clone(), src.y.clone()], [im.x, im.y])
        }
        _ => {
            let im = gi.apply(&a.point);
            ([Scalar::Approx(a.point[0]), Scalar::Approx(a.point[1])], [Scalar::Approx(im[0]), Scalar::Approx(im[1])])
        }
    };
    // tighten the reported gap
    let img = Rect::new(image[0].to_interval(), image[1].to_interval());
    let tight = tree.dist_lower(&img, 1e-7_f64.min(res), f64::INFINITY).max(best.1);
    Ok(Some(Witness { source, image, distance_lower: tight }))
}

/// Image of a point under an interval map, as scalars.
pub fn image_point(g: &AffineMap2, p: &Vector2) -> [Interval; 2] {
    g.to_interval().apply(&p.to_intervals())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    #[test]
    fn product_scaling_is_symbolically_certified() {
        let e = presets::cxc();
        let g = AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)]);
        let v = verify_containment(&g, &e, &e, 0.01).unwrap();
        assert_eq!(v.status, VerdictStatus::Certified);
        assert_eq!(v.eps, 0.0);
        let cert = v.symbolic_certificate.unwrap();
        assert!(cert.check(&e, &e));
        assert!(cert.max_target_len() <= 2);
        // oracle: g, (x, y/3) and (x, (y+2)/3)
        assert_eq!(cert.maps.len(), 3);
        assert!(cert.maps.iter().any(|m| m.exact_eq(&AffineMap2::ratios([(1, 1), (0, 1), (0, 1), (1, 3), (0, 1), (0, 1)]))));
        assert!(cert.maps.iter().any(|m| m.exact_eq(&AffineMap2::ratios([(1, 1), (0, 1), (0, 1), (1, 3), (0, 1), (2, 3)]))));
    }

    #[test]
    fn identity_is_certified() {
        for f in [presets::cxc(), presets::half_turn(), presets::cantor()] {
            let v = verify_containment(&AffineMap2::identity(), &f, &f, 0.01).unwrap();
            assert!(v.is_certified() && v.eps == 0.0);
        }
    }

    #[test]
    fn half_scaling_is_refuted() {
        let e = presets::cxc();
        let g = AffineMap2::ratios([(1, 2), (0, 1), (0, 1), (1, 2), (0, 1), (0, 1)]);
        let v = verify_containment(&g, &e, &e, 0.1).unwrap();
        assert_eq!(v.status, VerdictStatus::Refuted);
        let w = v.witness.unwrap();
        assert_eq!(w.source, [Scalar::int(1), Scalar::int(1)]);
        assert_eq!(w.image, [Scalar::ratio(1, 2), Scalar::ratio(1, 2)]);
        let want = 2f64.sqrt() / 6.0;
        assert!(w.distance_lower <= want && w.distance_lower > want - 1e-6);
    }

    #[test]
    fn numeric_mode_certifies_cylinder_maps() {
        let e = presets::cxc();
        let g = e.compose_word(&[3, 0]);
        let opts = VerifyOptions { mode: VerifyMode::Numeric, ..Default::default() };
        let v = verify_with(&g, &e, &e, 1e-3, &opts).unwrap();
        assert!(v.is_certified());
        assert!(v.source_boxes >= 1);
        assert!(matches!(verify_with(&g, &e, &e, 0.0, &opts), Err(Error::Domain(_))));
    }

    #[test]
    fn shear_embeds_c_times_interval() {
        let f = presets::c_times_interval();
        let g = AffineMap2::ratios([(1, 3), (0, 1), (1, 4), (1, 3), (0, 1), (0, 1)]);
        let opts = VerifyOptions { mode: VerifyMode::Numeric, ..Default::default() };
        let v = verify_with(&g, &f, &f, 2f64.powi(-8), &opts).unwrap();
        assert!(v.is_certified(), "{v:?}");
    }
}
