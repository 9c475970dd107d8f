use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::affine::{AffineMap2, IAffine, Rect};
use super::system::Ifs;
use super::word::CylinderWord;
use crate::error::{Error, Result};
use crate::numerics::{Interval, Vector2};

/// Default cap on the number of boxes in one cover.
pub const DEFAULT_BOX_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverBox {
    pub word: CylinderWord,
    pub rect: Rect,
}

/// A depth-stamped outer cover of a compact set. Every box contains at
/// least one point of the set, which the Hausdorff bounds rely on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCover {
    pub depth: usize,
    pub boxes: Vec<CoverBox>,
    /// Upper bound on the radius of a ball about the origin holding the set.
    pub bounding_radius: f64,
}

impl BoxCover {
    /// Degenerate boxes for a finite point set.
    pub fn from_points(points: &[[f64; 2]]) -> Self {
        let boxes = points.iter().map(|p| CoverBox { word: CylinderWord::empty(), rect: Rect::point(*p) }).collect();
        let r = points.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        BoxCover { depth: 0, boxes, bounding_radius: r.next_up() }
    }

    pub fn from_rects(depth: usize, rects: Vec<Rect>) -> Self {
        let r = rects
            .iter()
            .flat_map(|b| b.corners())
            .map(|p| p[0].hypot(p[1]).next_up())
            .fold(0.0, f64::max);
        let boxes = rects.into_iter().map(|rect| CoverBox { word: CylinderWord::empty(), rect }).collect();
        BoxCover { depth, boxes, bounding_radius: r }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn rects(&self) -> Vec<Rect> {
        self.boxes.iter().map(|b| b.rect).collect()
    }

    pub fn bbox(&self) -> Option<Rect> {
        self.boxes.iter().map(|b| b.rect).reduce(|a, b| a.hull(&b))
    }

    pub fn max_diam(&self) -> f64 {
        self.boxes.iter().map(|b| b.rect.diam()).fold(0.0, f64::max)
    }

    /// Image of every box under an interval affine map.
    pub fn map(&self, g: &IAffine) -> BoxCover {
        let boxes: Vec<CoverBox> =
            self.boxes.iter().map(|b| CoverBox { word: b.word.clone(), rect: g.apply_rect(&b.rect) }).collect();
        let r = boxes
            .iter()
            .flat_map(|b| b.rect.corners())
            .map(|p| p[0].hypot(p[1]).next_up())
            .fold(0.0, f64::max);
        BoxCover { depth: self.depth, boxes, bounding_radius: r }
    }
}

/// Upper bound `R` with the attractor inside the closed ball `B(0, R)`.
///
/// Starts from `max‖t_i‖/(1 − α_max)` and tightens with depth-k cylinder
/// balls and the corners of the bounding box.
pub fn bounding_ball(ifs: &Ifs) -> f64 {
    ifs.cached_radius(|| tightened_radius(ifs))
}

fn tightened_radius(ifs: &Ifs) -> f64 {
    let r0 = ifs.crude_radius();
    let k = ifs.tighten_depth();
    let mut tight: f64 = 0.0;
    for w in CylinderWord::all_of_length(ifs.len(), k) {
        let g = ifs.word_imap(w.as_slice());
        let [x, y] = g.t;
        let c = (x.sqr() + y.sqr()).sqrt().hi();
        let rad = (Interval::point(c) + ifs.word_scale_interval(w.as_slice()) * Interval::point(r0)).hi();
        tight = tight.max(rad);
    }
    let corner = ifs
        .bbox()
        .corners()
        .iter()
        .map(|p| (Interval::point(p[0]).sqr() + Interval::point(p[1]).sqr()).sqrt().hi())
        .fold(0.0, f64::max);
    r0.min(tight).min(corner)
}

/// Smallest depth `n` with `2R·α_max^n < eps`.
pub fn depth_for_resolution(ifs: &Ifs, eps: f64) -> usize {
    let r = bounding_ball(ifs).max(ifs.diameter() / 2.0);
    let a = ifs.alpha_max();
    let mut n = 0;
    let mut size = 2.0 * r;
    while size >= eps && n < 64 {
        size *= a;
        n += 1;
    }
    n
}

fn check_cap(l: usize, depth: usize, cap: u128) -> Result<()> {
    let requested = (l as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if requested > cap {
        return Err(Error::ResourceLimit { what: "cover boxes", requested, cap });
    }
    Ok(())
}

/// Depth-first walk over all words of length `depth` extending `prefix`,
/// handing each word and its composed interval map to `visit`.
pub fn walk_words(
    ifs: &Ifs,
    prefix: &CylinderWord,
    base: IAffine,
    depth: usize,
    visit: &mut dyn FnMut(&CylinderWord, &IAffine),
) {
    if depth == 0 {
        visit(prefix, &base);
        return;
    }
    for i in 0..ifs.len() as u8 {
        let g = base.compose(ifs.imap(i as usize));
        walk_words(ifs, &prefix.child(i), g, depth - 1, visit);
    }
}

/// One box `φ_I(bbox)` per word `I` of length `depth`, in lexicographic order.
pub fn attractor_cover(ifs: &Ifs, depth: usize) -> Result<BoxCover> {
    attractor_cover_with_cap(ifs, depth, DEFAULT_BOX_CAP)
}

pub fn attractor_cover_with_cap(ifs: &Ifs, depth: usize, cap: u128) -> Result<BoxCover> {
    check_cap(ifs.len(), depth, cap)?;
    let boxes = cylinder_boxes(ifs, &CylinderWord::empty(), depth);
    Ok(BoxCover { depth, boxes, bounding_radius: bounding_ball(ifs) })
}

/// Boxes of all depth-`extra` sub-cylinders of `φ_prefix(F)`.
pub fn cylinder_boxes(ifs: &Ifs, prefix: &CylinderWord, extra: usize) -> Vec<CoverBox> {
    let base = ifs.word_imap(prefix.as_slice());
    let bbox = *ifs.bbox();
    // split the tree into enough independent subtrees to keep the pool busy
    let mut split = 0;
    while split < extra && ifs.len().pow(split as u32) < 64 {
        split += 1;
    }
    if extra < 6 || split == 0 {
        let mut out = Vec::with_capacity(ifs.len().pow(extra as u32));
        walk_words(ifs, prefix, base, extra, &mut |w, g| out.push(CoverBox { word: w.clone(), rect: g.apply_rect(&bbox) }));
        return out;
    }
    let mut roots = Vec::new();
    walk_words(ifs, prefix, base, split, &mut |w, g| roots.push((w.clone(), *g)));
    let parts: Vec<Vec<CoverBox>> = roots
        .into_par_iter()
        .map(|(w, g)| {
            let mut out = Vec::new();
            walk_words(ifs, &w, g, extra - split, &mut |w, g| {
                out.push(CoverBox { word: w.clone(), rect: g.apply_rect(&bbox) })
            });
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// A point of the attractor: `φ_I(fix_j)` where `fix_j` is the fixed point of `φ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub word: CylinderWord,
    pub fixed: u8,
    pub point: [Interval; 2],
}

impl Anchor {
    pub fn exact(&self, ifs: &Ifs) -> Option<[BigRational; 2]> {
        exact_point(&ifs.compose_word(self.word.as_slice()).apply(ifs.fixed_point(self.fixed as usize)))
    }
}

pub fn exact_point(v: &Vector2) -> Option<[BigRational; 2]> {
    Some([v.x.exact()?.clone(), v.y.exact()?.clone()])
}

/// Anchors `φ_I(fix_j)` for every word of length `depth` and every map `j`.
pub fn anchors(ifs: &Ifs, depth: usize) -> Result<Vec<Anchor>> {
    check_cap(ifs.len(), depth, DEFAULT_BOX_CAP / ifs.len() as u128)?;
    anchors_under(ifs, &CylinderWord::empty(), depth)
}

/// Anchors of the sub-cylinders of `φ_prefix(F)` at `extra` further levels.
pub fn anchors_under(ifs: &Ifs, prefix: &CylinderWord, extra: usize) -> Result<Vec<Anchor>> {
    let fixed: Vec<[Interval; 2]> = ifs.fixed_points().iter().map(Vector2::to_intervals).collect();
    let mut out = Vec::new();
    walk_words(ifs, prefix, ifs.word_imap(prefix.as_slice()), extra, &mut |w, g| {
        for (j, p) in fixed.iter().enumerate() {
            out.push(Anchor { word: w.clone(), fixed: j as u8, point: g.apply(p) });
        }
    });
    Ok(out)
}

/// Exact anchors of the sub-cylinders of `φ_prefix(F)`; `None` for inexact systems.
pub fn exact_anchors_under(ifs: &Ifs, prefix: &CylinderWord, extra: usize) -> Option<Vec<[BigRational; 2]>> {
    if !ifs.is_exact() {
        return None;
    }
    fn rec(ifs: &Ifs, g: &AffineMap2, extra: usize, out: &mut Vec<[BigRational; 2]>) {
        if extra == 0 {
            for p in ifs.fixed_points() {
                if let Some(q) = exact_point(&g.apply(p)) {
                    out.push(q);
                }
            }
            return;
        }
        for i in 0..ifs.len() {
            rec(ifs, &g.compose(ifs.affine(i)), extra - 1, out);
        }
    }
    let mut out = Vec::new();
    rec(ifs, &ifs.compose_word(prefix.as_slice()), extra, &mut out);
    out.sort();
    out.dedup();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    #[test]
    fn ball_radii() {
        assert!(bounding_ball(&presets::cantor()) <= 1.0 + 1e-12);
        assert_eq!(bounding_ball(&presets::point()), 0.0);
        let r = bounding_ball(&presets::cxc());
        assert!(r <= 2f64.sqrt() + 1e-12 && r >= 2f64.sqrt() - 1e-12);
    }

    #[test]
    fn cxc_depth_three() {
        let c = attractor_cover(&presets::cxc(), 3).unwrap();
        assert_eq!(c.len(), 64);
        for b in &c.boxes {
            assert!((b.rect.x.width() - 1.0 / 27.0).abs() < 1e-15);
            assert!((b.rect.y.width() - 1.0 / 27.0).abs() < 1e-15);
        }
    }

    #[test]
    fn depth_zero_is_bbox() {
        let ifs = presets::half_turn();
        let c = attractor_cover(&ifs, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(&c.boxes[0].rect, ifs.bbox());
    }

    #[test]
    fn cantor_depth_two() {
        // oracle: exact composition of x/3 and x/3 + 2/3
        let c = attractor_cover(&presets::cantor(), 2).unwrap();
        let want = [(0.0, 1.0 / 9.0), (2.0 / 9.0, 1.0 / 3.0), (2.0 / 3.0, 7.0 / 9.0), (8.0 / 9.0, 1.0)];
        for (b, (lo, hi)) in c.boxes.iter().zip(want) {
            assert!(b.rect.x.contains(lo) && b.rect.x.contains(hi));
            assert!(b.rect.x.width() - (hi - lo) < 1e-15);
        }
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            attractor_cover_with_cap(&presets::cxc(), 5, 1000),
            Err(Error::ResourceLimit { requested: 1024, .. })
        ));
    }

    #[test]
    fn anchors_lie_in_their_boxes() {
        let ifs = presets::half_turn();
        let cover = attractor_cover(&ifs, 4).unwrap();
        let anchors = anchors(&ifs, 4).unwrap();
        for a in &anchors {
            let b = cover.boxes.iter().find(|b| b.word == a.word).unwrap();
            assert!(b.rect.inflate(1e-12).contains_rect(&Rect::from_point(&a.point)));
        }
        let exact = exact_anchors_under(&ifs, &CylinderWord::from_slice(&[1]), 1).unwrap();
        assert!(exact.len() >= 2);
    }

    #[test]
    fn parallel_split_matches_serial_order() {
        let ifs = presets::cxc();
        let c = attractor_cover(&ifs, 7).unwrap();
        assert!(c.boxes.windows(2).all(|p| p[0].word < p[1].word));
        assert_eq!(c.len(), 4usize.pow(7));
    }
}
