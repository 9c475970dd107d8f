use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use super::affine::Rect;
use super::cover::BoxCover;
use crate::error::{Error, Result};
use crate::numerics::Interval;

type Entry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// R-tree over rectangles answering certified box-to-set distance queries.
pub struct RectIndex {
    rects: Vec<Rect>,
    tree: RTree<Entry>,
}

impl RectIndex {
    pub fn new(rects: Vec<Rect>) -> Self {
        let entries = rects
            .iter()
            .enumerate()
            .map(|(k, r)| GeomWithData::new(Rectangle::from_corners([r.x.lo(), r.y.lo()], [r.x.hi(), r.y.hi()]), k))
            .collect();
        RectIndex { rects, tree: RTree::bulk_load(entries) }
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// Indices of all rectangles whose float distance to the centre of `q`
    /// could make them the closest to `q`.
    fn candidates(&self, q: &Rect) -> Vec<usize> {
        let c = q.center();
        let Some(nearest) = self.tree.nearest_neighbor(&c) else {
            return Vec::new();
        };
        let d0 = self.rects[nearest.data].dist(&Rect::point(c)).hi();
        let half = q.diam() / 2.0;
        // anything farther than d0 + 2·half from the centre cannot beat `nearest`
        let reach = (d0 + 2.0 * half) * (1.0 + 1e-12) + 1e-300;
        self.tree.locate_within_distance(c, reach * reach).map(|e| e.data).collect()
    }

    /// Enclosure of `min_r dist(q, r)`.
    pub fn min_dist(&self, q: &Rect) -> Interval {
        self.candidates(q)
            .into_iter()
            .map(|k| q.dist(&self.rects[k]))
            .reduce(|a, b| a.min(&b))
            .unwrap_or(Interval::point(f64::INFINITY))
    }

    /// Upper bound on `min_r sup_{p∈q, s∈r} |p − s|`, the farthest a point of
    /// `q` can be from a point guaranteed to lie in some `r`.
    pub fn min_max_dist(&self, q: &Rect) -> f64 {
        self.candidates(q)
            .into_iter()
            .map(|k| q.max_dist(&self.rects[k]).hi())
            .fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on `min_r sup_{p∈q} dist(p, r)`.
    pub fn min_excess(&self, q: &Rect) -> f64 {
        self.candidates(q)
            .into_iter()
            .map(|k| q.excess(&self.rects[k]).hi())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether some rectangle meets `q` inflated by `r`.
    pub fn meets(&self, q: &Rect, r: f64) -> bool {
        let g = q.inflate(r);
        let env = AABB::from_corners([g.x.lo(), g.y.lo()], [g.x.hi(), g.y.hi()]);
        self.tree.locate_in_envelope_intersecting(&env).next().is_some()
    }

    /// Indices of rectangles meeting `q` inflated by `r`.
    pub fn within(&self, q: &Rect, r: f64) -> Vec<usize> {
        let g = q.inflate(r);
        let env = AABB::from_corners([g.x.lo(), g.y.lo()], [g.x.hi(), g.y.hi()]);
        self.tree.locate_in_envelope_intersecting(&env).map(|e| e.data).collect()
    }
}

/// One-sided enclosure of `sup_{a∈A} dist(a, B)`.
pub fn directed_distance(a: &BoxCover, index_b: &RectIndex) -> Interval {
    let (lo, hi) = a
        .boxes
        .par_iter()
        .map(|b| (index_b.min_dist(&b.rect).lo(), index_b.min_max_dist(&b.rect)))
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    Interval::new(lo, hi.max(lo))
}

/// Enclosure of the Hausdorff distance between the compact sets covered by
/// `a` and `b`. Each box must contain a point of its set; for point sets the
/// enclosure is tight up to rounding.
pub fn hausdorff_distance(a: &BoxCover, b: &BoxCover) -> Result<Interval> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let ia = RectIndex::new(a.rects());
    let ib = RectIndex::new(b.rects());
    let ab = directed_distance(a, &ib);
    let ba = directed_distance(b, &ia);
    Ok(ab.max(&ba))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{attractor_cover, presets};
    use proptest::prelude::*;

    #[test]
    fn two_points() {
        let a = BoxCover::from_points(&[[0.0, 0.0]]);
        let b = BoxCover::from_points(&[[1.0, 0.0]]);
        let d = hausdorff_distance(&a, &b).unwrap();
        assert!(d.contains(1.0) && d.width() < 1e-15);
        assert_eq!(hausdorff_distance(&a, &a).unwrap().hi(), 0.0);
    }

    #[test]
    fn empty_is_error() {
        let a = BoxCover::from_points(&[]);
        let b = BoxCover::from_points(&[[1.0, 0.0]]);
        assert!(matches!(hausdorff_distance(&a, &b), Err(Error::EmptySet)));
    }

    #[test]
    fn cantor_to_interval() {
        // the farthest point of [0,1] from C is 1/2, at distance 1/6
        let c = attractor_cover(&presets::cantor(), 8).unwrap();
        let s = attractor_cover(&presets::segment(), 12).unwrap();
        let d = hausdorff_distance(&c, &s).unwrap();
        assert!(d.contains(1.0 / 6.0), "{d}");
        assert!(d.width() < 3f64.powi(-6), "{d}");
    }

    fn brute(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        let dir = |x: &[[f64; 2]], y: &[[f64; 2]]| {
            x.iter()
                .map(|p| y.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    fn cloud() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| [x, y]), 1..25)
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in cloud(), b in cloud()) {
            let d = hausdorff_distance(&BoxCover::from_points(&a), &BoxCover::from_points(&b)).unwrap();
            let want = brute(&a, &b);
            prop_assert!(d.lo() <= want + 1e-12 && want <= d.hi() + 1e-12);
            prop_assert!(d.width() < 1e-12);
        }
    }
}
