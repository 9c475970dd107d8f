//! Lazy descent through the cylinder tree of a target attractor.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ifs::{CylinderWord, IAffine, Ifs, Rect};

/// Cap on nodes touched by a single query.
pub const NODE_BUDGET: usize = 2_000_000;

struct Node {
    key: f64,
    depth: usize,
    map: IAffine,
    rect: Rect,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // min-heap on key, deeper nodes first among ties
    fn cmp(&self, o: &Self) -> Ordering {
        o.key.total_cmp(&self.key).then(self.depth.cmp(&o.depth))
    }
}

/// Distance queries against an attractor `E` without materialising a cover.
/// Every tree node box contains at least one point of `E`.
#[derive(Clone, Copy)]
pub struct TargetTree<'a> {
    ifs: &'a Ifs,
}

impl<'a> TargetTree<'a> {
    pub fn new(ifs: &'a Ifs) -> Self {
        TargetTree { ifs }
    }

    pub fn ifs(&self) -> &Ifs {
        self.ifs
    }

    fn children(&self, map: &IAffine) -> impl Iterator<Item = (IAffine, Rect)> + '_ {
        let m = *map;
        (0..self.ifs.len()).map(move |i| {
            let g = m.compose(self.ifs.imap(i));
            (g, g.apply_rect(self.ifs.bbox()))
        })
    }

    /// Lower bound on `dist(q, E)`, refined until the frontier nodes have
    /// diameter ≤ `res`. Returns early with a value `> stop_above` as soon as
    /// the bound exceeds it.
    pub fn dist_lower(&self, q: &Rect, res: f64, stop_above: f64) -> f64 {
        let root = IAffine::identity();
        let rect = *self.ifs.bbox();
        let mut heap = BinaryHeap::new();
        heap.push(Node { key: q.dist(&rect).lo(), depth: 0, map: root, rect });
        let mut budget = NODE_BUDGET;
        while let Some(n) = heap.pop() {
            if n.key > stop_above || n.rect.diam() <= res {
                return n.key;
            }
            // a node inside q holds a point of E inside q
            if q.contains_rect(&n.rect) {
                return 0.0;
            }
            if budget < self.ifs.len() {
                return n.key;
            }
            budget -= self.ifs.len();
            for (g, r) in self.children(&n.map) {
                heap.push(Node { key: q.dist(&r).lo().max(n.key), depth: n.depth + 1, map: g, rect: r });
            }
        }
        f64::INFINITY
    }

    /// Upper bound on `dist(p, E)` for a point enclosure `p`: the distance to
    /// the closest attractor anchor met during a descent to resolution `res`.
    pub fn dist_upper(&self, q: &Rect, res: f64) -> f64 {
        let mut best = f64::INFINITY;
        let fixed: Vec<_> = self.ifs.fixed_points().iter().map(|v| v.to_intervals()).collect();
        let mut stack = vec![(IAffine::identity(), *self.ifs.bbox())];
        let mut budget = NODE_BUDGET;
        while let Some((m, rect)) = stack.pop() {
            if q.dist(&rect).lo() > best {
                continue;
            }
            for p in &fixed {
                best = best.min(q.max_dist(&Rect::from_point(&m.apply(p))).hi());
            }
            if rect.diam() <= res || budget < self.ifs.len() {
                continue;
            }
            budget -= self.ifs.len();
            let mut kids: Vec<_> = self.children(&m).collect();
            kids.sort_by(|a, b| q.dist(&b.1).lo().total_cmp(&q.dist(&a.1).lo()));
            stack.extend(kids);
        }
        best
    }

    /// Whether some tree node `b` satisfies `sup_{p∈q, s∈b} |p − s| ≤ eps`,
    /// which puts every point of `q` within `eps` of `E`. Nodes smaller than
    /// `floor` are not expanded.
    pub fn covers(&self, q: &Rect, eps: f64, floor: f64) -> bool {
        let mut stack = vec![(IAffine::identity(), *self.ifs.bbox())];
        let mut budget = NODE_BUDGET;
        while let Some((m, rect)) = stack.pop() {
            if q.max_dist(&rect).hi() <= eps {
                return true;
            }
            if q.dist(&rect).lo() > eps || rect.diam() < floor || budget < self.ifs.len() {
                continue;
            }
            budget -= self.ifs.len();
            let mut kids: Vec<_> = self.children(&m).filter(|(_, r)| q.dist(r).lo() <= eps).collect();
            // nearest child on top of the stack
            kids.sort_by(|a, b| q.max_dist(&b.1).hi().total_cmp(&q.max_dist(&a.1).hi()));
            stack.extend(kids);
        }
        false
    }

    /// Words of generation `n` whose boxes meet `q`.
    pub fn words_meeting(&self, q: &Rect, n: usize) -> Vec<CylinderWord> {
        let mut out = Vec::new();
        let mut stack = vec![(CylinderWord::empty(), IAffine::identity())];
        while let Some((w, m)) = stack.pop() {
            if w.len() == n {
                out.push(w);
                continue;
            }
            for (i, (g, r)) in self.children(&m).enumerate() {
                if r.intersects(q) {
                    stack.push((w.child(i as u8), g));
                }
            }
        }
        out.sort();
        out
    }

    /// Follows the unique child box containing `p` for `n` levels; `None` when
    /// no child or more than one child contains it.
    pub fn descend(&self, p: &Rect, n: usize) -> Option<CylinderWord> {
        let mut w = CylinderWord::empty();
        let mut m = IAffine::identity();
        for _ in 0..n {
            let hits: Vec<(usize, IAffine)> =
                self.children(&m).enumerate().filter(|(_, (_, r))| r.contains_rect(p)).map(|(i, (g, _))| (i, g)).collect();
            if hits.len() != 1 {
                return None;
            }
            w.push(hits[0].0 as u8);
            m = hits[0].1;
        }
        Some(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    #[test]
    fn distance_to_cxc() {
        let e = presets::cxc();
        let t = TargetTree::new(&e);
        let q = Rect::point([0.5, 0.5]);
        let lo = t.dist_lower(&q, 1e-7, f64::INFINITY);
        let hi = t.dist_upper(&q, 1e-3);
        let want = 2f64.sqrt() / 6.0;
        assert!(lo <= want && want <= hi, "{lo} {hi}");
        assert!(want - lo < 1e-6 && hi - want < 1e-12);
    }

    #[test]
    fn covers_points_of_e() {
        let e = presets::cxc();
        let t = TargetTree::new(&e);
        assert!(t.covers(&Rect::point([2.0 / 9.0, 1.0]), 1e-3, 2e-4));
        assert!(!t.covers(&Rect::point([0.5, 0.5]), 0.1, 0.01));
    }

    #[test]
    fn meeting_and_descent() {
        let e = presets::cxc();
        let t = TargetTree::new(&e);
        let q = Rect::from_bounds(0.0, 1.0 / 3.0, 0.0, 1.0 / 9.0);
        assert_eq!(t.words_meeting(&q, 1), vec![CylinderWord::from_slice(&[0])]);
        assert_eq!(t.descend(&Rect::point([1.0, 1.0]), 3).unwrap().as_slice(), &[3, 3, 3]);
        assert!(t.descend(&Rect::point([0.5, 0.5]), 1).is_none());
    }
}
