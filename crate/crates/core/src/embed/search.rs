use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::verify::{key, verify_containment, EmbeddingVerdict};
use crate::error::{Error, Result};
use crate::ifs::{
    anchors_under, attractor_cover_with_cap, depth_for_resolution, AffineMap2, CylinderWord, IAffine, Ifs, Orthogonal,
    Rect, RectIndex, Rotation,
};
use crate::numerics::{simplest_rational_in, Interval, Matrix2, Scalar, Vector2};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;
/// Nodes expanded per parallel round.
const BATCH: usize = 64;
/// Target anchor count for the objective.
const ANCHOR_TARGET: usize = 256;
/// Snapped maps verified per cluster of surviving leaves.
const CANDIDATES_PER_CLUSTER: usize = 4;
/// Cap on the outer cover of the target.
const COVER_CAP: u128 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Parameters `(scale, angle in turns, tx, ty)` plus a reflection flag.
    Similarity,
    /// Parameters `(a, b, c, d, tx, ty)`.
    Affine,
}

impl SearchMode {
    pub fn dims(self) -> usize {
        match self {
            SearchMode::Similarity => 4,
            SearchMode::Affine => 6,
        }
    }
}

/// Closed parameter box; a dimension with `lo == hi` is held fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub mode: SearchMode,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Reflection choices tried in similarity mode.
    #[serde(default)]
    pub reflect: Vec<bool>,
}

impl ParamBox {
    /// `scale × angle × tx × ty`, no reflection.
    pub fn similarity(scale: [f64; 2], angle_turns: [f64; 2], tx: [f64; 2], ty: [f64; 2]) -> Self {
        ParamBox {
            mode: SearchMode::Similarity,
            lo: vec![scale[0], angle_turns[0], tx[0], ty[0]],
            hi: vec![scale[1], angle_turns[1], tx[1], ty[1]],
            reflect: vec![false],
        }
    }

    pub fn affine(ranges: [[f64; 2]; 6]) -> Self {
        ParamBox {
            mode: SearchMode::Affine,
            lo: ranges.iter().map(|r| r[0]).collect(),
            hi: ranges.iter().map(|r| r[1]).collect(),
            reflect: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.mode.dims();
        if self.lo.len() != n || self.hi.len() != n {
            return Err(Error::Domain(format!("{:?} mode needs {n} parameter ranges", self.mode)));
        }
        if self.lo.iter().chain(&self.hi).any(|x| !x.is_finite()) || self.lo.iter().zip(&self.hi).any(|(a, b)| a > b) {
            return Err(Error::Domain("parameter ranges must be finite with lo <= hi".into()));
        }
        if self.mode == SearchMode::Similarity {
            if !(self.lo[0] > 0.0 && self.hi[0] <= 1.0) {
                return Err(Error::Domain("scale range must lie in (0, 1]".into()));
            }
            if self.reflect.is_empty() {
                return Err(Error::Domain("no reflection choice given".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub eps: f64,
    /// Boxes whose widest side is below this are leaves.
    pub delta_box: f64,
    pub node_cap: usize,
}

impl SearchOptions {
    pub fn new(eps: f64) -> Self {
        SearchOptions { eps, delta_box: eps, node_cap: DEFAULT_NODE_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub reflect: bool,
    /// Number of touching leaf boxes merged into this hit.
    pub leaves: usize,
    /// Lower bound of the objective over the box.
    pub lower_bound: f64,
    /// Simplest parameters inside the box (or one of its leaves), as a map;
    /// a certified choice is preferred.
    pub center: AffineMap2,
    pub verdict: EmbeddingVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub hits: Vec<SearchHit>,
    pub nodes: usize,
    pub pruned: usize,
    pub anchors: usize,
}

impl SearchReport {
    pub fn certified(&self) -> impl Iterator<Item = &SearchHit> {
        self.hits.iter().filter(|h| h.verdict.is_certified())
    }
}

struct Node {
    bound: f64,
    reflect: bool,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Node {
    fn lex(&self, o: &Node) -> Ordering {
        self.reflect
            .cmp(&o.reflect)
            .then_with(|| cmp_vec(&self.lo, &o.lo))
            .then_with(|| cmp_vec(&self.hi, &o.hi))
    }
}

fn cmp_vec(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
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
    // min-heap on (bound, lexicographic box)
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then_with(|| o.lex(self))
    }
}

fn tau() -> Interval {
    Interval::point(std::f64::consts::TAU).inflate(1e-15)
}

/// Interval map enclosing every parameter choice in the box.
fn box_map(mode: SearchMode, reflect: bool, lo: &[f64], hi: &[f64]) -> IAffine {
    let iv: Vec<Interval> = lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b)).collect();
    match mode {
        SearchMode::Similarity => {
            let th = iv[1] * tau();
            let (c, s) = (th.cos() * iv[0], th.sin() * iv[0]);
            let m = if reflect { [c, s, s, -c] } else { [c, -s, s, c] };
            IAffine { m, t: [iv[2], iv[3]] }
        }
        SearchMode::Affine => IAffine { m: [iv[0], iv[1], iv[2], iv[3]], t: [iv[4], iv[5]] },
    }
}

/// Anchors of `F` grouped by generation (each point listed once, at the
/// first generation producing it), extreme points first within a group.
fn objective_anchors(f: &Ifs) -> Result<Vec<Vec<[Interval; 2]>>> {
    let mut depth = 0;
    while f.len().pow(depth as u32 + 1) * f.len() <= ANCHOR_TARGET {
        depth += 1;
    }
    let c = f.bbox().center();
    let d = |p: &[Interval; 2]| (p[0].mid() - c[0]).hypot(p[1].mid() - c[1]);
    let mut seen: Vec<[f64; 2]> = Vec::new();
    let mut levels = Vec::new();
    for level in 0..=depth {
        let mut pts: Vec<[Interval; 2]> = anchors_under(f, &CylinderWord::empty(), level)?
            .into_iter()
            .map(|a| a.point)
            .filter(|p| !seen.contains(&[p[0].mid(), p[1].mid()]))
            .collect();
        pts.sort_by(|a, b| {
            d(b).total_cmp(&d(a)).then_with(|| a[0].mid().total_cmp(&b[0].mid())).then_with(|| a[1].mid().total_cmp(&b[1].mid()))
        });
        pts.dedup_by(|a, b| a[0].mid() == b[0].mid() && a[1].mid() == b[1].mid());
        seen.extend(pts.iter().map(|p| [p[0].mid(), p[1].mid()]));
        levels.push(pts);
    }
    Ok(levels)
}

/// Lower bound of `sup_x dist(g(x), E)` over every map in a parameter box,
/// from a fixed outer cover of `E`, in steps of `eps/4`. Returns `∞` once
/// some anchor image is certainly farther than `eps` from the cover.
struct Objective {
    cover: RectIndex,
    anchors: Vec<Vec<[Interval; 2]>>,
    /// `diam F · α_max^level` for each anchor level.
    spacing: Vec<f64>,
    centre: [Interval; 2],
    eps: f64,
}

impl Objective {
    fn new(f: &Ifs, e: &Ifs, eps: f64) -> Result<Self> {
        let depth = depth_for_resolution(e, eps / 4.0);
        let cover = attractor_cover_with_cap(e, depth, COVER_CAP)?;
        let anchors = objective_anchors(f)?;
        let spacing = (0..anchors.len()).map(|k| f.diameter() * f.alpha_max().powi(k as i32)).collect();
        let c = f.bbox().center();
        Ok(Objective {
            cover: RectIndex::new(cover.rects()),
            anchors,
            spacing,
            centre: [Interval::point(c[0]), Interval::point(c[1])],
            eps,
        })
    }

    fn anchor_count(&self) -> usize {
        self.anchors.iter().map(Vec::len).sum()
    }

    fn bound(&self, g: &IAffine) -> f64 {
        // anchors much denser than the spread of the box add nothing
        let spread = Rect::from_point(&g.apply(&self.centre)).max_side();
        let norm = g.norm();
        let levels = self.spacing.iter().take_while(|&&s| s * norm >= spread).count().clamp(1, self.anchors.len());
        let mut best = 0.0f64;
        for a in self.anchors[..levels].iter().flatten() {
            let q = Rect::from_point(&g.apply(a));
            if !self.cover.meets(&q, self.eps) {
                return f64::INFINITY;
            }
            for k in [3.0, 2.0, 1.0] {
                let r = k * self.eps / 4.0;
                if r <= best {
                    break;
                }
                if !self.cover.meets(&q, r) {
                    best = r;
                    break;
                }
            }
        }
        best
    }
}

/// The map built from the simplest rational in each parameter range.
pub fn snap_center(mode: SearchMode, reflect: bool, lo: &[f64], hi: &[f64]) -> AffineMap2 {
    let p: Vec<Scalar> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| match simplest_rational_in(Interval::new(a, b)) {
            Some(r) => Scalar::Exact(r),
            None => Scalar::float(0.5 * (a + b)),
        })
        .collect();
    match mode {
        SearchMode::Similarity => {
            let rotation = match &p[1] {
                Scalar::Exact(t) => Rotation::Turns(t.clone()),
                other => Rotation::Radians(std::f64::consts::TAU * other.to_f64()),
            };
            let o = Orthogonal { rotation, reflect };
            AffineMap2::new(o.matrix().scale(&p[0]), Vector2::new(p[2].clone(), p[3].clone()))
        }
        SearchMode::Affine => AffineMap2::new(
            Matrix2::new(p[0].clone(), p[1].clone(), p[2].clone(), p[3].clone()),
            Vector2::new(p[4].clone(), p[5].clone()),
        ),
    }
}

fn split(n: &Node, full_lo: &[f64], full_hi: &[f64]) -> [Node; 2] {
    // widest dimension relative to the original range
    let mut dim = 0;
    let mut widest = -1.0;
    for i in 0..n.lo.len() {
        let span = full_hi[i] - full_lo[i];
        if span <= 0.0 {
            continue;
        }
        let w = (n.hi[i] - n.lo[i]) / span;
        if w > widest {
            widest = w;
            dim = i;
        }
    }
    let mid = 0.5 * (n.lo[dim] + n.hi[dim]);
    let mut a_hi = n.hi.clone();
    a_hi[dim] = mid;
    let mut b_lo = n.lo.clone();
    b_lo[dim] = mid;
    [
        Node { bound: n.bound, reflect: n.reflect, lo: n.lo.clone(), hi: a_hi },
        Node { bound: n.bound, reflect: n.reflect, lo: b_lo, hi: n.hi.clone() },
    ]
}

/// Best-first branch and bound over affine parameters for maps `g` with
/// `g(F) ⊆ E`. Boxes whose certified lower bound exceeds `eps` are pruned;
/// surviving leaves are returned with the verdict of their snapped centre.
/// Results do not depend on the thread count.
pub fn bb_search(f: &Ifs, e: &Ifs, param: &ParamBox, opts: &SearchOptions) -> Result<SearchReport> {
    param.validate()?;
    if !(opts.eps > 0.0) || !(opts.delta_box > 0.0) {
        return Err(Error::Domain("eps and delta_box must be positive".into()));
    }
    let objective = Objective::new(f, e, opts.eps)?;
    let eval = |n: &Node| objective.bound(&box_map(param.mode, n.reflect, &n.lo, &n.hi));

    let mut heap = BinaryHeap::new();
    let mut reflects = param.reflect.clone();
    reflects.sort();
    reflects.dedup();
    if param.mode == SearchMode::Affine {
        reflects = vec![false];
    }
    let mut roots: Vec<Node> =
        reflects.iter().map(|&r| Node { bound: 0.0, reflect: r, lo: param.lo.clone(), hi: param.hi.clone() }).collect();
    let bounds: Vec<f64> = roots.par_iter().map(eval).collect();
    let mut nodes = roots.len();
    let mut pruned = 0;
    for (mut n, b) in roots.drain(..).zip(bounds) {
        n.bound = b;
        if b > opts.eps {
            pruned += 1;
        } else {
            heap.push(n);
        }
    }

    let mut leaves: Vec<Node> = Vec::new();
    while !heap.is_empty() {
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            match heap.pop() {
                Some(n) => batch.push(n),
                None => break,
            }
        }
        let mut children = Vec::new();
        for n in batch {
            let widest = n.lo.iter().zip(&n.hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            if widest < opts.delta_box {
                leaves.push(n);
            } else {
                children.extend(split(&n, &param.lo, &param.hi));
            }
        }
        nodes += children.len();
        if nodes > opts.node_cap {
            return Err(Error::ResourceLimit { what: "bb_search nodes", requested: nodes as u128, cap: opts.node_cap as u128 });
        }
        let bounds: Vec<f64> = children.par_iter().map(eval).collect();
        for (mut c, b) in children.into_iter().zip(bounds) {
            c.bound = b;
            if b > opts.eps {
                pruned += 1;
            } else {
                heap.push(c);
            }
        }
    }
    leaves.sort_by(|a, b| a.lex(b));

    let clusters = cluster(&leaves);
    let mut hits = Vec::with_capacity(clusters.len());
    for members in clusters {
        let first = &leaves[members[0]];
        let mut lo = first.lo.clone();
        let mut hi = first.hi.clone();
        for &m in &members {
            for i in 0..lo.len() {
                lo[i] = lo[i].min(leaves[m].lo[i]);
                hi[i] = hi[i].max(leaves[m].hi[i]);
            }
        }
        // simplest snapped maps of the hull and of each leaf
        let mut candidates = vec![snap_center(param.mode, first.reflect, &lo, &hi)];
        for &m in &members {
            let c = snap_center(param.mode, first.reflect, &leaves[m].lo, &leaves[m].hi);
            if !candidates.iter().any(|x| center_key(x) == center_key(&c)) {
                candidates.push(c);
            }
        }
        candidates.sort_by_cached_key(complexity);
        candidates.truncate(CANDIDATES_PER_CLUSTER);
        let verdicts: Vec<EmbeddingVerdict> =
            candidates.par_iter().map(|c| verify_containment(c, f, e, opts.eps)).collect::<Result<_>>()?;
        // exact certificates first, then certification at resolution
        let pick = verdicts
            .iter()
            .position(|v| v.is_certified() && v.symbolic_certificate.is_some())
            .or_else(|| verdicts.iter().position(|v| v.is_certified()))
            .unwrap_or(0);
        hits.push(SearchHit {
            lo,
            hi,
            reflect: first.reflect,
            leaves: members.len(),
            lower_bound: members.iter().map(|&m| leaves[m].bound).fold(f64::INFINITY, f64::min),
            center: candidates.swap_remove(pick),
            verdict: verdicts[pick].clone(),
        });
    }
    Ok(SearchReport { hits, nodes, pruned, anchors: objective.anchor_count() })
}

/// Connected components of touching leaves, in order of their first member.
fn cluster(leaves: &[Node]) -> Vec<Vec<usize>> {
    let n = leaves.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| leaves[a].lo[0].total_cmp(&leaves[b].lo[0]));
    for (k, &a) in by_x.iter().enumerate() {
        for &b in &by_x[k + 1..] {
            if leaves[b].lo[0] > leaves[a].hi[0] {
                break;
            }
            let touch = leaves[a].reflect == leaves[b].reflect
                && (0..leaves[a].lo.len()).all(|i| leaves[a].lo[i] <= leaves[b].hi[i] && leaves[b].lo[i] <= leaves[a].hi[i]);
            if touch {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

// Total bit length of the denominators; inexact entries count as 64 bits.
fn complexity(m: &AffineMap2) -> u64 {
    let mut entries: Vec<&Scalar> = m.linear.entries().to_vec();
    entries.push(&m.translation.x);
    entries.push(&m.translation.y);
    entries.iter().map(|s| s.exact().map_or(64, |r| r.denom().bits())).sum()
}

fn center_key(m: &AffineMap2) -> String {
    match key(m) {
        Some(k) => k.iter().map(BigRational::to_string).collect::<Vec<_>>().join(","),
        None => format!("{:?}", m.coefficients()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    #[test]
    fn identity_point_box() {
        let e = presets::cxc();
        let p = ParamBox::similarity([1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]);
        let r = bb_search(&e, &e, &p, &SearchOptions::new(1.0 / 64.0)).unwrap();
        assert_eq!(r.hits.len(), 1);
        assert!(r.hits[0].center.exact_eq(&AffineMap2::identity()));
        assert!(r.hits[0].verdict.is_certified());
    }

    #[test]
    fn no_similarity_between_one_third_and_one() {
        let e = presets::cxc();
        let p = ParamBox::similarity([0.4, 0.6], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0]);
        let r = bb_search(&e, &e, &p, &SearchOptions::new(1.0 / 64.0)).unwrap();
        assert!(r.hits.is_empty(), "{:?}", r.hits.len());
    }

    #[test]
    fn finds_the_cylinder_similarities() {
        let e = presets::cxc();
        let p = ParamBox::similarity([0.05, 0.5], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0]);
        let r = bb_search(&e, &e, &p, &SearchOptions::new(1.0 / 256.0)).unwrap();
        let mut found: Vec<AffineMap2> = Vec::new();
        for h in r.certified() {
            if !found.iter().any(|m| m.exact_eq(&h.center)) {
                found.push(h.center.clone());
            }
        }
        assert_eq!(found.len(), 20, "{} nodes", r.nodes);
        for m in &found {
            let s = m.linear.to_f64()[0];
            assert!((s - 1.0 / 3.0).abs() < 1e-6 || (s - 1.0 / 9.0).abs() < 1e-6);
        }
    }

    #[test]
    fn node_cap_is_enforced() {
        let e = presets::cxc();
        let p = ParamBox::similarity([0.05, 0.5], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0]);
        let opts = SearchOptions { node_cap: 50, ..SearchOptions::new(1.0 / 128.0) };
        assert!(matches!(bb_search(&e, &e, &p, &opts), Err(Error::ResourceLimit { .. })));
    }
}
