use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::line::SLICE_NODE_CAP;
use super::wsc::Map1;
use crate::error::{Error, Result};
use crate::ifs::{bounding_ball, check_ssc, BoxCover, CoverBox, CylinderWord, IAffine, Ifs, Rect, DEFAULT_BOX_CAP};
use crate::numerics::{Interval, Scalar};

/// One approximate vertical slice `Sⁿᵢ`: the union of the cylinders whose
/// projected word is `projected`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSlice {
    /// Letters of the projected alphabet (see [`ApproxSlices::classes`]).
    pub projected: Vec<u8>,
    pub cover: BoxCover,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSlices {
    pub n: usize,
    pub x: Scalar,
    /// `p(n, x)`, the number of projected words whose interval holds `x`.
    pub p: usize,
    /// Lexicographic in the projected word.
    pub slices: Vec<ApproxSlice>,
    /// Projected letters `u ↦ ratio·u + translation`, sorted by translation,
    /// with the maps of `F` that project onto each.
    pub classes: Vec<(Scalar, Scalar, Vec<u8>)>,
}

impl ApproxSlices {
    /// `∪ᵢ Sⁿᵢ`.
    pub fn union(&self) -> BoxCover {
        let boxes: Vec<CoverBox> = self.slices.iter().flat_map(|s| s.cover.boxes.iter().cloned()).collect();
        let r = self.slices.iter().map(|s| s.cover.bounding_radius).fold(0.0, f64::max);
        BoxCover { depth: self.n, boxes, bounding_radius: r }
    }
}

fn same(a: &Scalar, b: &Scalar) -> bool {
    a.eq_certain(b).unwrap_or_else(|| (a.to_f64() - b.to_f64()).abs() <= 1e-12)
}

fn classes(ifs: &Ifs) -> Vec<(Scalar, Scalar, Vec<u8>)> {
    let mut out: Vec<(Scalar, Scalar, Vec<u8>)> = Vec::new();
    for (i, m) in ifs.maps().iter().enumerate() {
        match out.iter_mut().find(|c| same(&c.0, &m.scale) && same(&c.1, &m.translation.x)) {
            Some(c) => c.2.push(i as u8),
            None => out.push((m.scale.clone(), m.translation.x.clone(), vec![i as u8])),
        }
    }
    out.sort_by(|a, b| (a.1.to_f64(), a.0.to_f64()).partial_cmp(&(b.1.to_f64(), b.0.to_f64())).expect("finite"));
    out
}

/// A projected map, exact when everything is exact.
#[derive(Clone)]
struct XMap {
    exact: Option<Map1>,
    a: Interval,
    b: Interval,
}

impl XMap {
    fn then(&self, ratio: &Scalar, t: &Scalar) -> XMap {
        let exact = match (&self.exact, ratio.exact(), t.exact()) {
            (Some(m), Some(a), Some(b)) => Some(m.compose(&Map1 { a: a.clone(), b: b.clone() })),
            _ => None,
        };
        XMap { exact, a: self.a * ratio.to_interval(), b: self.a * t.to_interval() + self.b }
    }
}

/// Projected words of length `n` whose hull interval holds `x`, in
/// lexicographic order.
fn projected_words(ifs: &Ifs, cls: &[(Scalar, Scalar, Vec<u8>)], n: usize, x: &Scalar) -> Result<Vec<Vec<u8>>> {
    let exact_hull = ifs.exact_bbox().filter(|_| x.is_exact()).map(|h| (h[0].clone(), h[1].clone()));
    let hull = ifs.bbox().x;
    let xi = x.to_interval();
    let holds = |m: &XMap| -> bool {
        if let (Some(e), Some((h0, h1)), Some(xe)) = (&m.exact, &exact_hull, x.exact()) {
            let (p, q) = (&e.a * h0 + &e.b, &e.a * h1 + &e.b);
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            return &p <= xe && xe <= &q;
        }
        (m.a * hull + m.b).intersects(&xi)
    };
    let root = XMap {
        exact: Some(Map1 { a: BigRational::one(), b: BigRational::zero() }),
        a: Interval::ONE,
        b: Interval::ZERO,
    };
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), root)];
    let mut nodes = 0u64;
    while let Some((w, m)) = stack.pop() {
        if !holds(&m) {
            continue;
        }
        nodes += 1;
        if nodes > SLICE_NODE_CAP {
            return Err(Error::ResourceLimit { what: "projected words", requested: nodes as u128, cap: SLICE_NODE_CAP as u128 });
        }
        if w.len() == n {
            out.push(w);
            continue;
        }
        for (c, (ratio, t, _)) in cls.iter().enumerate().rev() {
            let mut v = w.clone();
            v.push(c as u8);
            stack.push((v, m.then(ratio, t)));
        }
    }
    Ok(out)
}

fn check_homothetic_ssc(ifs: &Ifs) -> Result<()> {
    if !ifs.is_homothetic() {
        return Err(Error::UnsupportedIfs("approximate slices need homotheties; the system has rotations or reflections".into()));
    }
    if !check_ssc(ifs, 6)?.holds() {
        return Err(Error::PreconditionFailed("approximate slices need the strong separation condition".into()));
    }
    Ok(())
}

/// The approximate vertical slices `Sⁿᵢ` at `x`: full words of length `n`
/// grouped by projected word, over the projected words whose interval
/// contains `x`.
pub fn approx_slices(ifs: &Ifs, n: usize, x: &Scalar) -> Result<ApproxSlices> {
    if n == 0 {
        return Err(Error::Domain("approx_slices needs n >= 1".into()));
    }
    check_homothetic_ssc(ifs)?;
    let cls = classes(ifs);
    let words = projected_words(ifs, &cls, n, x)?;
    let total: u128 = words
        .iter()
        .map(|w| w.iter().map(|&c| cls[c as usize].2.len() as u128).product::<u128>())
        .sum();
    if total > DEFAULT_BOX_CAP {
        return Err(Error::ResourceLimit { what: "slice boxes", requested: total, cap: DEFAULT_BOX_CAP });
    }
    let radius = bounding_ball(ifs);
    let slices = words
        .into_iter()
        .map(|pw| {
            let mut full = vec![CylinderWord::empty()];
            for &c in &pw {
                full = full.iter().flat_map(|w| cls[c as usize].2.iter().map(move |&i| w.child(i))).collect();
            }
            let boxes = full.into_iter().map(|w| CoverBox { rect: ifs.cylinder_rect(&w), word: w }).collect();
            ApproxSlice { projected: pw, cover: BoxCover { depth: n, boxes, bounding_radius: radius } }
        })
        .collect::<Vec<_>>();
    Ok(ApproxSlices { n, x: x.clone(), p: slices.len(), slices, classes: cls })
}

/// `p(n, x)` for `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PSequence {
    pub p: Vec<(usize, usize)>,
    /// The last three values agree.
    pub stabilized: bool,
}

pub fn approx_slice_sequence(ifs: &Ifs, x: &Scalar, n_max: usize) -> Result<PSequence> {
    check_homothetic_ssc(ifs)?;
    let cls = classes(ifs);
    let p = (1..=n_max)
        .map(|n| Ok((n, projected_words(ifs, &cls, n, x)?.len())))
        .collect::<Result<Vec<_>>>()?;
    let tail = &p[p.len().saturating_sub(3)..];
    let stabilized = tail.len() == 3 && tail.iter().all(|t| t.1 == tail[0].1);
    Ok(PSequence { p, stabilized })
}

/// `(γ·A + t) ∩ Q` with `Q = [−1, 1]²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Miniset {
    pub cover: BoxCover,
    pub gamma: f64,
    pub translate: [f64; 2],
    /// Boxes cut by the boundary of `Q`; a clipped box need not hold a
    /// point of the set.
    pub clipped: usize,
}

fn q_rect() -> Rect {
    Rect::from_bounds(-1.0, 1.0, -1.0, 1.0)
}

fn blow(center: [f64; 2], gamma: f64) -> IAffine {
    let g = Interval::point(gamma);
    let t = [-(g * Interval::point(center[0])), -(g * Interval::point(center[1]))];
    IAffine { m: [g, Interval::ZERO, Interval::ZERO, g], t }
}

fn clip(r: &Rect, q: &Rect) -> (Rect, bool) {
    let cut = |a: Interval, b: Interval| Interval::new(a.lo().max(b.lo()), a.hi().min(b.hi()));
    let c = Rect::new(cut(r.x, q.x), cut(r.y, q.y));
    // outward rounding alone does not count as a cut
    (c, !q.inflate(1e-12).contains_rect(r))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::Domain(format!("blowup scale must be >= 1, got {gamma}")));
    }
    Ok(())
}

/// Blows a cover up about `center` by `gamma` and clips it to `Q`.
pub fn blowup_miniset(cover: &BoxCover, center: [f64; 2], gamma: f64) -> Result<Miniset> {
    check_gamma(gamma)?;
    let g = blow(center, gamma);
    let q = q_rect();
    let mut clipped = 0;
    let mut boxes = Vec::new();
    for b in &cover.boxes {
        let r = g.apply_rect(&b.rect);
        if !r.intersects(&q) {
            continue;
        }
        let (r, cut) = clip(&r, &q);
        clipped += cut as usize;
        boxes.push(CoverBox { word: b.word.clone(), rect: r });
    }
    let bounding_radius = std::f64::consts::SQRT_2.next_up();
    Ok(Miniset {
        cover: BoxCover { depth: cover.depth, boxes, bounding_radius },
        gamma,
        translate: [-gamma * center[0], -gamma * center[1]],
        clipped,
    })
}

/// Miniset of an attractor, descending only into cylinders whose blown-up
/// box meets `Q` and stopping once the blown-up diameter is below
/// `resolution`.
pub fn miniset_of_ifs(ifs: &Ifs, center: [f64; 2], gamma: f64, resolution: f64) -> Result<Miniset> {
    check_gamma(gamma)?;
    if !(resolution > 0.0) {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let g = blow(center, gamma);
    let q = q_rect();
    let bbox = *ifs.bbox();
    let mut boxes = Vec::new();
    let mut clipped = 0;
    let mut depth = 0;
    let mut stack = vec![(CylinderWord::empty(), IAffine::identity())];
    let mut nodes = 0u64;
    while let Some((w, m)) = stack.pop() {
        let r = g.apply_rect(&m.apply_rect(&bbox));
        if !r.intersects(&q) {
            continue;
        }
        nodes += 1;
        if nodes > SLICE_NODE_CAP {
            return Err(Error::ResourceLimit { what: "miniset nodes", requested: nodes as u128, cap: SLICE_NODE_CAP as u128 });
        }
        if r.diam() <= resolution {
            depth = depth.max(w.len());
            let (r, cut) = clip(&r, &q);
            clipped += cut as usize;
            boxes.push(CoverBox { word: w, rect: r });
            continue;
        }
        for i in (0..ifs.len()).rev() {
            stack.push((w.child(i as u8), m.compose(ifs.imap(i))));
        }
    }
    Ok(Miniset {
        cover: BoxCover { depth, boxes, bounding_radius: std::f64::consts::SQRT_2.next_up() },
        gamma,
        translate: [-gamma * center[0], -gamma * center[1]],
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{attractor_cover, directed_distance, hausdorff_distance, presets, RectIndex};
    use crate::slice::line::{slice_cover, AffineLine};

    #[test]
    fn cxc_slice_at_zero() {
        let f = presets::cxc();
        let s = approx_slices(&f, 2, &Scalar::zero()).unwrap();
        assert_eq!(s.p, 1);
        assert_eq!(s.slices[0].projected, vec![0, 0]);
        assert_eq!(s.slices[0].cover.len(), 4);
        assert!(s.slices[0].cover.boxes.iter().all(|b| b.rect.x.lo() == 0.0 && b.rect.x.hi() <= 1.0 / 9.0 + 1e-15));

        let s5 = approx_slices(&f, 5, &Scalar::zero()).unwrap();
        assert_eq!(s5.p, 1);
        let exact = slice_cover(&f, &AffineLine::vertical(Scalar::zero()), 12).unwrap();
        let mut fine = exact.cover.clone();
        for b in &mut fine.boxes {
            b.rect.x = Interval::point(0.0);
        }
        let d = hausdorff_distance(&s5.union(), &fine).unwrap();
        // the enclosure carries the resolution of the reference cover
        assert!(d.hi() <= 3f64.powi(-5) * f.diameter() + fine.max_diam(), "{d}");
    }

    #[test]
    fn off_the_projection_is_empty() {
        let s = approx_slices(&presets::cxc(), 3, &Scalar::ratio(1, 2)).unwrap();
        assert_eq!(s.p, 0);
        assert!(s.slices.is_empty());
    }

    #[test]
    fn union_matches_slice_cover() {
        let f = presets::cxc();
        for x in [Scalar::zero(), Scalar::ratio(2, 9), Scalar::ratio(1, 4)] {
            let s = approx_slices(&f, 4, &x).unwrap();
            let l = slice_cover(&f, &AffineLine::vertical(x.clone()), 4).unwrap();
            let d = hausdorff_distance(&s.union(), &l.cover).unwrap();
            assert!(d.hi() <= 3f64.powi(-4) * f.diameter() + 1e-12, "{x}: {d}");
        }
    }

    #[test]
    fn p_sequence_and_rotations() {
        let seq = approx_slice_sequence(&presets::cxc(), &Scalar::ratio(1, 4), 6).unwrap();
        assert!(seq.stabilized && seq.p.iter().all(|p| p.1 == 1));
        assert!(matches!(approx_slices(&presets::half_turn(), 2, &Scalar::zero()), Err(Error::UnsupportedIfs(_))));
    }

    #[test]
    fn cantor_is_invariant_under_tripling() {
        let c = presets::cantor();
        let m = blowup_miniset(&attractor_cover(&c, 8).unwrap(), [0.0, 0.0], 3.0).unwrap();
        let want = attractor_cover(&c, 7).unwrap();
        assert_eq!(m.cover.len(), want.len());
        for (a, b) in m.cover.boxes.iter().zip(&want.boxes) {
            assert!((a.rect.x.lo() - b.rect.x.lo()).abs() < 1e-12 && (a.rect.x.hi() - b.rect.x.hi()).abs() < 1e-12);
        }
        let adaptive = miniset_of_ifs(&c, [0.0, 0.0], 3.0, 3f64.powi(-7) * 1.0001).unwrap();
        assert_eq!(adaptive.cover.len(), want.len());
    }

    #[test]
    fn unit_blowup_is_a_clip() {
        let f = presets::cxc();
        let cover = attractor_cover(&f, 3).unwrap();
        let m = blowup_miniset(&cover, [0.0, 0.0], 1.0).unwrap();
        assert_eq!(m.cover.len(), cover.len());
        assert_eq!(m.clipped, 0);
        assert!(blowup_miniset(&cover, [0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn squashed_blowup_stays_near_f() {
        // g = diag(1/3, 1/9); 3⁴·gⁿ(F) = diag(1, 3⁻⁴)·F
        let f = presets::cxc();
        let cover = attractor_cover(&f, 7).unwrap();
        let third = Interval::point(1.0 / 3.0);
        let ninth = Interval::point(1.0 / 9.0);
        let g4 = IAffine { m: [third.powi(4), Interval::ZERO, Interval::ZERO, ninth.powi(4)], t: [Interval::ZERO; 2] };
        let m = blowup_miniset(&cover.map(&g4), [0.0, 0.0], 81.0).unwrap();
        assert!(!m.cover.is_empty());
        let d = directed_distance(&m.cover, &RectIndex::new(cover.rects()));
        assert!(d.hi() <= 3f64.powi(-4) + cover.max_diam(), "{d}");
    }
}
