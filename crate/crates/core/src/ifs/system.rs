use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::affine::{AffineMap2, IAffine, Rect};
use super::similarity::Similarity2;
use super::word::CylinderWord;
use crate::error::{Error, Result};
use crate::numerics::{Interval, Matrix2, Scalar, Vector2};

#[derive(Deserialize)]
struct IfsDef {
    #[serde(default)]
    label: String,
    maps: Vec<Similarity2>,
}

/// An iterated function system of planar similarities.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "IfsDef")]
pub struct Ifs {
    pub label: String,
    maps: Vec<Similarity2>,
    #[serde(skip)]
    affine: Vec<AffineMap2>,
    #[serde(skip)]
    imaps: Vec<IAffine>,
    #[serde(skip)]
    scales: Vec<Interval>,
    #[serde(skip)]
    fixed: Vec<Vector2>,
    #[serde(skip)]
    bbox: Rect,
    #[serde(skip)]
    exact_bbox: Option<[BigRational; 4]>,
    #[serde(skip)]
    radius: OnceLock<f64>,
}

impl TryFrom<IfsDef> for Ifs {
    type Error = Error;
    fn try_from(d: IfsDef) -> Result<Self> {
        Ifs::new(d.label, d.maps)
    }
}

impl PartialEq for Ifs {
    fn eq(&self, other: &Self) -> bool {
        self.maps == other.maps
    }
}

impl Ifs {
    pub fn new(label: impl Into<String>, maps: Vec<Similarity2>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidIfs(format!("need at least 2 maps, got {}", maps.len())));
        }
        if maps.len() > u8::MAX as usize {
            return Err(Error::InvalidIfs(format!("at most 255 maps supported, got {}", maps.len())));
        }
        for m in &maps {
            m.validate()?;
        }
        let affine: Vec<AffineMap2> = maps.iter().map(|m| AffineMap2::new(m.linear(), m.translation.clone())).collect();
        let imaps = affine.iter().map(AffineMap2::to_interval).collect();
        let scales = maps.iter().map(|m| m.scale.to_interval()).collect();
        let fixed = affine
            .iter()
            .map(|a| {
                let i_minus_a = &Matrix2::identity() + &a.linear.scale(&Scalar::int(-1));
                i_minus_a.inverse().map(|inv| inv.apply(&a.translation))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ifs = Ifs {
            label: label.into(),
            maps,
            affine,
            imaps,
            scales,
            fixed,
            bbox: Rect::point([0.0, 0.0]),
            exact_bbox: None,
            radius: OnceLock::new(),
        };
        ifs.exact_bbox = ifs.support_policy_iteration();
        ifs.bbox = match &ifs.exact_bbox {
            Some([x0, x1, y0, y1]) => Rect::new(
                Interval::from_rational(x0).hull(&Interval::from_rational(x1)),
                Interval::from_rational(y0).hull(&Interval::from_rational(y1)),
            ),
            None => ifs.numeric_bbox(),
        };
        Ok(ifs)
    }

    pub fn maps(&self) -> &[Similarity2] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn affine(&self, i: usize) -> &AffineMap2 {
        &self.affine[i]
    }

    pub fn affine_maps(&self) -> &[AffineMap2] {
        &self.affine
    }

    pub fn imap(&self, i: usize) -> &IAffine {
        &self.imaps[i]
    }

    pub fn scale(&self, i: usize) -> &Scalar {
        &self.maps[i].scale
    }

    pub fn scale_interval(&self, i: usize) -> Interval {
        self.scales[i]
    }

    /// Upper bound on the largest contraction ratio.
    pub fn alpha_max(&self) -> f64 {
        self.scales.iter().map(|s| s.hi()).fold(0.0, f64::max)
    }

    /// Lower bound on the smallest contraction ratio.
    pub fn alpha_min(&self) -> f64 {
        self.scales.iter().map(|s| s.lo()).fold(1.0, f64::min)
    }

    /// The smallest ratio as a scalar (exact when the IFS is).
    pub fn alpha_min_scalar(&self) -> Scalar {
        let mut best = self.maps[0].scale.clone();
        for m in &self.maps[1..] {
            if m.scale.to_interval().mid() < best.to_interval().mid() {
                best = m.scale.clone();
            }
        }
        best
    }

    pub fn is_exact(&self) -> bool {
        self.affine.iter().all(AffineMap2::is_exact)
    }

    /// All orthogonal parts are the identity.
    pub fn is_homothetic(&self) -> bool {
        self.maps.iter().all(|m| m.orthogonal.is_identity())
    }

    /// The common ratio when all maps share one (compared exactly when possible).
    pub fn uniform_scale(&self) -> Option<Scalar> {
        let s0 = &self.maps[0].scale;
        self.maps[1..].iter().all(|m| m.scale.eq_certain(s0) == Some(true)).then(|| s0.clone())
    }

    pub fn fixed_point(&self, i: usize) -> &Vector2 {
        &self.fixed[i]
    }

    pub fn fixed_points(&self) -> &[Vector2] {
        &self.fixed
    }

    /// Outer bounding box of the attractor (exact for axis-preserving exact systems).
    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    /// Exact `[x_min, x_max, y_min, y_max]` of the attractor when known.
    pub fn exact_bbox(&self) -> Option<&[BigRational; 4]> {
        self.exact_bbox.as_ref()
    }

    /// Upper bound on the attractor diameter.
    pub fn diameter(&self) -> f64 {
        self.bbox.diam()
    }

    pub fn compose_word(&self, w: &[u8]) -> AffineMap2 {
        w.iter().fold(AffineMap2::identity(), |acc, &i| acc.compose(&self.affine[i as usize]))
    }

    pub fn word_imap(&self, w: &[u8]) -> IAffine {
        w.iter().fold(IAffine::identity(), |acc, &i| acc.compose(&self.imaps[i as usize]))
    }

    pub fn word_scale(&self, w: &[u8]) -> Scalar {
        w.iter().fold(Scalar::one(), |acc, &i| acc * &self.maps[i as usize].scale)
    }

    pub fn word_scale_interval(&self, w: &[u8]) -> Interval {
        w.iter().fold(Interval::ONE, |acc, &i| acc * self.scales[i as usize])
    }

    /// Memoised [`bounding_ball`](super::cover::bounding_ball).
    pub(crate) fn cached_radius(&self, compute: impl FnOnce() -> f64) -> f64 {
        *self.radius.get_or_init(compute)
    }

    /// Box of the cylinder `φ_I(F)`.
    pub fn cylinder_rect(&self, w: &CylinderWord) -> Rect {
        self.word_imap(w.as_slice()).apply_rect(&self.bbox)
    }

    pub fn check_word(&self, w: &CylinderWord) -> Result<()> {
        match w.as_slice().iter().find(|&&i| i as usize >= self.len()) {
            Some(i) => Err(Error::Domain(format!("letter {i} out of range for {} maps", self.len()))),
            None => Ok(()),
        }
    }

    /// Support function `h(u) = max_{z∈F} u·z` in the four axis directions,
    /// solved exactly by policy iteration on `h(u) = max_i u·t_i + α_i h(O_iᵀu)`.
    fn support_policy_iteration(&self) -> Option<[BigRational; 4]> {
        if !self.is_exact() || !self.maps.iter().all(|m| m.orthogonal.is_axis_preserving()) {
            return None;
        }
        // directions +x, −x, +y, −y
        let dirs: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];
        let dir_index = |v: [i64; 2]| dirs.iter().position(|d| *d == v).expect("axis direction");
        let l = self.len();
        let mut cost = vec![[BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero()]; l];
        let mut next = vec![[0usize; 4]; l];
        let mut alpha = Vec::with_capacity(l);
        for (i, m) in self.maps.iter().enumerate() {
            let o = m.orthogonal.matrix();
            let oi: Vec<i64> = o.entries().iter().map(|e| e.exact().and_then(|r| r.to_integer().to_i64()).unwrap_or(0)).collect();
            let t = [m.translation.x.exact()?.clone(), m.translation.y.exact()?.clone()];
            for (k, u) in dirs.iter().enumerate() {
                cost[i][k] = &t[0] * BigRational::from_integer(u[0].into()) + &t[1] * BigRational::from_integer(u[1].into());
                // Oᵀu
                let w = [oi[0] * u[0] + oi[2] * u[1], oi[1] * u[0] + oi[3] * u[1]];
                next[i][k] = dir_index(w);
            }
            alpha.push(m.scale.exact()?.clone());
        }
        let mut policy = [0usize; 4];
        for _ in 0..64 {
            let h = solve_policy(&policy, &cost, &next, &alpha)?;
            let mut changed = false;
            for k in 0..4 {
                let value = |i: usize| &cost[i][k] + &alpha[i] * &h[next[i][k]];
                let mut best = policy[k];
                let mut best_v = value(best);
                for i in 0..l {
                    let v = value(i);
                    if v > best_v {
                        best = i;
                        best_v = v;
                    }
                }
                if best != policy[k] {
                    policy[k] = best;
                    changed = true;
                }
            }
            if !changed {
                return Some([-h[1].clone(), h[0].clone(), -h[3].clone(), h[2].clone()]);
            }
        }
        None
    }

    fn numeric_bbox(&self) -> Rect {
        let r = self.crude_radius();
        let square = Rect::new(Interval::new(-r, r), Interval::new(-r, r));
        let k = self.tighten_depth();
        let mut out: Option<Rect> = None;
        for w in CylinderWord::all_of_length(self.len(), k) {
            let b = self.word_imap(w.as_slice()).apply_rect(&square);
            out = Some(out.map_or(b, |o| o.hull(&b)));
        }
        out.unwrap_or(square)
    }

    /// `max_i ‖t_i‖ / (1 − α_max)`, rounded up.
    pub(crate) fn crude_radius(&self) -> f64 {
        let tmax = self
            .maps
            .iter()
            .map(|m| {
                let [x, y] = m.translation.to_intervals();
                (x.sqr() + y.sqr()).sqrt().hi()
            })
            .fold(0.0, f64::max);
        let denom = Interval::ONE - Interval::point(self.alpha_max());
        (Interval::point(tmax) / denom).hi()
    }

    /// Word depth used for tightening: at most 8, with at most ~10⁵ words.
    pub(crate) fn tighten_depth(&self) -> usize {
        let mut k = 0;
        let mut count = 1usize;
        while k < 8 && count * self.len() <= 100_000 {
            count *= self.len();
            k += 1;
        }
        k
    }
}

fn solve_policy(
    policy: &[usize; 4],
    cost: &[[BigRational; 4]],
    next: &[[usize; 4]],
    alpha: &[BigRational],
) -> Option<Vec<BigRational>> {
    // (I − P) h = c with P[k][next] = α
    let mut a = vec![vec![BigRational::zero(); 5]; 4];
    for k in 0..4 {
        let i = policy[k];
        a[k][k] += BigRational::one();
        a[k][next[i][k]] -= alpha[i].clone();
        a[k][4] = cost[i][k].clone();
    }
    for col in 0..4 {
        let piv = (col..4).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for c in col..5 {
            a[col][c] = &a[col][c] / &p;
        }
        for r in 0..4 {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..5 {
                    let v = &f * &a[col][c];
                    a[r][c] -= v;
                }
            }
        }
    }
    let h: Vec<BigRational> = a.into_iter().map(|row| row[4].clone()).collect();
    Some(h)
}
