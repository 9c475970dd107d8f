use serde::{Deserialize, Serialize};

use super::fit_slope;
use crate::error::{Error, Result};
use crate::ifs::{bounding_ball, BoxCover, CoverBox, CylinderWord, IAffine, Ifs, Rect};
use crate::numerics::{Interval, Scalar};

/// Node cap for one slice descent.
pub const SLICE_NODE_CAP: u64 = 50_000_000;

/// The line `V·ℝ + t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineLine {
    pub direction: [Scalar; 2],
    pub offset: [Scalar; 2],
}

impl AffineLine {
    /// Normalises the direction only when the input is not already unit
    /// (exactly, if exact); a zero direction is rejected.
    pub fn new(direction: [Scalar; 2], offset: [Scalar; 2]) -> Result<Self> {
        let n2 = &(&direction[0] * &direction[0]) + &(&direction[1] * &direction[1]);
        if !n2.to_interval().is_strictly_positive() {
            return Err(Error::Domain("line direction must be nonzero".into()));
        }
        let direction = if n2.exact_eq(&Scalar::one()) {
            direction
        } else {
            let n = n2.sqrt();
            [direction[0].checked_div(&n)?, direction[1].checked_div(&n)?]
        };
        Ok(AffineLine { direction, offset })
    }

    /// `{x = c}`.
    pub fn vertical(c: Scalar) -> Self {
        AffineLine { direction: [Scalar::zero(), Scalar::one()], offset: [c, Scalar::zero()] }
    }

    /// `{y = c}`.
    pub fn horizontal(c: Scalar) -> Self {
        AffineLine { direction: [Scalar::one(), Scalar::zero()], offset: [Scalar::zero(), c] }
    }

    /// Enclosure of the signed offset `⟨n, p − t⟩` over a box, `n` the normal.
    fn signed(&self, r: &Rect) -> Interval {
        let nx = -self.direction[1].to_interval();
        let ny = self.direction[0].to_interval();
        nx * (r.x - self.offset[0].to_interval()) + ny * (r.y - self.offset[1].to_interval())
    }

    pub fn meets(&self, r: &Rect) -> bool {
        self.signed(r).contains_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCover {
    /// Generation-`depth` cylinder boxes meeting the line. Each box meets
    /// `L` and the attractor, but need not hold a point of `F ∩ L`.
    pub cover: BoxCover,
    /// `(generation, boxes meeting L)` for `1..=depth`.
    pub counts: Vec<(usize, u64)>,
    /// Slope of `log N_g` against `g·log(1/α_max)` over the upper half of
    /// the generations; `None` if some count there is zero.
    pub exponent: Option<f64>,
    /// Largest single-generation ratio `log N_g / (g·log(1/α_max))` over the
    /// same range.
    pub exponent_upper: Option<f64>,
}

/// Cylinders of `F` meeting `L`, generation by generation.
pub fn slice_cover(ifs: &Ifs, line: &AffineLine, depth: usize) -> Result<SliceCover> {
    if depth == 0 {
        return Err(Error::Domain("slice_cover needs depth >= 1".into()));
    }
    let bbox = *ifs.bbox();
    let mut counts = vec![0u64; depth + 1];
    let mut boxes = Vec::new();
    let mut stack = vec![(CylinderWord::empty(), IAffine::identity())];
    let mut nodes = 0u64;
    while let Some((w, m)) = stack.pop() {
        let r = m.apply_rect(&bbox);
        if !line.meets(&r) {
            continue;
        }
        nodes += 1;
        if nodes > SLICE_NODE_CAP {
            return Err(Error::ResourceLimit { what: "slice nodes", requested: nodes as u128, cap: SLICE_NODE_CAP as u128 });
        }
        counts[w.len()] += 1;
        if w.len() == depth {
            boxes.push(CoverBox { word: w, rect: r });
            continue;
        }
        for i in (0..ifs.len()).rev() {
            stack.push((w.child(i as u8), m.compose(ifs.imap(i))));
        }
    }
    boxes.sort_by(|a, b| a.word.cmp(&b.word));
    let counts: Vec<(usize, u64)> = (1..=depth).map(|g| (g, counts[g])).collect();
    let scale = (1.0 / ifs.alpha_max()).ln();
    let tail: Vec<(usize, u64)> = counts[(depth - 1) / 2..].to_vec();
    let (exponent, exponent_upper) = if tail.iter().all(|c| c.1 > 0) {
        let pts: Vec<(f64, f64)> = tail.iter().map(|&(g, n)| (g as f64 * scale, (n as f64).ln())).collect();
        let upper = pts.iter().map(|p| p.1 / p.0).fold(f64::NEG_INFINITY, f64::max);
        (Some(if pts.len() >= 2 { fit_slope(&pts) } else { upper }), Some(upper))
    } else {
        (None, None)
    };
    let cover = BoxCover { depth, boxes, bounding_radius: bounding_ball(ifs) };
    Ok(SliceCover { cover, counts, exponent, exponent_upper })
}

/// `s_n = log(2ⁿ − 1)/(n·log 2)`, the root of `(2ⁿ − 1)·2^{−n·s} = 1`.
pub fn sn_number(n: u32) -> Result<f64> {
    if n == 0 || n > 1000 {
        return Err(Error::Domain(format!("sn_number needs 1 <= n <= 1000, got {n}")));
    }
    // log2(2ⁿ − 1) = n + log2(1 − 2⁻ⁿ)
    let l = n as f64 + (-(0.5f64.powi(n as i32))).ln_1p() / std::f64::consts::LN_2;
    Ok(l / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    const LOG2_3: f64 = 0.630_929_753_571_457_4;

    #[test]
    fn vertical_slice_of_cxc() {
        let s = slice_cover(&presets::cxc(), &AffineLine::vertical(Scalar::zero()), 8).unwrap();
        for &(g, n) in &s.counts {
            assert_eq!(n, 1 << g);
        }
        assert!((s.exponent.unwrap() - LOG2_3).abs() < 1e-12);
        assert_eq!(s.cover.len(), 256);
        let empty = slice_cover(&presets::cxc(), &AffineLine::vertical(Scalar::ratio(1, 2)), 4).unwrap();
        assert!(empty.counts.iter().all(|c| c.1 == 0) && empty.exponent.is_none());
    }

    #[test]
    fn lines_through_the_square() {
        let sq = presets::unit_square();
        let lines = [
            AffineLine::horizontal(Scalar::ratio(1, 3)),
            AffineLine::new([Scalar::int(1), Scalar::int(2)], [Scalar::ratio(1, 5), Scalar::zero()]).unwrap(),
        ];
        for l in &lines {
            let e = slice_cover(&sq, l, 10).unwrap().exponent.unwrap();
            assert!((e - 1.0).abs() < 0.05, "{e}");
        }
    }

    #[test]
    fn sn_values() {
        assert_eq!(sn_number(1).unwrap(), 0.0);
        assert!((sn_number(2).unwrap() - 3f64.ln() / 4f64.ln()).abs() < 1e-15);
        assert!((sn_number(10).unwrap() - 1023f64.ln() / (10.0 * 2f64.ln())).abs() < 1e-15);
        assert!(sn_number(0).is_err());
    }
}
