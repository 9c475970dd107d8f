use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dyadic::{cell_index, Cell, DyadicMeasure, Straddle, EDGE_TOL};
use crate::error::{Error, Result};
use crate::ifs::{similarity_dimension, IAffine, Ifs, Rect};

/// Node cap for one discretisation.
pub const DISCRETIZE_NODE_CAP: u64 = 200_000_000;

#[derive(Deserialize)]
struct SpecDef {
    ifs: Ifs,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

/// The self-similar measure `μ = Σ p_i·φ_i μ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SpecDef")]
pub struct SelfSimilarMeasure {
    pub ifs: Ifs,
    pub weights: Vec<f64>,
}

impl TryFrom<SpecDef> for SelfSimilarMeasure {
    type Error = Error;
    fn try_from(d: SpecDef) -> Result<Self> {
        match d.weights {
            Some(w) => SelfSimilarMeasure::new(d.ifs, w),
            None => Ok(SelfSimilarMeasure::natural(d.ifs)),
        }
    }
}

impl SelfSimilarMeasure {
    /// Weights must be positive and sum to 1 (within 1e-9; renormalised).
    pub fn new(ifs: Ifs, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != ifs.len() {
            return Err(Error::Domain(format!("{} weights for {} maps", weights.len(), ifs.len())));
        }
        if weights.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Domain("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        let weights = weights.iter().map(|p| p / total).collect();
        Ok(SelfSimilarMeasure { ifs, weights })
    }

    /// Weights `α_i^s` with `s` the similarity dimension.
    pub fn natural(ifs: Ifs) -> Self {
        let s = similarity_dimension(&ifs);
        let raw: Vec<f64> = ifs.maps().iter().map(|m| m.scale.to_f64().powf(s)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|p| p / total).collect();
        SelfSimilarMeasure { ifs, weights }
    }

    pub fn uniform(ifs: Ifs) -> Self {
        let n = ifs.len();
        SelfSimilarMeasure { ifs, weights: vec![1.0 / n as f64; n] }
    }

    /// Every map sends the x-axis into itself, so the measure lives on it.
    pub fn on_x_axis(&self) -> bool {
        self.ifs.maps().iter().all(|m| m.linear().c.is_zero_certain() && m.translation.y.is_zero_certain())
    }

    pub fn ambient_dim(&self) -> u8 {
        if self.on_x_axis() {
            1
        } else {
            2
        }
    }
}

/// Level-`n` discretisation: cylinders are refined until their box sits in
/// one dyadic cell, or until their diameter drops below `2^{−n−2}`, at which
/// point the mass goes to the cell of the cylinder's anchor `φ_I(fix φ_0)`
/// and is recorded as straddling.
pub fn discretize(spec: &SelfSimilarMeasure, depth: usize) -> Result<DyadicMeasure> {
    discretize_with_cap(spec, depth, DISCRETIZE_NODE_CAP)
}

pub fn discretize_with_cap(spec: &SelfSimilarMeasure, depth: usize, cap: u64) -> Result<DyadicMeasure> {
    let w = &spec.weights;
    descend(&spec.ifs, spec.ambient_dim(), depth, cap, &[(IAffine::identity(), 1.0)], &|_, i| w[i])
}

/// Adaptive descent from weighted roots. `weight(level, i)` is the factor for
/// letter `i` at word position `level` (0 skips the branch).
pub(crate) fn descend(
    ifs: &Ifs,
    dim: u8,
    depth: usize,
    cap: u64,
    roots: &[(IAffine, f64)],
    weight: &dyn Fn(usize, usize) -> f64,
) -> Result<DyadicMeasure> {
    if depth > 40 {
        return Err(Error::Domain(format!("discretisation depth {depth} exceeds 40")));
    }
    let side = (1u64 << depth) as f64;
    let guard = 1.0 / (side * 4.0);
    let anchor = ifs.fixed_point(0).to_intervals();
    let bbox = *ifs.bbox();
    let span = |lo: f64, hi: f64| {
        let a = (lo * side + EDGE_TOL).floor() as i64;
        let b = ((hi * side - EDGE_TOL).ceil() as i64 - 1).max(a);
        (a, b)
    };
    let mut cells: HashMap<Cell, f64> = HashMap::new();
    let mut straddles = Vec::new();
    let mut stack: Vec<(IAffine, f64, usize)> = roots.iter().map(|(m, p)| (*m, *p, 0)).collect();
    let mut nodes = 0u64;
    while let Some((m, p, level)) = stack.pop() {
        nodes += 1;
        if nodes > cap {
            return Err(Error::ResourceLimit { what: "discretisation nodes", requested: nodes as u128, cap: cap as u128 });
        }
        let r: Rect = m.apply_rect(&bbox);
        let (x0, x1) = span(r.x.lo(), r.x.hi());
        let (y0, y1) = if dim == 1 { (0, 0) } else { span(r.y.lo(), r.y.hi()) };
        if x0 == x1 && y0 == y1 {
            *cells.entry([x0, y0]).or_insert(0.0) += p;
            continue;
        }
        if r.diam() < guard {
            let a = m.apply(&anchor);
            let at = [cell_index(a[0].mid(), depth), if dim == 1 { 0 } else { cell_index(a[1].mid(), depth) }];
            *cells.entry(at).or_insert(0.0) += p;
            straddles.push(Straddle { at, lo: [x0, y0], hi: [x1, y1], mass: p });
            continue;
        }
        for i in 0..ifs.len() {
            let q = weight(level, i);
            if q > 0.0 {
                stack.push((m.compose(ifs.imap(i)), p * q, level + 1));
            }
        }
    }
    let total: f64 = super::dyadic::pairwise_sum(&cells.values().copied().collect::<Vec<_>>());
    if total <= 0.0 {
        return Err(Error::EmptySet);
    }
    // roots and conditional weights may leave a tiny normalisation drift
    let cells: BTreeMap<Cell, f64> = cells.into_iter().map(|(c, p)| (c, p / total)).collect();
    for s in &mut straddles {
        s.mass /= total;
    }
    DyadicMeasure::with_straddles(dim, depth, cells, straddles)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EntropyRow {
    pub level: usize,
    /// `H(θ, D_k)` in bits.
    pub shannon: f64,
    /// `H(θ, D_k)/k`.
    pub normalized: f64,
    pub band: (f64, f64),
}

/// Least-squares slope of `H(θ, D_k)` against `k`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EntropyDimension {
    pub estimate: f64,
    pub intercept: f64,
    /// Largest deviation of a row from the fitted line.
    pub max_residual: f64,
    pub rows: Vec<EntropyRow>,
    pub log_base: u32,
}

impl EntropyDimension {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,H,H_normalized,H_low,H_high\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.12},{:.12},{:.12},{:.12}", r.level, r.shannon, r.normalized, r.band.0, r.band.1);
        }
        s
    }
}

pub fn entropy_dimension(spec: &SelfSimilarMeasure, n_min: usize, n_max: usize) -> Result<EntropyDimension> {
    if n_min >= n_max {
        return Err(Error::Domain(format!("need n_min < n_max, got {n_min} and {n_max}")));
    }
    entropy_dimension_of(&discretize(spec, n_max)?, n_min, n_max)
}

/// Entropy-dimension fit for an already discretised measure.
pub fn entropy_dimension_of(m: &DyadicMeasure, n_min: usize, n_max: usize) -> Result<EntropyDimension> {
    if n_min >= n_max || n_min == 0 {
        return Err(Error::Domain(format!("need 1 ≤ n_min < n_max, got {n_min} and {n_max}")));
    }
    if n_max > m.depth {
        return Err(Error::Domain(format!("level {n_max} exceeds measure depth {}", m.depth)));
    }
    let mut rows = Vec::new();
    for k in n_min..=n_max {
        let coarse = m.coarsen(k)?;
        let shannon = coarse.shannon(k)?;
        rows.push(EntropyRow { level: k, shannon, normalized: shannon / k as f64, band: coarse.shannon_band(k)? });
    }
    let (slope, intercept) = fit_line(&rows.iter().map(|r| (r.level as f64, r.shannon)).collect::<Vec<_>>());
    let max_residual =
        rows.iter().map(|r| (r.shannon - slope * r.level as f64 - intercept).abs()).fold(0.0, f64::max);
    Ok(EntropyDimension { estimate: slope, intercept, max_residual, rows, log_base: 2 })
}

/// Ordinary least squares `y ≈ a·x + b`.
pub fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn cantor() -> SelfSimilarMeasure {
        SelfSimilarMeasure::natural(presets::cantor())
    }

    #[test]
    fn natural_weights() {
        let m = cantor();
        assert!(m.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));
        assert_eq!(m.ambient_dim(), 1);
        assert_eq!(SelfSimilarMeasure::natural(presets::cxc()).ambient_dim(), 2);
        assert!(SelfSimilarMeasure::new(presets::cantor(), vec![0.5, 0.4]).is_err());
        assert!(SelfSimilarMeasure::new(presets::cantor(), vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn uniform_segment_is_uniform() {
        let m = discretize(&SelfSimilarMeasure::uniform(presets::segment()), 5).unwrap();
        assert_eq!(m.support_size(), 32);
        for p in m.cells().values() {
            assert!((p - 1.0 / 32.0).abs() < 1e-12);
        }
        assert!((m.entropy(5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_is_one_cell() {
        for n in [0, 3, 12] {
            let m = discretize(&SelfSimilarMeasure::uniform(presets::point()), n).unwrap();
            assert_eq!(m.support_size(), 1);
            assert_eq!(m.entropy(n.max(1)).unwrap_or(0.0), 0.0);
        }
    }

    // exact incidence of depth-12 cylinder anchors with level-4 cells
    #[test]
    fn cantor_level_four_matches_cylinder_incidence() {
        let m = discretize(&cantor(), 4).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let third = BigRational::new(1.into(), 3.into());
        let mut lefts = vec![BigRational::zero()];
        let mut width = BigRational::one();
        for _ in 0..12 {
            width = &width * &third;
            let two_w = &width * BigRational::from_integer(2.into());
            lefts = lefts.iter().flat_map(|l| [l.clone(), l + &two_w]).collect();
        }
        let mut oracle: BTreeMap<i64, f64> = BTreeMap::new();
        for l in &lefts {
            let c = (l * BigRational::from_integer(16.into())).floor().to_integer().to_i64().unwrap();
            *oracle.entry(c).or_insert(0.0) += 1.0 / 4096.0;
        }
        let amb = m.ambiguous_mass();
        for (c, p) in m.cells() {
            let q = oracle.get(&c[0]).copied().unwrap_or(0.0);
            assert!(q > 0.0, "cell {c:?} not met by the set");
            assert!((p - q).abs() <= amb + 1e-12, "cell {c:?}: {p} vs {q}");
        }
        let total_diff: f64 = oracle.iter().map(|(c, q)| (m.mass(&[*c, 0]) - q).abs()).sum();
        assert!(total_diff <= 2.0 * amb + 1e-12);
    }

    // oracle: left endpoints of all 2^24 cylinders binned exactly into
    // level-k cells gives H(D_8) = 5.864035, H(D_20) = 13.453512
    #[test]
    fn cantor_entropy_against_fine_cylinder_oracle() {
        let m = discretize(&cantor(), 20).unwrap();
        assert!((m.shannon(8).unwrap() - 5.864035).abs() < 0.01);
        let h = m.entropy(20).unwrap();
        assert!((h - 13.453512 / 20.0).abs() < 0.005, "{h}");
        // H_k tends to log 2/log 3 only like c/k, c ≈ 0.8 bits
        assert!(h > 0.65);
    }

    #[test]
    fn cap_is_enforced() {
        let e = discretize_with_cap(&SelfSimilarMeasure::natural(presets::cxc()), 12, 1000).unwrap_err();
        assert!(matches!(e, Error::ResourceLimit { .. }));
    }

    #[test]
    fn line_fit() {
        let (a, b) = fit_line(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]);
        assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }
}
