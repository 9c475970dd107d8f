use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cell edges closer than this (in units of the cell side) count as touching
/// rather than crossing; absorbs the rounding of interval corner arithmetic.
pub(crate) const EDGE_TOL: f64 = 1e-9;

pub type Cell = [i64; 2];

/// Mass assigned to one cell although its cylinder straddled a cell boundary
/// at the guard depth. `at` is the cell that received it (the anchor's);
/// `lo` and `hi` are the cells of the two extreme corners.
#[derive(Clone, Debug, PartialEq)]
pub struct Straddle {
    pub at: Cell,
    pub lo: Cell,
    pub hi: Cell,
    pub mass: f64,
}

/// A probability measure discretised on the level-`depth` dyadic cells
/// `[i/2ⁿ, (i+1)/2ⁿ) × [j/2ⁿ, (j+1)/2ⁿ)`. One-dimensional measures use
/// `j = 0` throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicMeasure {
    pub dim: u8,
    pub depth: usize,
    cells: BTreeMap<Cell, f64>,
    straddles: Vec<Straddle>,
}

/// Sum in a fixed binary tree, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub(crate) fn shift_down(c: Cell, by: usize) -> Cell {
    [c[0] >> by, c[1] >> by]
}

/// Index of the level-`n` cell holding `x` (half-open cells).
pub fn cell_index(x: f64, n: usize) -> i64 {
    (x * (1u64 << n) as f64).floor() as i64
}

impl DyadicMeasure {
    pub fn new(dim: u8, depth: usize, cells: BTreeMap<Cell, f64>) -> Result<Self> {
        Self::with_straddles(dim, depth, cells, Vec::new())
    }

    pub(crate) fn with_straddles(
        dim: u8,
        depth: usize,
        cells: BTreeMap<Cell, f64>,
        straddles: Vec<Straddle>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Domain(format!("ambient dimension must be 1 or 2, got {dim}")));
        }
        if depth > 60 {
            return Err(Error::Domain(format!("depth {depth} exceeds 60")));
        }
        if cells.values().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("cell masses must be finite and nonnegative".into()));
        }
        if dim == 1 && cells.keys().any(|c| c[1] != 0) {
            return Err(Error::Domain("one-dimensional measure with a nonzero y index".into()));
        }
        let mut cells = cells;
        cells.retain(|_, p| *p > 0.0);
        let m = DyadicMeasure { dim, depth, cells, straddles };
        let total = m.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("masses sum to {total}, not 1")));
        }
        Ok(m)
    }

    /// Unit mass in the cell holding `p`.
    pub fn dirac(dim: u8, depth: usize, p: [f64; 2]) -> Result<Self> {
        let c = [cell_index(p[0], depth), if dim == 1 { 0 } else { cell_index(p[1], depth) }];
        Self::new(dim, depth, BTreeMap::from([(c, 1.0)]))
    }

    /// Lebesgue measure on `[0,1]^dim`.
    pub fn lebesgue(dim: u8, depth: usize) -> Result<Self> {
        let n = 1i64 << depth;
        let mut cells = BTreeMap::new();
        if dim == 1 {
            for i in 0..n {
                cells.insert([i, 0], 1.0 / n as f64);
            }
        } else {
            let p = 1.0 / (n as f64 * n as f64);
            for i in 0..n {
                for j in 0..n {
                    cells.insert([i, j], p);
                }
            }
        }
        Self::new(dim, depth, cells)
    }

    pub fn cells(&self) -> &BTreeMap<Cell, f64> {
        &self.cells
    }

    pub fn straddles(&self) -> &[Straddle] {
        &self.straddles
    }

    /// Mass whose cell was decided by anchor rather than by containment.
    pub fn ambiguous_mass(&self) -> f64 {
        pairwise_sum(&self.straddles.iter().map(|s| s.mass).collect::<Vec<_>>())
    }

    pub fn support_size(&self) -> usize {
        self.cells.len()
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.cells.values().copied().collect::<Vec<_>>())
    }

    pub fn mass(&self, c: &Cell) -> f64 {
        self.cells.get(c).copied().unwrap_or(0.0)
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k > self.depth {
            return Err(Error::Domain(format!("level {k} exceeds measure depth {}", self.depth)));
        }
        Ok(())
    }

    /// Sums child masses into the level-`k` cells.
    pub fn coarsen(&self, k: usize) -> Result<DyadicMeasure> {
        self.check_level(k)?;
        let by = self.depth - k;
        let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
        for (c, p) in &self.cells {
            *out.entry(shift_down(*c, by)).or_insert(0.0) += p;
        }
        let straddles = self
            .straddles
            .iter()
            .map(|s| Straddle {
                at: shift_down(s.at, by),
                lo: shift_down(s.lo, by),
                hi: shift_down(s.hi, by),
                mass: s.mass,
            })
            .filter(|s| s.lo != s.hi)
            .collect();
        Ok(DyadicMeasure { dim: self.dim, depth: k, cells: out, straddles })
    }

    fn masses_at(&self, k: usize) -> Result<Vec<f64>> {
        self.check_level(k)?;
        if k == self.depth {
            return Ok(self.cells.values().copied().collect());
        }
        Ok(self.coarsen(k)?.cells.into_values().collect())
    }

    /// `H(θ, D_k) = −Σ θ(E) log₂ θ(E)` over level-`k` cells.
    pub fn shannon(&self, k: usize) -> Result<f64> {
        Ok(shannon_of(&self.masses_at(k)?))
    }

    /// Normalised entropy `(1/k)·H(θ, D_k)`, in bits.
    pub fn entropy(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("normalised entropy needs level k ≥ 1".into()));
        }
        Ok(self.shannon(k)? / k as f64)
    }

    /// Range of `H(θ, D_k)` over three assignments of the straddling mass:
    /// as stored, all to the low-corner cells, all to the high-corner cells.
    pub fn shannon_band(&self, k: usize) -> Result<(f64, f64)> {
        let coarse = self.coarsen(k)?;
        let mid = shannon_of(&coarse.cells.values().copied().collect::<Vec<_>>());
        if coarse.straddles.is_empty() {
            return Ok((mid, mid));
        }
        let shifted = |hi: bool| {
            let mut cells = coarse.cells.clone();
            for s in &coarse.straddles {
                let to = if hi { s.hi } else { s.lo };
                if let Some(p) = cells.get_mut(&s.at) {
                    let moved = s.mass.min(*p);
                    *p -= moved;
                    *cells.entry(to).or_insert(0.0) += moved;
                }
            }
            shannon_of(&cells.values().copied().filter(|p| *p > 0.0).collect::<Vec<_>>())
        };
        let (a, b) = (shifted(false), shifted(true));
        Ok((mid.min(a).min(b), mid.max(a).max(b)))
    }

    /// `μ × ν` for two one-dimensional measures of the same depth.
    pub fn product(&self, other: &DyadicMeasure) -> Result<DyadicMeasure> {
        if self.dim != 1 || other.dim != 1 {
            return Err(Error::Domain("product needs two one-dimensional measures".into()));
        }
        if self.depth != other.depth {
            return Err(Error::Domain(format!("depths differ: {} vs {}", self.depth, other.depth)));
        }
        let mut cells = BTreeMap::new();
        for (a, p) in &self.cells {
            for (b, q) in &other.cells {
                cells.insert([a[0], b[0]], p * q);
            }
        }
        Ok(DyadicMeasure { dim: 2, depth: self.depth, cells, straddles: Vec::new() })
    }

    /// Push-forward under `S_t(x) = 2ᵗx`: the same cell indices read at
    /// depth `depth − t`.
    pub fn scale_pow2(&self, t: i32) -> Result<DyadicMeasure> {
        let depth = self.depth as i64 - t as i64;
        if !(0..=60).contains(&depth) {
            return Err(Error::Domain(format!("scaling by 2^{t} leaves depth {depth} out of range")));
        }
        Ok(DyadicMeasure { depth: depth as usize, ..self.clone() })
    }

    /// Normalised restriction to the level-`k` cell `d`, at the same depth.
    pub fn restrict(&self, k: usize, d: Cell) -> Result<DyadicMeasure> {
        self.check_level(k)?;
        let by = self.depth - k;
        let x0 = d[0] << by;
        let x1 = (d[0] + 1) << by;
        let mut cells = BTreeMap::new();
        for (c, p) in self.cells.range([x0, i64::MIN]..[x1, i64::MIN]) {
            if shift_down(*c, by) == d {
                cells.insert(*c, *p);
            }
        }
        let total = pairwise_sum(&cells.values().copied().collect::<Vec<_>>());
        if total <= 0.0 {
            return Err(Error::EmptySet);
        }
        cells.values_mut().for_each(|p| *p /= total);
        Ok(DyadicMeasure { dim: self.dim, depth: self.depth, cells, straddles: Vec::new() })
    }

    /// The level-`k` cell `d` blown up affinely onto the unit cell; the
    /// result has depth `depth − k`.
    pub fn rescale_cell(&self, k: usize, d: Cell) -> Result<DyadicMeasure> {
        let raw = self.restrict(k, d)?;
        let by = self.depth - k;
        let cells = raw.cells.iter().map(|(c, p)| ([c[0] - (d[0] << by), c[1] - (d[1] << by)], *p)).collect();
        Ok(DyadicMeasure { dim: self.dim, depth: by, cells, straddles: Vec::new() })
    }

    /// Cell centres with their masses.
    pub fn atoms(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let side = 1.0 / (1u64 << self.depth) as f64;
        let dim = self.dim;
        self.cells.iter().map(move |(c, p)| {
            let y = if dim == 1 { 0.0 } else { (c[1] as f64 + 0.5) * side };
            ([(c[0] as f64 + 0.5) * side, y], *p)
        })
    }

    /// `i,j,mass` rows (header included).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,mass\n");
        for (c, p) in &self.cells {
            let _ = writeln!(s, "{},{},{:.17e}", c[0], c[1], p);
        }
        s
    }
}

pub(crate) fn shannon_of(masses: &[f64]) -> f64 {
    let terms: Vec<f64> = masses.par_iter().map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 }).collect();
    pairwise_sum(&terms).max(0.0)
}
