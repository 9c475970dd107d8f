use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::approx::{blowup_miniset, miniset_of_ifs, Miniset};
use super::fit_slope;
use super::line::{slice_cover, AffineLine};
use crate::error::{Error, Result};
use crate::ifs::{depth_for_resolution, Ifs};
use crate::measure::dyadic::EDGE_TOL;
use crate::numerics::{Interval, Scalar};

pub const MIN_GALLERY_SAMPLES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GalleryGenerator {
    VerticalSlicesOf { label: String },
    MinisetsOf { label: String },
    Custom,
}

/// A finite sample of minisets standing in for a gallery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gallery {
    pub generator: GalleryGenerator,
    pub samples: Vec<Miniset>,
}

/// Vertical slices `F ∩ {x = c}` read as minisets with `γ = 1`, centred at
/// `(c, y-midpoint of F)`. Slices that miss `F` are skipped.
pub fn vertical_slice_gallery(ifs: &Ifs, xs: &[Scalar], resolution: f64) -> Result<Gallery> {
    let depth = depth_for_resolution(ifs, resolution).max(1);
    let ymid = ifs.bbox().y.mid();
    let mut samples = Vec::with_capacity(xs.len());
    for x in xs {
        let mut s = slice_cover(ifs, &AffineLine::vertical(x.clone()), depth)?.cover;
        if s.is_empty() {
            continue;
        }
        let xi = x.to_interval();
        for b in &mut s.boxes {
            b.rect.x = xi;
        }
        samples.push(blowup_miniset(&s, [x.to_f64(), ymid], 1.0)?);
    }
    Ok(Gallery { generator: GalleryGenerator::VerticalSlicesOf { label: ifs.label.clone() }, samples })
}

/// Minisets `(γ·F − γ·c) ∩ Q` for the given `(c, γ)`.
pub fn miniset_gallery(ifs: &Ifs, params: &[([f64; 2], f64)], resolution: f64) -> Result<Gallery> {
    let samples = params
        .par_iter()
        .map(|&(c, g)| miniset_of_ifs(ifs, c, g, resolution))
        .collect::<Result<Vec<_>>>()?;
    Ok(Gallery { generator: GalleryGenerator::MinisetsOf { label: ifs.label.clone() }, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryDelta {
    /// Slope of `log₂ N_m` against `m`.
    pub delta: f64,
    /// `(m, N_m)` with `N_m` the largest count over the samples.
    pub table: Vec<(usize, u64)>,
    pub samples: usize,
    pub max_residual: f64,
    pub label: String,
}

impl GalleryDelta {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,N_m,log2N_m\n");
        for &(m, n) in &self.table {
            s.push_str(&format!("{m},{n},{}\n", (n as f64).log2()));
        }
        s
    }
}

/// Indices of the side-`h` cells of `Q` met by `[lo, hi]`; points on a cell
/// edge go to the cell above.
fn cell_span(iv: Interval, m: usize) -> (i64, i64) {
    let k = (1i64 << m) as f64;
    let top = (1i64 << m) - 1;
    let a = ((iv.lo() * k + EDGE_TOL).floor() as i64).clamp(-(1 << m), top);
    let b = ((iv.hi() * k - EDGE_TOL).floor() as i64).clamp(-(1 << m), top);
    (a, b.max(a))
}

fn hit_count(s: &Miniset, m: usize) -> u64 {
    let mut cells: HashSet<(i64, i64)> = HashSet::new();
    for b in &s.cover.boxes {
        let (x0, x1) = cell_span(b.rect.x, m);
        let (y0, y1) = cell_span(b.rect.y, m);
        for i in x0..=x1 {
            for j in y0..=y1 {
                cells.insert((i, j));
            }
        }
    }
    cells.len() as u64
}

/// Gallery dimension estimate over `m ∈ [m0, m1]`. `N_m` is a maximum over
/// finitely many sampled minisets, so `Δ` estimates the supremum from below.
pub fn gallery_delta(g: &Gallery, (m0, m1): (usize, usize)) -> Result<GalleryDelta> {
    if g.samples.len() < MIN_GALLERY_SAMPLES {
        return Err(Error::InsufficientSamples { got: g.samples.len(), need: MIN_GALLERY_SAMPLES });
    }
    if !(4 <= m0 && m0 < m1 && m1 <= 16) {
        return Err(Error::Domain(format!("m range [{m0}, {m1}] must satisfy 4 <= m0 < m1 <= 16")));
    }
    // boxes coarser than the finest cell would inflate the counts
    let h = 0.5f64.powi(m1 as i32);
    if let Some(s) = g.samples.iter().find(|s| s.cover.boxes.iter().any(|b| b.rect.x.width().max(b.rect.y.width()) > h * (1.0 + 1e-9))) {
        return Err(Error::Domain(format!(
            "a sample has boxes of side {:.3e}, coarser than 2^-{m1}",
            s.cover.boxes.iter().map(|b| b.rect.x.width().max(b.rect.y.width())).fold(0.0, f64::max)
        )));
    }
    let table: Vec<(usize, u64)> = (m0..=m1)
        .map(|m| (m, g.samples.par_iter().map(|s| hit_count(s, m)).max().unwrap_or(0)))
        .collect();
    if table.iter().any(|t| t.1 == 0) {
        return Err(Error::EmptySet);
    }
    let pts: Vec<(f64, f64)> = table.iter().map(|&(m, n)| (m as f64, (n as f64).log2())).collect();
    let delta = fit_slope(&pts);
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
    );
    let max_residual = pts.iter().map(|p| (p.1 - my - delta * (p.0 - mx)).abs()).fold(0.0, f64::max);
    Ok(GalleryDelta { delta, table, samples: g.samples.len(), max_residual, label: "estimate (sample max)".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    const LOG2_3: f64 = 0.630_929_753_571_457_4;

    fn params() -> Vec<([f64; 2], f64)> {
        (0..24).map(|i| ([i as f64 / 23.0, 0.0], 1.0 + (i % 6) as f64)).collect()
    }

    #[test]
    fn interval_minisets_fill_lines() {
        let g = miniset_gallery(&presets::segment(), &params(), 0.5f64.powi(12)).unwrap();
        let d = gallery_delta(&g, (4, 12)).unwrap();
        assert!((d.delta - 1.0).abs() < 0.05, "{d:?}");
        assert_eq!(d.label, "estimate (sample max)");
        assert!(d.to_csv().starts_with("m,N_m,log2N_m\n4,"));
    }

    #[test]
    fn slices_of_cxc_are_cantor_like() {
        let xs: Vec<Scalar> = (0..32u32)
            .map(|k| {
                // left endpoints of the level-5 Cantor intervals
                let n: i64 = (0..5).map(|b| if k >> b & 1 == 1 { 2 * 3i64.pow(4 - b) } else { 0 }).sum();
                Scalar::ratio(n, 243)
            })
            .collect();
        let g = vertical_slice_gallery(&presets::cxc(), &xs, 0.5f64.powi(12)).unwrap();
        assert_eq!(g.samples.len(), 32);
        let d = gallery_delta(&g, (4, 12)).unwrap();
        assert!((d.delta - LOG2_3).abs() < 0.05 && d.delta < 1.0, "{d:?}");
    }

    #[test]
    fn point_minisets_have_dimension_zero() {
        let g = miniset_gallery(&presets::point(), &params(), 0.5f64.powi(12)).unwrap();
        let d = gallery_delta(&g, (4, 12)).unwrap();
        assert!(d.delta.abs() < 1e-12 && d.table.iter().all(|t| t.1 == 1));
    }

    #[test]
    fn too_few_samples() {
        let g = miniset_gallery(&presets::segment(), &params()[..5], 0.01).unwrap();
        assert!(matches!(gallery_delta(&g, (4, 8)), Err(Error::InsufficientSamples { got: 5, need: 20 })));
    }
}
