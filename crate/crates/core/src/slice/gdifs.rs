use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{group_closure, DEFAULT_GROUP_CAP, FLOAT_DEDUP_TOL};
use crate::ifs::{Ifs, Similarity2};
use crate::numerics::{Matrix2, Scalar, Vector2};

/// One similarity `u ↦ α·u + b` from vertex `from` into vertex `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdEdge {
    pub from: usize,
    pub to: usize,
    pub ratio: Scalar,
    pub translation: Scalar,
    /// Number of identical edges merged into this one.
    pub multiplicity: usize,
}

/// A graph-directed system of maps on the line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gdifs {
    /// Orthogonal group elements `O_j`, identity first.
    pub vertices: Vec<Matrix2>,
    pub edges: Vec<GdEdge>,
    pub strongly_connected: bool,
}

impl Gdifs {
    /// Edge count with multiplicities.
    pub fn raw_edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.multiplicity).sum()
    }

    /// The maps of a one-vertex system as an IFS on the x-axis; with
    /// `repeat`, each edge appears `multiplicity` times.
    pub fn line_ifs(&self, repeat: bool) -> Result<Ifs> {
        if self.vertices.len() != 1 {
            return Err(Error::PreconditionFailed(format!("{} vertices; a line IFS needs one", self.vertices.len())));
        }
        let mut maps = Vec::new();
        for e in &self.edges {
            let m = Similarity2::homothety(e.ratio.clone(), Vector2::new(e.translation.clone(), Scalar::zero()))?;
            let k = if repeat { e.multiplicity } else { 1 };
            maps.extend(std::iter::repeat_n(m, k));
        }
        Ifs::new("projection", maps)
    }

    fn reachable(&self, start: usize, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for e in &self.edges {
                let (a, b) = if reverse { (e.to, e.from) } else { (e.from, e.to) };
                if a == v && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    }
}

fn same_scalar(a: &Scalar, b: &Scalar) -> bool {
    match a.eq_certain(b) {
        Some(v) => v,
        None => (a.to_f64() - b.to_f64()).abs() <= FLOAT_DEDUP_TOL,
    }
}

fn same_matrix(a: &Matrix2, b: &Matrix2) -> bool {
    a.entries().iter().zip(b.entries()).all(|(x, y)| same_scalar(x, y))
}

/// Projects `F` onto the line spanned by `direction`: vertex `j` carries
/// `L(O_j F)` and each map `φ_i = α_i O_i z + t_i` gives an edge
/// `O_j → O_j O_i` with `u ↦ α_i u + L(O_j t_i)`.
pub fn project_gdifs(ifs: &Ifs, direction: &[Scalar; 2]) -> Result<Gdifs> {
    let group = group_closure(ifs, DEFAULT_GROUP_CAP);
    if !group.is_finite() {
        return Err(Error::PreconditionFailed(format!(
            "the orthogonal group is not finite ({:?})",
            group.classification
        )));
    }
    let vertices = group.elements;
    let dir = Vector2::new(direction[0].clone(), direction[1].clone());
    let mut edges: Vec<GdEdge> = Vec::new();
    for (j, oj) in vertices.iter().enumerate() {
        for m in ifs.maps() {
            let prod = oj * &m.orthogonal.matrix();
            let to = vertices
                .iter()
                .position(|v| same_matrix(v, &prod))
                .ok_or_else(|| Error::PreconditionFailed("group closure missed a product".into()))?;
            let translation = oj.apply(&m.translation).dot(&dir);
            let ratio = m.scale.clone();
            match edges
                .iter_mut()
                .find(|e| e.from == j && e.to == to && same_scalar(&e.ratio, &ratio) && same_scalar(&e.translation, &translation))
            {
                Some(e) => e.multiplicity += 1,
                None => edges.push(GdEdge { from: j, to, ratio, translation, multiplicity: 1 }),
            }
        }
    }
    let mut g = Gdifs { vertices, edges, strongly_connected: false };
    g.strongly_connected = g.reachable(0, false).iter().all(|&b| b) && g.reachable(0, true).iter().all(|&b| b);
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdDimension {
    /// Root of `ρ(A(s)) = 1`.
    pub s: f64,
    pub dedup: bool,
    /// Set when overlapping edges were counted, so `s` only bounds the
    /// dimension from above.
    pub upper_bound_only: bool,
    /// `min(s, 1)`: the bound that applies to a subset of the line.
    pub dimension_bound: f64,
    /// Per-vertex roots from the subgraph reachable from each vertex.
    pub vertex_dimensions: Vec<f64>,
    pub spectral_residual: f64,
}

/// Spectral radius of a nonnegative matrix by power iteration on `A + I`
/// (aperiodic whenever `A` is irreducible).
fn spectral_radius(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut rho = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| v[i] + (0..n).map(|j| a[i][j] * v[j]).sum::<f64>()).collect();
        let norm: f64 = w.iter().sum();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm - 1.0;
        v = w.iter().map(|x| x / norm).collect();
        if (next - rho).abs() < 1e-10 * next.abs().max(1.0) {
            rho = next;
            break;
        }
        rho = next;
    }
    // Collatz–Wielandt refinement with the converged vector
    let av: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * v[j]).sum::<f64>()).collect();
    let (num, den): (f64, f64) = (av.iter().sum(), v.iter().sum());
    if den > 0.0 {
        num / den
    } else {
        rho
    }
}

fn matrix_at(g: &Gdifs, keep: &[bool], s: f64, dedup: bool) -> Vec<Vec<f64>> {
    let n = g.vertices.len();
    let mut a = vec![vec![0.0; n]; n];
    for e in &g.edges {
        if keep[e.from] && keep[e.to] {
            let k = if dedup { 1.0 } else { e.multiplicity as f64 };
            a[e.from][e.to] += k * e.ratio.to_f64().powf(s);
        }
    }
    a
}

fn root(g: &Gdifs, keep: &[bool], dedup: bool) -> (f64, f64) {
    let rho = |s: f64| spectral_radius(&matrix_at(g, keep, s, dedup));
    let (mut lo, mut hi) = (0.0, 1.0);
    while rho(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    (s, (rho(s) - 1.0).abs())
}

/// The Mauldin–Williams root `s` with `ρ(A(s)) = 1`, `A(s)_{jk} = Σ α_e^s`.
pub fn gdifs_dimension(g: &Gdifs, dedup: bool) -> Result<GdDimension> {
    if !g.strongly_connected {
        return Err(Error::PreconditionFailed("GD-IFS is not strongly connected".into()));
    }
    let all = vec![true; g.vertices.len()];
    let (s, spectral_residual) = root(g, &all, dedup);
    let vertex_dimensions = (0..g.vertices.len()).map(|j| root(g, &g.reachable(j, false), dedup).0).collect();
    let upper_bound_only = !dedup && g.edges.iter().any(|e| e.multiplicity > 1);
    Ok(GdDimension { s, dedup, upper_bound_only, dimension_bound: s.min(1.0), vertex_dimensions, spectral_residual })
}
