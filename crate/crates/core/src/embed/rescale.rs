use serde::{Deserialize, Serialize};

use super::tree::TargetTree;
use super::verify::{verify_containment, EmbeddingVerdict, VerdictStatus};
use crate::error::{Error, Result};
use crate::ifs::{check_ssc, AffineMap2, CylinderWord, IAffine, Ifs, Rect};
use crate::numerics::{eigen_analyze, rational_exponent, JordanClass, Matrix2, RationalExponent, Scalar};

/// Depth of the cover used to certify the separation gap of the target.
pub const SSC_DEPTH: usize = 6;
/// Scale below which powers of a map are no longer tracked.
pub const UNDERFLOW_SCALE: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocateMethod {
    /// `‖g‖·α_I·diam F < ρ·λ^{n−1}`, cylinder found by anchor descent.
    DiameterGuard,
    /// Exactly one generation-`n` box of the target meets the image.
    BoxSeparation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleResult {
    /// `ψ_J⁻¹ ∘ g ∘ φ_I`.
    pub map: AffineMap2,
    pub target: CylinderWord,
    pub generation: usize,
    pub method: LocateMethod,
    pub verdict: EmbeddingVerdict,
}

// Uniform contraction and separation gap of a target system.
struct Target {
    lambda: Scalar,
    lambda_lo: f64,
    rho: f64,
}

fn target_data(e: &Ifs) -> Result<Target> {
    let lambda = e
        .uniform_scale()
        .ok_or_else(|| Error::PreconditionFailed(format!("{} has no uniform contraction ratio", e.label)))?;
    let ssc = check_ssc(e, SSC_DEPTH)?;
    let rho = match ssc.gap() {
        Some(g) if g.lo() > 0.0 => g.lo(),
        _ => return Err(Error::PreconditionFailed(format!("strong separation of {} not certified", e.label))),
    };
    Ok(Target { lambda_lo: lambda.to_interval().lo(), lambda, rho })
}

/// Restricts `g` to the source cylinder `I`, finds the generation-`n`
/// target cylinder `J` containing the image and rescales:
/// `ψ_J⁻¹ ∘ g ∘ φ_I`. With `generation = None` the largest admissible `n`
/// is used. The result is re-verified at resolution `eps`.
pub fn restrict_map_rescale(
    g: &AffineMap2,
    f: &Ifs,
    e: &Ifs,
    word: &CylinderWord,
    generation: Option<usize>,
    eps: f64,
) -> Result<RescaleResult> {
    f.check_word(word)?;
    let t = target_data(e)?;
    rescale_with(g, f, e, word, generation, eps, &t)
}

fn rescale_with(
    g: &AffineMap2,
    f: &Ifs,
    e: &Ifs,
    word: &CylinderWord,
    generation: Option<usize>,
    eps: f64,
    t: &Target,
) -> Result<RescaleResult> {
    let h = g.compose(&f.compose_word(word.as_slice()));
    let hi = h.to_interval();
    let size = hi.norm() * f.diameter();
    let guard = |n: usize| n >= 1 && size < t.rho * t.lambda_lo.powi(n as i32 - 1);
    let tree = TargetTree::new(e);
    let images = image_boxes(&hi, f);

    let unique_at = |n: usize| -> Option<CylinderWord> {
        let mut found: Option<CylinderWord> = None;
        for r in &images {
            for w in tree.words_meeting(r, n) {
                match &found {
                    Some(x) if *x != w => return None,
                    _ => found = Some(w),
                }
            }
        }
        found
    };

    let (n, method) = match generation {
        Some(0) => (0, LocateMethod::BoxSeparation),
        Some(n) if guard(n) => (n, LocateMethod::DiameterGuard),
        Some(n) if unique_at(n).is_some() => (n, LocateMethod::BoxSeparation),
        Some(n) => {
            return Err(Error::PreconditionFailed(format!(
                "image of diameter ≤ {size:.3e} is not isolated at generation {n} (gap {:.3e}, ratio {})",
                t.rho, t.lambda
            )))
        }
        None if guard(1) => {
            let mut n = 1;
            while n < 200 && guard(n + 1) {
                n += 1;
            }
            (n, LocateMethod::DiameterGuard)
        }
        None => {
            if unique_at(1).is_none() {
                return Err(Error::PreconditionFailed(format!(
                    "image of diameter ≤ {size:.3e} meets several first-generation cylinders"
                )));
            }
            let mut n = 1;
            while n < 200 && unique_at(n + 1).is_some() {
                n += 1;
            }
            (n, LocateMethod::BoxSeparation)
        }
    };

    let target = match method {
        _ if n == 0 => CylinderWord::empty(),
        LocateMethod::BoxSeparation => unique_at(n).expect("checked above"),
        LocateMethod::DiameterGuard => {
            let p = Rect::from_point(&hi.apply(&f.fixed_point(0).to_intervals()));
            tree.descend(&p, n).ok_or_else(|| {
                Error::AmbiguousCylinder(format!("anchor image {:?} does not single out a generation-{n} cylinder", p.center()))
            })?
        }
    };
    let map = e.compose_word(target.as_slice()).inverse()?.compose(&h);
    let verdict = verify_containment(&map, f, e, eps)?;
    Ok(RescaleResult { map, target, generation: n, method, verdict })
}

// Image boxes of the first-level cylinders (a tighter hull than the bbox).
fn image_boxes(h: &IAffine, f: &Ifs) -> Vec<Rect> {
    let mut out = Vec::new();
    for i in 0..f.len() {
        for j in 0..f.len() {
            let m = h.compose(f.imap(i)).compose(f.imap(j));
            out.push(m.apply_rect(f.bbox()));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleTerm {
    pub n: usize,
    /// Generation `k(n)` of the containing cylinder.
    pub k: usize,
    /// `λ^{−k}·O_n⁻¹·Aⁿ`.
    pub normalized: Matrix2,
    /// Orthogonal part of the containing cylinder map.
    pub orthogonal: Matrix2,
    pub word: CylinderWord,
    pub status: VerdictStatus,
    /// Singular value ratio `σ₂/σ₁` of the normalized part.
    pub singular_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum LimitClass {
    /// Every normalized part is a scaled orthogonal matrix; `limit_points`
    /// counts the distinct ones seen.
    Similarity { limit_points: usize },
    /// Normalized parts converge to a rank-one matrix with this kernel.
    Rank1 { kernel: [f64; 2] },
    DiagonalDistinct,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleSequenceReport {
    pub terms: Vec<RescaleTerm>,
    pub limit_class: LimitClass,
    /// `log|γᵢ| / log λ` for both eigenvalue moduli, largest first.
    pub eigen_exponents: Vec<RationalExponent>,
    pub complex_eigenvalues: bool,
    /// Set when powers were cut short to avoid underflow.
    pub truncated_at: Option<usize>,
}

/// Iterates `g`, locating `gⁿ(F)` inside a cylinder of generation
/// `k(n) = ⌊n log γ / log λ⌋` and recording the rescaled linear parts.
pub fn iterate_rescale_sequence(g: &AffineMap2, f: &Ifs, n_max: usize, eps: f64) -> Result<RescaleSequenceReport> {
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max must be at least 2, got {n_max}")));
    }
    let t = target_data(f)?;
    let v = verify_containment(g, f, f, eps)?;
    if !v.is_certified() {
        return Err(Error::PreconditionFailed(format!("g(F) ⊆ F not certified ({:?})", v.status)));
    }
    let eig = eigen_analyze(&g.linear)?;
    let eigen_exponents = eig
        .moduli
        .iter()
        .map(|m| rational_exponent(m, &t.lambda, 64, 1e-6))
        .collect::<Result<Vec<_>>>()?;
    let lead = &eigen_exponents[0];
    let k_of = |n: usize| -> usize {
        let x = match lead.exponent {
            Some((p, q)) => (n as i64 * p).div_euclid(q as i64) as f64,
            None => (n as f64 * lead.value + 1e-9).floor(),
        };
        x.max(0.0) as usize
    };

    let gamma = eig.moduli[0].to_f64();
    let mut terms = Vec::new();
    let mut truncated_at = None;
    let mut gn = AffineMap2::identity();
    for n in 1..=n_max {
        if gamma.powi(n as i32) < UNDERFLOW_SCALE {
            truncated_at = Some(n - 1);
            break;
        }
        gn = g.compose(&gn);
        let k = k_of(n);
        let r = rescale_with(&gn, f, f, &CylinderWord::empty(), Some(k), eps, &t)?;
        let cyl = f.compose_word(r.target.as_slice());
        let orthogonal = cyl.linear.scale(&t.lambda.powi(-(k as i32)));
        let normalized = r.map.linear.clone();
        let (s1, s2, _) = singular(&normalized.to_f64());
        terms.push(RescaleTerm {
            n,
            k,
            normalized,
            orthogonal,
            word: r.target,
            status: r.verdict.status,
            singular_ratio: s2 / s1,
        });
    }
    if terms.len() < 2 {
        return Err(Error::NumericUnderflow(format!("|γ|ⁿ drops below {UNDERFLOW_SCALE:e} before n = 2")));
    }
    let limit_class = classify(&terms);
    Ok(RescaleSequenceReport {
        terms,
        limit_class,
        eigen_exponents,
        complex_eigenvalues: eig.jordan_class == JordanClass::ComplexConjugate,
        truncated_at,
    })
}

fn classify(terms: &[RescaleTerm]) -> LimitClass {
    let tail = &terms[terms.len() / 2..];
    let ratios: Vec<f64> = tail.iter().map(|t| t.singular_ratio).collect();
    if terms.iter().all(|t| t.singular_ratio > 1.0 - 1e-9) {
        let mut seen: Vec<[f64; 4]> = Vec::new();
        for t in terms {
            let m = t.normalized.to_f64();
            if !seen.iter().any(|s| s.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-9)) {
                seen.push(m);
            }
        }
        return LimitClass::Similarity { limit_points: seen.len() };
    }
    let decreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    let last = *ratios.last().expect("nonempty");
    if decreasing && last < 1e-3 {
        let (_, _, kernel) = singular(&tail.last().expect("nonempty").normalized.to_f64());
        return LimitClass::Rank1 { kernel };
    }
    let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-6 {
        return LimitClass::DiagonalDistinct;
    }
    LimitClass::Unclassified
}

/// Singular values `σ₁ ≥ σ₂` of a row-major 2×2 matrix and the unit right
/// singular vector of `σ₂` (sign fixed so its first nonzero entry is
/// positive).
pub fn singular(m: &[f64; 4]) -> (f64, f64, [f64; 2]) {
    let [a, b, c, d] = *m;
    let p = a * a + c * c;
    let q = a * b + c * d;
    let r = b * b + d * d;
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let mu1 = mean + rad;
    // product of the eigenvalues avoids cancellation in the smaller one
    let det = a * d - b * c;
    let mu2 = if mu1 > 0.0 { det * det / mu1 } else { 0.0 };
    let v1 = [q, mu2 - p];
    let v2 = [mu2 - r, q];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    let mut v = if n1 == 0.0 && n2 == 0.0 {
        if p <= r {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else if n1 >= n2 {
        [v1[0] / n1, v1[1] / n1]
    } else {
        [v2[0] / n2, v2[1] / n2]
    };
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    (mu1.sqrt(), mu2.sqrt(), v)
}
