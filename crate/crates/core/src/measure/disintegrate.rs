use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dyadic::{cell_index, Cell, DyadicMeasure};
use super::selfsimilar::{
    descend, discretize, entropy_dimension_of, EntropyDimension, SelfSimilarMeasure, DISCRETIZE_NODE_CAP,
};
use crate::error::{Error, Result};
use crate::ifs::{IAffine, Ifs, Similarity2};
use crate::numerics::{Scalar, Vector2};

/// The conditional measure on the fibre over an x-cylinder, read on the
/// y-axis (stored one-dimensionally), and the `P₁μ`-mass of that cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub measure: DyadicMeasure,
    pub weight: f64,
    pub prefix: Vec<u8>,
    /// Set when the fibre came from a numeric column restriction.
    pub approximate: bool,
}

/// Maps grouped by x-translation: digit `d` is the `d`-th smallest
/// translation.
#[derive(Clone, Debug)]
pub struct XDigits {
    pub scale: Scalar,
    pub translations: Vec<Scalar>,
    pub class_of: Vec<usize>,
    pub class_mass: Vec<f64>,
}

/// Digit structure of a homothetic system with one common ratio whose
/// x-digit intervals have disjoint interiors.
pub fn x_digits(spec: &SelfSimilarMeasure) -> Result<XDigits> {
    let ifs = &spec.ifs;
    if !ifs.is_homothetic() {
        return Err(Error::UnsupportedIfs("disintegration needs homotheties; the system has rotations or reflections".into()));
    }
    let scale = ifs
        .uniform_scale()
        .ok_or_else(|| Error::UnsupportedIfs("disintegration needs one common contraction ratio".into()))?;
    let mut translations: Vec<Scalar> = Vec::new();
    for m in ifs.maps() {
        if !translations.iter().any(|t| t.eq_certain(&m.translation.x) == Some(true)) {
            translations.push(m.translation.x.clone());
        }
    }
    translations.sort_by(|a, b| a.to_f64().total_cmp(&b.to_f64()));
    let class_of: Vec<usize> = ifs
        .maps()
        .iter()
        .map(|m| translations.iter().position(|t| t.eq_certain(&m.translation.x) == Some(true)).expect("collected"))
        .collect();
    let mut class_mass = vec![0.0; translations.len()];
    for (i, &c) in class_of.iter().enumerate() {
        class_mass[c] += spec.weights[i];
    }
    // interiors of λ·[a, b] + t must not overlap, or digits do not determine x
    let (a, b) = (ifs.bbox().x.lo(), ifs.bbox().x.hi());
    let lam = scale.to_f64();
    let slack = 1e-12 * (1.0 + b - a);
    for w in translations.windows(2) {
        if w[1].to_f64() + lam * a < w[0].to_f64() + lam * b - slack {
            return Err(Error::UnsupportedIfs(format!(
                "x-digit intervals at {} and {} overlap",
                w[0].to_f64(),
                w[1].to_f64()
            )));
        }
    }
    Ok(XDigits { scale, translations, class_of, class_mass })
}

/// `{λ·u + t}` on the x-axis for the given translations; `None` when there
/// is only one (the attractor is a point).
fn axis_ifs(label: &str, scale: &Scalar, ts: &[Scalar]) -> Result<Option<Ifs>> {
    if ts.len() < 2 {
        return Ok(None);
    }
    let maps = ts
        .iter()
        .map(|t| Similarity2::homothety(scale.clone(), Vector2::new(t.clone(), Scalar::zero())))
        .collect::<Result<Vec<_>>>()?;
    Ifs::new(label, maps).map(Some)
}

/// The fixed point `t/(1 − λ)` of the only map.
fn point_measure(scale: &Scalar, t: &Scalar, depth: usize) -> Result<DyadicMeasure> {
    let x = t.to_f64() / (1.0 - scale.to_f64());
    DyadicMeasure::dirac(1, depth, [x, 0.0])
}

/// The projection `P₁μ` at `depth`.
pub fn x_marginal(spec: &SelfSimilarMeasure, depth: usize) -> Result<DyadicMeasure> {
    let d = x_digits(spec)?;
    match axis_ifs("x-marginal", &d.scale, &d.translations)? {
        None => point_measure(&d.scale, &d.translations[0], depth),
        Some(ifs) => discretize(&SelfSimilarMeasure::new(ifs, d.class_mass.clone())?, depth),
    }
}

/// Conditions `μ` on the x-digit prefix: the normalised projection to the
/// y-axis of `μ` restricted to the prefix's x-cylinder, plus its mass.
pub fn disintegrate(spec: &SelfSimilarMeasure, prefix: &[u8], depth: usize) -> Result<Fiber> {
    let d = x_digits(spec)?;
    if let Some(&bad) = prefix.iter().find(|&&c| c as usize >= d.translations.len()) {
        return Err(Error::Domain(format!("x-digit {bad} out of range 0..{}", d.translations.len())));
    }
    let weight: f64 = prefix.iter().map(|&c| d.class_mass[c as usize]).product();
    let ys: Vec<Scalar> = spec.ifs.maps().iter().map(|m| m.translation.y.clone()).collect();
    let all_same = ys.iter().all(|y| y.eq_certain(&ys[0]) == Some(true));
    let measure = if all_same {
        point_measure(&d.scale, &ys[0], depth)?
    } else {
        // one y-map per original map, duplicates allowed
        let maps = ys
            .iter()
            .map(|t| Similarity2::homothety(d.scale.clone(), Vector2::new(t.clone(), Scalar::zero())))
            .collect::<Result<Vec<_>>>()?;
        let yifs = Ifs::new("fiber", maps)?;
        let w = &spec.weights;
        let weight_at = |level: usize, i: usize| match prefix.get(level) {
            Some(&c) if d.class_of[i] == c as usize => w[i] / d.class_mass[c as usize],
            Some(_) => 0.0,
            None => w[i],
        };
        descend(&yifs, 1, depth, DISCRETIZE_NODE_CAP, &[(IAffine::identity(), 1.0)], &weight_at)?
    };
    Ok(Fiber { measure, weight, prefix: prefix.to_vec(), approximate: false })
}

/// Numeric fallback for any system: discretise `μ`, keep the cells whose
/// x-centre lies in `[x0, x1)`, and bin their y-coordinates.
pub fn column_restriction(spec: &SelfSimilarMeasure, x: (f64, f64), depth: usize) -> Result<Fiber> {
    let m = discretize(spec, depth)?;
    let mut cells: BTreeMap<Cell, f64> = BTreeMap::new();
    for (c, p) in m.atoms() {
        if c[0] >= x.0 && c[0] < x.1 {
            *cells.entry([cell_index(c[1], depth), 0]).or_insert(0.0) += p;
        }
    }
    let weight: f64 = cells.values().sum();
    if weight <= 0.0 {
        return Err(Error::EmptySet);
    }
    cells.values_mut().for_each(|p| *p /= weight);
    Ok(Fiber { measure: DyadicMeasure::new(1, depth, cells)?, weight, prefix: Vec::new(), approximate: true })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConservationReport {
    pub projection: EntropyDimension,
    pub total: EntropyDimension,
    pub fiber_estimates: Vec<f64>,
    pub fiber_mean: f64,
    pub prefix_len: usize,
    /// `dim P₁μ + dim μ_[x] − dim μ`.
    pub residual: f64,
}

/// Entropy-dimension estimates of `P₁μ`, of fibres over `samples` random
/// x-prefixes (long enough to be resolved at level `n_max`), and of `μ`.
pub fn dimension_conservation_check(
    spec: &SelfSimilarMeasure,
    n_min: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<ConservationReport> {
    if samples == 0 {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    let d = x_digits(spec)?;
    let projection = entropy_dimension_of(&x_marginal(spec, n_max)?, n_min, n_max)?;
    let total = entropy_dimension_of(&discretize(spec, n_max)?, n_min, n_max)?;
    let lam = d.scale.to_f64();
    let prefix_len = (n_max as f64 * 2f64.ln() / (1.0 / lam).ln()).ceil() as usize;
    let digits = WeightedIndex::new(&d.class_mass).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fiber_estimates = Vec::with_capacity(samples);
    for _ in 0..samples {
        let prefix: Vec<u8> = (0..prefix_len).map(|_| digits.sample(&mut rng) as u8).collect();
        let f = disintegrate(spec, &prefix, n_max)?;
        fiber_estimates.push(entropy_dimension_of(&f.measure, n_min, n_max)?.estimate);
    }
    let fiber_mean = fiber_estimates.iter().sum::<f64>() / samples as f64;
    let residual = projection.estimate + fiber_mean - total.estimate;
    Ok(ConservationReport { projection, total, fiber_estimates, fiber_mean, prefix_len, residual })
}
