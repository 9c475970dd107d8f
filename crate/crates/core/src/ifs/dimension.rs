use super::system::Ifs;

/// Root `s` of the Moran equation `Σ α_i^s = 1` by bisection, then Newton.
pub fn similarity_dimension(ifs: &Ifs) -> f64 {
    let alphas: Vec<f64> = ifs.maps().iter().map(|m| m.scale.to_f64()).collect();
    moran_root(&alphas)
}

/// Solves `Σ α_i^s = 1` for ratios in `(0, 1)`, at least two of them.
pub fn moran_root(alphas: &[f64]) -> f64 {
    let f = |s: f64| alphas.iter().map(|a| a.powf(s)).sum::<f64>() - 1.0;
    let df = |s: f64| alphas.iter().map(|a| a.powf(s) * a.ln()).sum::<f64>();
    // f is strictly decreasing with f(0) = l − 1 > 0
    let (mut lo, mut hi) = (0.0, 2.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..4 {
        let step = f(s) / df(s);
        if !step.is_finite() {
            break;
        }
        let next = s - step;
        if next < lo || next > hi {
            break;
        }
        s = next;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    #[test]
    fn closed_forms() {
        assert!((similarity_dimension(&presets::segment()) - 1.0).abs() < 1e-12);
        assert!((similarity_dimension(&presets::cxc()) - 4f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((similarity_dimension(&presets::c_times_interval()) - 6f64.ln() / 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_ratio_case() {
        // y = 2^-s solves y + y² = 1, so y = (√5 − 1)/2
        let s = moran_root(&[0.5, 0.25]);
        let want = ((5f64.sqrt() + 1.0) / 2.0).log2();
        assert!((s - want).abs() < 1e-12);
        assert!((0.5f64.powf(s) + 0.25f64.powf(s) - 1.0).abs() < 1e-12);
    }
}
