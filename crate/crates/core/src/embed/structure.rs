use std::collections::HashMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::verify::key;
use crate::error::{Error, Result};
use crate::ifs::{AffineMap2, CylinderWord, Ifs};

/// A solution of `g^k ∘ φ_I = φ_J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSolution {
    pub k: usize,
    pub source: CylinderWord,
    pub target: CylinderWord,
}

impl StructureSolution {
    /// Exact re-check of the equation.
    pub fn holds(&self, g: &AffineMap2, f: &Ifs) -> bool {
        let lhs = g.pow(self.k as u32).compose(&f.compose_word(self.source.as_slice()));
        lhs.exact_eq(&f.compose_word(self.target.as_slice()))
    }
}

/// Exhaustive search for `g^k ∘ φ_I = φ_J` with `1 ≤ k ≤ k_max` and
/// `|I|, |J| ≤ len_max` (`J` nonempty). Returns the first solution in the
/// order: smallest `k`, then shortlex `I`, then shortlex `J`.
pub fn structure_find(g: &AffineMap2, f: &Ifs, k_max: usize, len_max: usize) -> Result<Option<StructureSolution>> {
    if !g.is_exact() || !f.is_exact() {
        return Err(Error::Domain("structure_find compares maps exactly and needs rational inputs".into()));
    }
    let mut targets: HashMap<Vec<BigRational>, CylinderWord> = HashMap::new();
    for len in 1..=len_max {
        for j in CylinderWord::all_of_length(f.len(), len) {
            let k = key(&f.compose_word(j.as_slice())).expect("exact system");
            // shortlex enumeration: the first word stored is the smallest
            targets.entry(k).or_insert(j);
        }
    }
    let mut gk = AffineMap2::identity();
    for k in 1..=k_max {
        gk = g.compose(&gk);
        for len in 0..=len_max {
            for i in CylinderWord::all_of_length(f.len(), len) {
                let m = gk.compose(&f.compose_word(i.as_slice()));
                if let Some(j) = key(&m).and_then(|c| targets.get(&c)) {
                    return Ok(Some(StructureSolution { k, source: i, target: j.clone() }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;

    fn w(s: &[u8]) -> CylinderWord {
        CylinderWord::from_slice(s)
    }

    #[test]
    fn cylinder_maps() {
        let e = presets::cxc();
        let s = structure_find(e.affine(0), &e, 3, 3).unwrap().unwrap();
        assert_eq!((s.k, s.source.clone(), s.target.clone()), (1, w(&[]), w(&[0])));
        let g = e.compose_word(&[3, 0]);
        let s = structure_find(&g, &e, 3, 3).unwrap().unwrap();
        assert_eq!((s.k, s.target.clone()), (1, w(&[3, 0])));
        assert!(s.holds(&g, &e));
    }

    #[test]
    fn half_turn_needs_its_square() {
        let e = presets::cxc();
        let g = AffineMap2::ratios([(-1, 3), (0, 1), (0, 1), (-1, 3), (1, 3), (1, 3)]);
        let s = structure_find(&g, &e, 4, 3).unwrap().unwrap();
        assert_eq!(s.k, 2);
        assert!(s.source.is_empty());
        let want = [presets::cxc_index(0, 0) as u8, presets::cxc_index(2, 2) as u8];
        assert_eq!(s.target, w(&want));
        assert!(s.holds(&g, &e));
    }

    #[test]
    fn none_within_bounds() {
        let e = presets::cxc();
        let g = AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)]);
        assert_eq!(structure_find(&g, &e, 3, 3).unwrap(), None);
        let approx = AffineMap2::from_f64([0.3, 0.0, 0.0, 0.3], [0.0, 0.0]);
        assert!(structure_find(&approx, &e, 1, 1).is_err());
    }
}
