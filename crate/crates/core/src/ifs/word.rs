use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// A finite word `I = (i₁, …, i_k)` of 0-based map indices; `φ_I = φ_{i₁} ∘ … ∘ φ_{i_k}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CylinderWord(pub SmallVec<[u8; 16]>);

impl CylinderWord {
    pub fn empty() -> Self {
        CylinderWord(SmallVec::new())
    }

    pub fn from_slice(s: &[u8]) -> Self {
        CylinderWord(SmallVec::from_slice(s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, i: u8) {
        self.0.push(i);
    }

    pub fn child(&self, i: u8) -> Self {
        let mut w = self.clone();
        w.push(i);
        w
    }

    pub fn concat(&self, other: &CylinderWord) -> Self {
        let mut w = self.clone();
        w.0.extend_from_slice(&other.0);
        w
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn starts_with(&self, prefix: &CylinderWord) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Shortlex order: shorter first, then lexicographic.
    pub fn shortlex_cmp(&self, other: &CylinderWord) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }

    /// All words of length `n` over `l` letters, in lexicographic order.
    pub fn all_of_length(l: usize, n: usize) -> impl Iterator<Item = CylinderWord> {
        let total = (l as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        (0..total).map(move |mut k| {
            let mut w = smallvec::smallvec![0u8; n];
            for slot in w.iter_mut().rev() {
                *slot = (k % l as u128) as u8;
                k /= l as u128;
            }
            CylinderWord(w)
        })
    }
}

impl From<Vec<u8>> for CylinderWord {
    fn from(v: Vec<u8>) -> Self {
        CylinderWord(SmallVec::from_vec(v))
    }
}

impl From<&[u8]> for CylinderWord {
    fn from(v: &[u8]) -> Self {
        CylinderWord::from_slice(v)
    }
}

impl fmt::Display for CylinderWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}
