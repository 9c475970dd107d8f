//! The group generated by the orthogonal parts of an IFS.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::ifs::similarity::reduce_turns;
use crate::ifs::{Ifs, Orthogonal, Rotation};
use crate::numerics::{Matrix2, ScalarMode};

pub const DEFAULT_GROUP_CAP: usize = 4096;
/// Entrywise tolerance for identifying float-mode group elements.
pub const FLOAT_DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupClass {
    Finite,
    PresumedInfinite,
    CertifiedInfinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrrationalRotation {
    Yes,
    No,
    PresumedYes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalGroupReport {
    /// Group elements in breadth-first order (identity first) when finite.
    pub elements: Vec<Matrix2>,
    /// `None` when the closure exceeded the cap or the group is infinite.
    pub order: Option<usize>,
    pub classification: GroupClass,
    pub contains_irrational_rotation: IrrationalRotation,
    pub mode: ScalarMode,
    /// Dedup tolerance in float mode.
    pub tolerance: Option<f64>,
    pub cap: usize,
}

impl OrthogonalGroupReport {
    pub fn is_finite(&self) -> bool {
        self.classification == GroupClass::Finite
    }
}

/// Exact group element `Rot(turns)·diag(1,−1)^reflect`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Elem {
    turns: BigRational,
    reflect: bool,
}

impl Elem {
    // Rot(a)S^f · Rot(b)S^g = Rot(a + (−1)^f b) S^{f+g}
    fn mul(&self, o: &Elem) -> Elem {
        let b = if self.reflect { -o.turns.clone() } else { o.turns.clone() };
        Elem { turns: reduce_turns(&(&self.turns + b)), reflect: self.reflect ^ o.reflect }
    }

    fn orthogonal(&self) -> Orthogonal {
        Orthogonal { rotation: Rotation::Turns(self.turns.clone()), reflect: self.reflect }
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// For a rational cosine: the exact turn count of the angle when it is one of
/// Niven's angles, otherwise `None` (the angle is an irrational multiple of π).
fn niven_turns(cos: &BigRational, sin_positive: bool) -> Option<BigRational> {
    let base = if cos.is_one() {
        rat(0, 1)
    } else if *cos == rat(1, 2) {
        rat(1, 6)
    } else if cos.is_zero() {
        rat(1, 4)
    } else if *cos == rat(-1, 2) {
        rat(1, 3)
    } else if *cos == rat(-1, 1) {
        rat(1, 2)
    } else {
        return None;
    };
    Some(if sin_positive { base } else { reduce_turns(&-base) })
}

enum Exactness {
    Exact(Vec<Elem>),
    /// Some pure rotation in the group has an irrational angle.
    Irrational,
    Float,
}

fn classify_generators(gens: &[Orthogonal]) -> Exactness {
    let mut exact = Vec::new();
    let mut irrational = false;
    let mut float = false;
    let mut reflect_cos: Vec<(BigRational, bool)> = Vec::new();
    for g in gens {
        match &g.rotation {
            Rotation::Turns(t) => exact.push(Elem { turns: reduce_turns(t), reflect: g.reflect }),
            Rotation::Cosine { cos, sin_positive } => match niven_turns(cos, *sin_positive) {
                Some(t) => exact.push(Elem { turns: t, reflect: g.reflect }),
                None if !g.reflect => irrational = true,
                None => {
                    reflect_cos.push((cos.clone(), *sin_positive));
                    float = true;
                }
            },
            Rotation::Radians(_) => float = true,
        }
    }
    if irrational {
        return Exactness::Irrational;
    }
    // two reflections with rational cos/sin compose to a rotation with
    // cos(θ₁ − θ₂) = c₁c₂ + s₁s₂, which Niven's theorem can decide
    if reflect_cos.len() >= 2 {
        let sin = |c: &BigRational, pos: bool| {
            crate::numerics::rational_sqrt(&(BigRational::one() - c * c)).map(|s| if pos { s } else { -s })
        };
        let (c1, p1) = &reflect_cos[0];
        if let Some(s1) = sin(c1, *p1) {
            for (c2, p2) in &reflect_cos[1..] {
                if let Some(s2) = sin(c2, *p2) {
                    let c = c1 * c2 + &s1 * &s2;
                    let sdiff = &s1 * c2 - c1 * &s2;
                    if niven_turns(&c, !sdiff.is_negative()).is_none() {
                        return Exactness::Irrational;
                    }
                }
            }
        }
    }
    if float {
        Exactness::Float
    } else {
        Exactness::Exact(exact)
    }
}

/// Breadth-first closure of the orthogonal parts of `ifs` under products.
pub fn group_closure(ifs: &Ifs, cap: usize) -> OrthogonalGroupReport {
    let gens: Vec<Orthogonal> = ifs.maps().iter().map(|m| m.orthogonal.clone()).collect();
    group_closure_of(&gens, cap)
}

pub fn group_closure_of(gens: &[Orthogonal], cap: usize) -> OrthogonalGroupReport {
    let cap = cap.max(1);
    match classify_generators(gens) {
        Exactness::Irrational => OrthogonalGroupReport {
            elements: Vec::new(),
            order: None,
            classification: GroupClass::CertifiedInfinite,
            contains_irrational_rotation: IrrationalRotation::Yes,
            mode: ScalarMode::Exact,
            tolerance: None,
            cap,
        },
        Exactness::Exact(gens) => exact_closure(&gens, cap),
        Exactness::Float => float_closure(gens, cap),
    }
}

fn exact_closure(gens: &[Elem], cap: usize) -> OrthogonalGroupReport {
    let id = Elem { turns: BigRational::zero(), reflect: false };
    let mut seen: HashSet<Elem> = HashSet::from([id.clone()]);
    let mut order = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    let mut overflow = false;
    'bfs: while let Some(e) = queue.pop_front() {
        for g in gens {
            let p = e.mul(g);
            if seen.insert(p.clone()) {
                if order.len() == cap {
                    overflow = true;
                    break 'bfs;
                }
                order.push(p.clone());
                queue.push_back(p);
            }
        }
    }
    if overflow {
        return OrthogonalGroupReport {
            elements: Vec::new(),
            order: None,
            classification: GroupClass::PresumedInfinite,
            // every element is a rational rotation or reflection
            contains_irrational_rotation: IrrationalRotation::No,
            mode: ScalarMode::Exact,
            tolerance: None,
            cap,
        };
    }
    OrthogonalGroupReport {
        order: Some(order.len()),
        elements: order.iter().map(|e| e.orthogonal().matrix()).collect(),
        classification: GroupClass::Finite,
        contains_irrational_rotation: IrrationalRotation::No,
        mode: ScalarMode::Exact,
        tolerance: None,
        cap,
    }
}

fn mul4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
}

fn float_closure(gens: &[Orthogonal], cap: usize) -> OrthogonalGroupReport {
    let gm: Vec<[f64; 4]> = gens.iter().map(|g| g.matrix().to_f64()).collect();
    let close = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= FLOAT_DEDUP_TOL);
    let id = [1.0, 0.0, 0.0, 1.0];
    let mut elems = vec![id];
    let mut head = 0;
    let mut overflow = false;
    'bfs: while head < elems.len() {
        let e = elems[head];
        head += 1;
        for g in &gm {
            let p = mul4(&e, g);
            if !elems.iter().any(|q| close(q, &p)) {
                if elems.len() == cap {
                    overflow = true;
                    break 'bfs;
                }
                elems.push(p);
            }
        }
    }
    let (classification, irr, order, elements) = if overflow {
        (GroupClass::PresumedInfinite, IrrationalRotation::PresumedYes, None, Vec::new())
    } else {
        (GroupClass::Finite, IrrationalRotation::No, Some(elems.len()), elems.iter().map(|m| Matrix2::from_f64(*m)).collect())
    };
    OrthogonalGroupReport {
        elements,
        order,
        classification,
        contains_irrational_rotation: irr,
        mode: ScalarMode::Interval,
        tolerance: Some(FLOAT_DEDUP_TOL),
        cap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::presets;
    use crate::numerics::Scalar;

    #[test]
    fn quarter_turn_cyclic() {
        let r = group_closure_of(&[Orthogonal::rotation(Rotation::turns(1, 4))], DEFAULT_GROUP_CAP);
        assert_eq!(r.order, Some(4));
        assert_eq!(r.classification, GroupClass::Finite);
    }

    #[test]
    fn dihedral_six() {
        // oracle: the multiplication table of D3
        let r = group_closure_of(
            &[Orthogonal::reflection_x(), Orthogonal::rotation(Rotation::turns(1, 3))],
            DEFAULT_GROUP_CAP,
        );
        assert_eq!(r.order, Some(6));
        let reflections = r.elements.iter().filter(|m| m.det().to_interval().contains(-1.0)).count();
        assert_eq!(reflections, 3);
    }

    #[test]
    fn one_radian_is_presumed_infinite() {
        let r = group_closure_of(&[Orthogonal::rotation(Rotation::Radians(1.0))], DEFAULT_GROUP_CAP);
        assert_eq!(r.classification, GroupClass::PresumedInfinite);
        assert_eq!(r.contains_irrational_rotation, IrrationalRotation::PresumedYes);
        assert_eq!(r.mode, ScalarMode::Interval);
    }

    #[test]
    fn arccos_third_is_certified_infinite() {
        let g = Orthogonal::rotation(Rotation::Cosine { cos: rat(1, 3), sin_positive: true });
        let r = group_closure_of(&[g], 16);
        assert_eq!(r.classification, GroupClass::CertifiedInfinite);
        assert_eq!(r.contains_irrational_rotation, IrrationalRotation::Yes);
        // a lone reflection with an irrational angle still generates a group of order 2
        let f = Orthogonal { rotation: Rotation::Cosine { cos: rat(3, 5), sin_positive: true }, reflect: true };
        let r = group_closure_of(&[f], 16);
        assert_eq!(r.order, Some(2));
    }

    #[test]
    fn niven_cosine_reduces_to_turns() {
        let g = Orthogonal::rotation(Rotation::Cosine { cos: rat(-1, 2), sin_positive: true });
        assert_eq!(group_closure_of(&[g], 64).order, Some(3));
    }

    #[test]
    fn homothetic_group_trivial() {
        let r = group_closure(&presets::cxc(), DEFAULT_GROUP_CAP);
        assert_eq!(r.order, Some(1));
        assert!(r.elements[0].exact_eq(&Matrix2::identity()));
        let r = group_closure(&presets::half_turn(), DEFAULT_GROUP_CAP);
        assert_eq!(r.order, Some(2));
        assert!(r.elements[1].exact_eq(&Matrix2::scalar(Scalar::int(-1))));
    }

    #[test]
    fn cap_overflow() {
        let r = group_closure_of(&[Orthogonal::rotation(Rotation::turns(1, 10))], 5);
        assert_eq!(r.classification, GroupClass::PresumedInfinite);
        assert_eq!(r.contains_irrational_rotation, IrrationalRotation::No);
        assert_eq!(group_closure_of(&[Orthogonal::rotation(Rotation::turns(1, 10))], 10).order, Some(10));
    }
}
