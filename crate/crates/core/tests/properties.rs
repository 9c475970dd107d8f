//! Randomised invariants spanning several modules. Single-module properties
//! (interval soundness, eigen similarity, Hausdorff axioms) live next to
//! their code.

use fractembed::embed::{structure_find, verify_containment, VerdictStatus};
use fractembed::group::group_closure_of;
use fractembed::ifs::{
    anchors, attractor_cover, hausdorff_distance, neighbor_count, presets, stopping_family, AffineMap2, CylinderWord,
    Ifs, Orthogonal, Rect, Rotation, Similarity2,
};
use fractembed::measure::{discretize, DyadicMeasure, SelfSimilarMeasure};
use fractembed::numerics::{Interval, Matrix2, Scalar, Vector2};
use fractembed::slice::{approx_slices, gdifs_dimension, project_gdifs, psi_xr_count, slice_cover, AffineLine};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn fixture(i: usize) -> Ifs {
    [presets::cantor(), presets::cxc(), presets::c_times_interval(), presets::half_turn()][i % 4].clone()
}

/// `Σ dᵢ 3⁻ⁱ` with digits in {0, 2}: an exact point of the Cantor set.
fn cantor_point(digits: &[bool]) -> Scalar {
    let mut x = Scalar::zero();
    let mut p = Scalar::one();
    for &d in digits {
        p = &p * &Scalar::ratio(1, 3);
        if d {
            x = &x + &(&p * &Scalar::int(2));
        }
    }
    x
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deeper_covers_refine_shallower(i in 0usize..4, n in 1usize..5) {
        let f = fixture(i);
        let (a, b) = (attractor_cover(&f, n).unwrap(), attractor_cover(&f, n + 1).unwrap());
        for child in &b.boxes {
            let parent = a.boxes.iter().find(|p| child.word.starts_with(&p.word)).expect("parent word");
            prop_assert!(parent.rect.inflate(1e-12).contains_rect(&child.rect), "{} ⊄ {}", child.word, parent.word);
        }
        let d = hausdorff_distance(&a, &b).unwrap();
        let bound = 2.0 * a.bounding_radius * f.alpha_max().powi(n as i32);
        prop_assert!(d.lo() <= bound, "d = {d}, bound {bound}");
    }

    #[test]
    fn stopping_families_are_prefix_free_covers(i in 0usize..4, q in 4i64..100) {
        let f = fixture(i);
        let fam = stopping_family(&f, &Scalar::ratio(1, q)).unwrap();
        for (k, w) in fam.iter().enumerate() {
            for v in &fam[k + 1..] {
                prop_assert!(!v.starts_with(w) && !w.starts_with(v), "{w} and {v}");
            }
        }
        let rects: Vec<Rect> = fam.iter().map(|w| f.cylinder_rect(w)).collect();
        for a in anchors(&f, 3).unwrap() {
            let p = Rect::from_point(&a.point);
            prop_assert!(rects.iter().any(|r| r.inflate(1e-12).contains_rect(&p)), "anchor {:?} uncovered", a.point);
        }
    }

    #[test]
    fn finite_groups_are_groups(raw in prop::collection::vec((0i64..12, 1i64..13, any::<bool>()), 1..4)) {
        let gens: Vec<Orthogonal> =
            raw.iter().map(|&(p, q, reflect)| Orthogonal { rotation: Rotation::turns(p % q, q), reflect }).collect();
        let r = group_closure_of(&gens, 4096);
        prop_assert!(r.is_finite());
        let el = &r.elements;
        prop_assert_eq!(r.order, Some(el.len()));
        // thirds and sixths of a turn carry √3, so compare with a tolerance
        let has = |m: &Matrix2| {
            el.iter().any(|e| e.to_f64().iter().zip(m.to_f64()).all(|(x, y)| (x - y).abs() < 1e-9))
        };
        prop_assert!(has(&Matrix2::identity()));
        for a in el {
            prop_assert!(has(&a.inverse().unwrap()));
            for b in el {
                prop_assert!(has(&(a * b)));
            }
        }
        if gens.iter().all(|g| !g.reflect) {
            // a rotation by p/q turns has order q/gcd(p, q)
            let lcm = raw.iter().fold(1usize, |acc, &(p, q, _)| {
                let d = (q / gcd(p as usize % q as usize, q as usize) as i64) as usize;
                acc / gcd(acc, d) * d
            });
            prop_assert_eq!(el.len(), lcm);
        }
    }

    #[test]
    fn structure_solutions_are_exact(w in prop::collection::vec(0u8..4, 1..3), flip in any::<bool>()) {
        let f = presets::cxc();
        let mut g = f.compose_word(&w);
        if flip {
            // a half turn of the unit square keeps C×C invariant
            let h = AffineMap2::ratios([(-1, 1), (0, 1), (0, 1), (-1, 1), (1, 1), (1, 1)]);
            g = g.compose(&h);
        }
        if let Some(s) = structure_find(&g, &f, 3, 3).unwrap() {
            let lhs = g.pow(s.k as u32).compose(&f.compose_word(s.source.as_slice()));
            prop_assert!(lhs.exact_eq(&f.compose_word(s.target.as_slice())));
            prop_assert!(s.holds(&g, &f));
        }
    }

    #[test]
    fn certified_maps_recertify_at_half_resolution(w in prop::collection::vec(0u8..4, 0..3)) {
        let f = presets::cxc();
        let g = f.compose_word(&w);
        let v = verify_containment(&g, &f, &f, 1.0 / 64.0).unwrap();
        prop_assert!(v.is_certified());
        prop_assert!(verify_containment(&g, &f, &f, 1.0 / 128.0).unwrap().is_certified());
    }

    #[test]
    fn refutation_witnesses_are_far_from_the_cover(a in 2i64..6, tx in 0i64..4, ty in 0i64..4) {
        let f = presets::cxc();
        let g = AffineMap2::ratios([(1, a), (0, 1), (0, 1), (1, a), (tx, 4), (ty, 4)]);
        let eps = 1.0 / 256.0;
        let v = verify_containment(&g, &f, &f, eps).unwrap();
        if v.status == VerdictStatus::Refuted {
            let w = v.witness.expect("refutations carry a witness");
            let src = Vector2::new(w.source[0].clone(), w.source[1].clone());
            let img = g.apply(&src);
            prop_assert!(img.exact_eq(&Vector2::new(w.image[0].clone(), w.image[1].clone())));
            let p = Rect::from_point(&[w.image[0].to_interval(), w.image[1].to_interval()]);
            let cover = attractor_cover(&f, 6).unwrap();
            let d = cover.boxes.iter().map(|b| p.dist(&b.rect).lo()).fold(f64::INFINITY, f64::min);
            prop_assert!(d > eps && d >= w.distance_lower - 1e-12, "cover distance {d}, claimed {}", w.distance_lower);
        }
    }

    #[test]
    fn discretized_mass_is_one(i in 0usize..3, raw in prop::collection::vec(0.05f64..1.0, 6), depth in 4usize..9) {
        let f = fixture(i);
        let w: Vec<f64> = raw[..f.len()].iter().map(|x| x / raw[..f.len()].iter().sum::<f64>()).collect();
        let m = discretize(&SelfSimilarMeasure::new(f, w).unwrap(), depth).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((m.coarsen(depth / 2).unwrap().total_mass() - 1.0).abs() < 1e-12);
        if m.dim == 1 {
            prop_assert!((m.product(&m).unwrap().total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_grows_with_level(cells in prop::collection::btree_map((0i64..256, 0i64..256), 0.01f64..1.0, 1..40)) {
        let total: f64 = cells.values().sum();
        let cells: BTreeMap<[i64; 2], f64> = cells.iter().map(|(&(x, y), &m)| ([x, y], m / total)).collect();
        let m = DyadicMeasure::new(2, 8, cells).unwrap();
        let h: Vec<f64> = (0..=8).map(|k| m.shannon(k).unwrap()).collect();
        prop_assert!(h.windows(2).all(|p| p[1] >= p[0] - 1e-12), "{h:?}");
    }

    #[test]
    fn dyadic_scaling_shifts_levels(cells in prop::collection::btree_map(0i64..64, 0.01f64..1.0, 1..20), t in 1i32..4) {
        let total: f64 = cells.values().sum();
        let cells: BTreeMap<[i64; 2], f64> = cells.iter().map(|(&x, &m)| ([x, 0], m / total)).collect();
        let m = DyadicMeasure::new(1, 6, cells).unwrap();
        let s = m.scale_pow2(-t).unwrap();
        for n in t as usize..=s.depth {
            prop_assert!((s.shannon(n).unwrap() - m.shannon(n - t as usize).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_dimension_bounds(
        q in 3i64..6,
        ts in prop::collection::vec((0i64..8, 0i64..8), 2..5),
        dir in (1i64..4, 0i64..4),
    ) {
        let maps: Vec<Similarity2> = ts
            .iter()
            .map(|&(x, y)| Similarity2::homothety(Scalar::ratio(1, q), Vector2::ratio(x, 8, y, 8)).unwrap())
            .collect();
        let f = Ifs::new("random", maps).unwrap();
        let g = project_gdifs(&f, &[Scalar::int(dir.0), Scalar::int(dir.1)]).unwrap();
        let (d, raw) = (gdifs_dimension(&g, true).unwrap(), gdifs_dimension(&g, false).unwrap());
        prop_assert!(d.s <= raw.s + 1e-12);
        prop_assert!(d.s > 0.0 && d.dimension_bound > 0.0 && d.dimension_bound <= 1.0);
        prop_assert!(raw.dimension_bound <= 1.0 && d.dimension_bound <= raw.dimension_bound);
    }

    #[test]
    fn approx_slices_converge(digits in prop::collection::vec(any::<bool>(), 1..6), n in 2usize..6) {
        let f = presets::cxc();
        let x = cantor_point(&digits);
        let s = approx_slices(&f, n, &x).unwrap();
        prop_assert!(s.p >= 1);
        let exact = slice_cover(&f, &AffineLine::vertical(x.clone()), 12).unwrap();
        let mut fine = exact.cover.clone();
        for b in &mut fine.boxes {
            b.rect.x = Interval::point(x.to_f64());
        }
        let d = hausdorff_distance(&s.union(), &fine).unwrap();
        let bound = 3f64.powi(-(n as i32)) * f.diameter() + fine.max_diam();
        prop_assert!(d.lo() <= bound, "n = {n}: {d} > {bound}");
    }

    #[test]
    fn psi_counts_are_bounded(digits in prop::collection::vec(any::<bool>(), 1..8)) {
        let psi = project_gdifs(&presets::cxc(), &[Scalar::one(), Scalar::zero()]).unwrap().line_ifs(false).unwrap();
        let x = cantor_point(&digits);
        for k in 3..=10 {
            // the cylinder holding x plus at most one touching neighbour on each side
            let n = psi_xr_count(&psi, &x, &Scalar::ratio(1, 3i64.pow(k))).unwrap();
            prop_assert!((1..=3).contains(&n), "k = {k}: {n}");
        }
    }
}

#[test]
fn psi_count_maxima_stabilise() {
    let psi = project_gdifs(&presets::cxc(), &[Scalar::one(), Scalar::zero()]).unwrap().line_ifs(false).unwrap();
    // every digit pattern of length 6, then one trailing 2 at each depth up to 11
    let mut points: Vec<Scalar> =
        (0..64u32).map(|b| cantor_point(&(0..6).map(|i| b >> i & 1 == 1).collect::<Vec<_>>())).collect();
    points.extend((1..=11).map(|j| cantor_point(&(1..=j).map(|i| i == j).collect::<Vec<_>>())));
    let maxima: Vec<usize> = (3..=10)
        .map(|k| {
            let r = Scalar::ratio(1, 3i64.pow(k));
            points.iter().map(|x| psi_xr_count(&psi, x, &r).unwrap()).max().unwrap()
        })
        .collect();
    assert!(maxima.iter().all(|&m| m == maxima[0]), "{maxima:?}");
}

#[test]
fn neighbour_counts_are_uniformly_bounded() {
    let f = presets::cxc();
    let maxima: Vec<usize> = (1..=4)
        .map(|k| {
            let r = Scalar::ratio(1, 3i64.pow(k) + 1);
            let fam = stopping_family(&f, &r).unwrap();
            fam.iter().map(|w| neighbor_count(&f, &r, w).unwrap()).max().unwrap()
        })
        .collect();
    assert!(maxima[1..].iter().all(|&m| m == maxima[1]), "{maxima:?}");
}

#[test]
fn every_cylinder_word_has_a_parent() {
    let f = presets::cxc();
    let c = attractor_cover(&f, 3).unwrap();
    assert!(c.boxes.iter().all(|b| b.word.len() == 3));
    assert_eq!(CylinderWord::all_of_length(4, 3).count(), c.len());
}
