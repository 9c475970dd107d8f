//! Acceptance suite: one line per criterion, PASS or FAIL, with timings.
//! Runs as a plain binary so the lines show without `--nocapture`.
//! Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fractembed::embed::{
    bb_search, iterate_rescale_sequence, restrict_map_rescale, structure_find, verify_containment, verify_with,
    LimitClass, ParamBox, SearchOptions, VerdictStatus, VerifyMode, VerifyOptions,
};
use fractembed::group::{group_closure_of, GroupClass};
use fractembed::ifs::{
    hausdorff_distance, presets, similarity_dimension, AffineMap2, BoxCover, CylinderWord, Ifs, Orthogonal, Rotation,
    Similarity2,
};
use fractembed::measure::{
    dimension_conservation_check, entropy_dimension, entropy_dimension_of, DyadicMeasure, SelfSimilarMeasure,
};
use fractembed::numerics::{eigen_analyze, rational_exponent, Diagonalizable, Interval, Scalar, Vector2};
use fractembed::slice::{gdifs_dimension, project_gdifs, slice_cover, sn_number, wsc_test, AffineLine, WscVerdict};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const LOG2_3: f64 = 0.630_929_753_571_457_4;

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn timed<T>(budget: f64, what: &str, f: impl FnOnce() -> Result<T, String>) -> Result<(T, f64), String> {
    let t0 = Instant::now();
    let v = f()?;
    let s = t0.elapsed().as_secs_f64();
    ensure!(s < budget, "{what} took {s:.1}s, budget {budget}s");
    Ok((v, s))
}

fn c1() -> Outcome {
    let (d1, t1) = timed(1.0, "C×C", || Ok(similarity_dimension(&presets::cxc())))?;
    let (d2, t2) = timed(1.0, "C×[0,1]", || Ok(similarity_dimension(&presets::c_times_interval())))?;
    ensure!(presets::c_times_interval().len() == 6, "C×[0,1] fixture has {} maps", presets::c_times_interval().len());
    ensure!((d1 - 4f64.ln() / 3f64.ln()).abs() < 1e-9, "C×C: {d1}");
    ensure!((d2 - 6f64.ln() / 3f64.ln()).abs() < 1e-9, "C×[0,1]: {d2}");
    Ok(format!("dim C×C = {d1:.12} ({t1:.3}s), dim C×[0,1] = {d2:.12} ({t2:.3}s)"))
}

fn c2() -> Outcome {
    let e = presets::cxc();
    let g = AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)]);
    let (v, t1) = timed(10.0, "g₁^{1,2}", || verify_containment(&g, &e, &e, 1.0 / 1024.0).map_err(err))?;
    ensure!(v.is_certified() && v.eps == 0.0, "g₁^(1,2): {:?} at eps {}", v.status, v.eps);
    let cert = v.symbolic_certificate.as_ref().ok_or("no symbolic certificate")?;
    ensure!(cert.check(&e, &e), "certificate does not re-check");
    let h = AffineMap2::ratios([(1, 2), (0, 1), (0, 1), (1, 2), (0, 1), (0, 1)]);
    let (r, t2) = timed(10.0, "(x/2, y/2)", || verify_containment(&h, &e, &e, 1.0 / 1024.0).map_err(err))?;
    ensure!(r.status == VerdictStatus::Refuted, "(x/2, y/2): {:?}", r.status);
    let w = r.witness.as_ref().ok_or("refutation without witness")?;
    ensure!(w.distance_lower >= 0.2, "witness gap {}", w.distance_lower);
    Ok(format!(
        "certified with {} maps ({t1:.2}s); refuted with gap {:.4} ≥ 0.2 ({t2:.2}s)",
        cert.maps.len(),
        w.distance_lower
    ))
}

fn c3() -> Outcome {
    let e = presets::cxc();
    let third = Scalar::ratio(1, 3);
    let boxes = [
        ("diagonal", ParamBox::affine([[0.05, 0.5], [0.0, 0.0], [0.0, 0.0], [0.05, 0.5], [0.0, 0.0], [0.0, 0.0]])),
        ("similarity", ParamBox::similarity([0.05, 0.5], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0])),
    ];
    let mut notes = Vec::new();
    for (name, pb) in boxes {
        let opts = SearchOptions { node_cap: 100_000, ..SearchOptions::new(1.0 / 256.0) };
        let (r, t) = timed(60.0, name, || bb_search(&e, &e, &pb, &opts).map_err(err))?;
        let mut certified = 0;
        for h in r.certified() {
            certified += 1;
            let eig = eigen_analyze(&h.center.linear).map_err(err)?;
            for m in &eig.moduli {
                let x = rational_exponent(m, &third, 64, 1e-6).map_err(err)?;
                ensure!(
                    matches!(x.exponent, Some((_, 1))),
                    "{name}: map {:?} has exponent {:?} (value {})",
                    h.center.coefficients(),
                    x.exponent,
                    x.value
                );
            }
        }
        ensure!(certified > 0, "{name}: nothing certified");
        notes.push(format!("{name}: {certified} certified, {} nodes, {t:.1}s", r.nodes));
    }
    Ok(format!("all eigen-exponents integral w.r.t. λ = 1/3; {}", notes.join("; ")))
}

fn c4() -> Outcome {
    let f = presets::c_times_interval();
    let g = AffineMap2::ratios([(1, 3), (0, 1), (1, 4), (1, 3), (0, 1), (0, 1)]);
    let opts = VerifyOptions { mode: VerifyMode::Numeric, ..Default::default() };
    let ((v, eig), t) = timed(30.0, "shear", || {
        let v = verify_with(&g, &f, &f, 2f64.powi(-10), &opts).map_err(err)?;
        Ok((v, eigen_analyze(&g.linear).map_err(err)?))
    })?;
    ensure!(v.is_certified(), "shear: {:?}", v.status);
    ensure!(eig.diagonalizable == Diagonalizable::No, "diagonalizable = {:?}", eig.diagonalizable);
    Ok(format!("certified at eps 2^-10 over {} boxes; diagonalizable = no ({t:.1}s)", v.source_boxes))
}

fn c5() -> Outcome {
    let f = presets::cxc();
    let g = AffineMap2::ratios([(-1, 3), (0, 1), (0, 1), (-1, 3), (1, 3), (1, 3)]);
    let (sol, t) = timed(5.0, "structure_find", || structure_find(&g, &f, 4, 3).map_err(err))?;
    let sol = sol.ok_or("no solution")?;
    let j = CylinderWord::from_slice(&[presets::cxc_index(0, 0), presets::cxc_index(2, 2)]);
    ensure!(sol.k == 2 && sol.target == j, "got k = {}, I = {}, J = {}", sol.k, sol.source, sol.target);
    ensure!(sol.holds(&g, &f), "equation does not hold exactly");
    Ok(format!("k = 2, I = {}, J = {} = ((0,0),(2,2)) ({t:.2}s)", sol.source, sol.target))
}

fn c6() -> Outcome {
    let t0 = Instant::now();
    let c = entropy_dimension(&SelfSimilarMeasure::natural(presets::cantor()), 8, 20).map_err(err)?;
    ensure!((c.estimate - LOG2_3).abs() < 0.02, "Cantor estimate {}", c.estimate);
    let cc = entropy_dimension(&SelfSimilarMeasure::natural(presets::cxc()), 8, 14).map_err(err)?;
    ensure!((cc.estimate - 2.0 * LOG2_3).abs() < 0.04, "C×C estimate {}", cc.estimate);
    let mut leb = Vec::new();
    for dim in [1u8, 2] {
        let m = DyadicMeasure::lebesgue(dim, 12).map_err(err)?;
        let d = entropy_dimension_of(&m, 4, 12).map_err(err)?;
        ensure!((d.estimate - dim as f64).abs() < 1e-6, "Lebesgue dim {dim}: {}", d.estimate);
        leb.push(d.estimate);
    }
    let sq = entropy_dimension(&SelfSimilarMeasure::uniform(presets::unit_square()), 4, 10).map_err(err)?;
    ensure!((sq.estimate - 2.0).abs() < 1e-6, "unit square {}", sq.estimate);
    let s = t0.elapsed().as_secs_f64();
    ensure!(s < 120.0, "took {s:.1}s");
    Ok(format!(
        "Cantor {:.4} (Δ {:.4}), C×C {:.4} (Δ {:.4}), Lebesgue {:?}, square {:.8} ({s:.1}s)",
        c.estimate,
        (c.estimate - LOG2_3).abs(),
        cc.estimate,
        (cc.estimate - 2.0 * LOG2_3).abs(),
        leb,
        sq.estimate
    ))
}

fn c7() -> Outcome {
    let m = SelfSimilarMeasure::natural(presets::cxc());
    let (r, t) = timed(60.0, "conservation", || dimension_conservation_check(&m, 8, 14, 8, 11).map_err(err))?;
    ensure!(r.residual.abs() < 0.05, "residual {}", r.residual);
    Ok(format!(
        "dim P₁μ {:.4} + fibre {:.4} − dim μ {:.4} = {:+.4} ({t:.1}s)",
        r.projection.estimate, r.fiber_mean, r.total.estimate, r.residual
    ))
}

fn c8() -> Outcome {
    let ((s, sn), t) = timed(30.0, "slice", || {
        let s = slice_cover(&presets::cxc(), &AffineLine::vertical(Scalar::zero()), 12).map_err(err)?;
        Ok((s, sn_number(10).map_err(err)?))
    })?;
    let e = s.exponent.ok_or("no exponent")?;
    let upper = s.exponent_upper.ok_or("no upper exponent")?;
    ensure!((e - LOG2_3).abs() < 0.05, "exponent {e}");
    ensure!(upper < sn, "largest generation ratio {upper} ≥ s_10 = {sn}");
    Ok(format!("exponent {e:.6}, max ratio {upper:.6} < s_10 = {sn:.6} ({t:.2}s)"))
}

fn c9() -> Outcome {
    let e1 = [Scalar::one(), Scalar::zero()];
    let ((d, hd, hg), t) = timed(5.0, "projection", || {
        let g = project_gdifs(&presets::cxc(), &e1).map_err(err)?;
        let d = gdifs_dimension(&g, true).map_err(err)?;
        let hg = project_gdifs(&presets::half_turn(), &e1).map_err(err)?;
        let hd = gdifs_dimension(&hg, true).map_err(err)?;
        Ok((d, hd, hg))
    })?;
    ensure!((d.s - LOG2_3).abs() < 1e-6, "C×C projection s = {}", d.s);
    ensure!(hg.vertices.len() == 2 && hg.strongly_connected, "half turn: {} vertices", hg.vertices.len());
    let vd = &hd.vertex_dimensions;
    ensure!((vd[0] - vd[1]).abs() < 1e-9, "vertex dimensions {vd:?}");
    Ok(format!("s = {:.9}; half turn: 2 vertices, strongly connected, dims {vd:?} ({t:.2}s)", d.s))
}

fn line(maps: &[((i64, i64), (i64, i64))]) -> Ifs {
    let maps = maps
        .iter()
        .map(|&((an, ad), (bn, bd))| Similarity2::homothety(Scalar::ratio(an, ad), Vector2::ratio(bn, bd, 0, 1)).unwrap())
        .collect();
    Ifs::new("line", maps).unwrap()
}

fn c10() -> Outcome {
    let t0 = Instant::now();
    let g = project_gdifs(&presets::cxc(), &[Scalar::one(), Scalar::zero()]).map_err(err)?;
    let psi = g.line_ifs(true).map_err(err)?;
    let a = wsc_test(&psi, 6, 0.01).map_err(err)?;
    ensure!(a.verdict == WscVerdict::WscEvidence, "projected C×C: {:?}", a.verdict);
    ensure!(a.min_gap_exact == Some(Scalar::int(2)), "min gap {:?}", a.min_gap_exact);
    ensure!(a.exact_overlap_classes == 2, "{} exact-overlap classes", a.exact_overlap_classes);
    let b = wsc_test(&line(&[((1, 2), (0, 1)), ((1, 3), (2, 3))]), 8, 0.01).map_err(err)?;
    let table: Vec<String> =
        b.gap_table.iter().map(|(d, g)| format!("{d}:{}", g.map_or("-".into(), |g| format!("{g:.4}")))).collect();
    let s = t0.elapsed().as_secs_f64();
    ensure!(s < 30.0, "took {s:.1}s");
    ensure!(
        b.verdict == WscVerdict::ViolationEvidence,
        "{{x/2, x/3+2/3}} depth 8: {:?}, min gap {:.4}, per-depth minima [{}]",
        b.verdict,
        b.min_gap,
        table.join(" ")
    );
    Ok(format!("projected C×C gap 2 with 2 overlap classes; {{x/2, x/3+2/3}} violation [{}] ({s:.1}s)", table.join(" ")))
}

// --- criterion 11: property batch ---------------------------------------

fn random_points(rng: &mut ChaCha8Rng) -> BoxCover {
    let n = rng.random_range(1..12);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    BoxCover::from_points(&pts)
}

fn hausdorff_axioms(rng: &mut ChaCha8Rng) -> Outcome {
    for i in 0..500 {
        let (a, b, c) = (random_points(rng), random_points(rng), random_points(rng));
        let d = |x: &BoxCover, y: &BoxCover| hausdorff_distance(x, y).unwrap();
        ensure!(d(&a, &a).lo() == 0.0, "triple {i}: d(A, A) = {}", d(&a, &a));
        let (ab, ba) = (d(&a, &b), d(&b, &a));
        ensure!(ab.intersects(&ba), "triple {i}: d(A,B) = {ab}, d(B,A) = {ba}");
        ensure!(ab.hi() >= 0.0, "triple {i}: negative distance");
        let (bc, ac) = (d(&b, &c), d(&a, &c));
        ensure!(ac.lo() <= ab.hi() + bc.hi(), "triple {i}: triangle {ac} > {ab} + {bc}");
    }
    Ok("500 triples".into())
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn contains_exact(iv: Interval, r: &BigRational) -> bool {
    exact(iv.lo()) <= *r && *r <= exact(iv.hi())
}

fn interval_soundness(rng: &mut ChaCha8Rng) -> Outcome {
    for i in 0..10_000 {
        let scale = 10f64.powi(rng.random_range(-6..6));
        let (x, y) = (rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale);
        let (ix, iy) = (Interval::point(x), Interval::point(y));
        let (ex, ey) = (exact(x), exact(y));
        let (name, iv, want) = match i % 5 {
            0 => ("+", ix + iy, &ex + &ey),
            1 => ("-", ix - iy, &ex - &ey),
            2 => ("*", ix * iy, &ex * &ey),
            3 if !ey.is_zero() => ("/", ix / iy, &ex / &ey),
            _ => ("sqr", ix.sqr(), &ex * &ex),
        };
        ensure!(contains_exact(iv, &want), "op {i}: {x:e} {name} {y:e} = {want} not in {iv}");
        let s = Interval::point(x.abs()).sqrt();
        ensure!(
            exact(s.lo()) * exact(s.lo()) <= exact(x.abs()) && exact(x.abs()) <= exact(s.hi()) * exact(s.hi()),
            "op {i}: sqrt({}) not enclosed by {s}",
            x.abs()
        );
    }
    Ok("10⁴ ops".into())
}

fn random_measure(rng: &mut ChaCha8Rng, depth: usize) -> DyadicMeasure {
    let cells = rng.random_range(1..20);
    let mut m = BTreeMap::new();
    for _ in 0..cells {
        let x = rng.random_range(0..(1i64 << depth));
        *m.entry([x, 0]).or_insert(0.0) += rng.random_range(0.01..1.0);
    }
    let total: f64 = m.values().sum();
    m.values_mut().for_each(|v| *v /= total);
    DyadicMeasure::new(1, depth, m).unwrap()
}

fn entropy_additivity(rng: &mut ChaCha8Rng) -> Outcome {
    for i in 0..50 {
        let depth = rng.random_range(3..9);
        let (mu, nu) = (random_measure(rng, depth), random_measure(rng, depth));
        let p = mu.product(&nu).map_err(err)?;
        for k in 1..=depth {
            let (h, a, b) = (p.shannon(k).unwrap(), mu.shannon(k).unwrap(), nu.shannon(k).unwrap());
            ensure!((h - a - b).abs() < 1e-9, "measure {i}, level {k}: {h} ≠ {a} + {b}");
        }
    }
    Ok("50 products".into())
}

fn rescale_recertifies() -> Outcome {
    let f = presets::cxc();
    let maps = [
        AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)]),
        AffineMap2::ratios([(1, 9), (0, 1), (0, 1), (1, 3), (0, 1), (0, 1)]),
        AffineMap2::ratios([(-1, 3), (0, 1), (0, 1), (-1, 3), (1, 3), (1, 3)]),
        AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 3), (2, 3), (0, 1)]),
        AffineMap2::ratios([(1, 9), (0, 1), (0, 1), (1, 9), (2, 9), (2, 3)]),
    ];
    let words: [&[u8]; 4] = [&[0], &[3], &[1, 2], &[2, 1, 0]];
    let mut n = 0;
    for (gi, g) in maps.iter().enumerate() {
        ensure!(verify_containment(g, &f, &f, 1e-3).map_err(err)?.is_certified(), "fixture map {gi} not an embedding");
        for w in words {
            let r = restrict_map_rescale(g, &f, &f, &CylinderWord::from_slice(w), None, 1e-3).map_err(err)?;
            let again = verify_containment(&r.map, &f, &f, 1e-3).map_err(err)?;
            ensure!(again.is_certified(), "map {gi}, word {w:?}: rescaled map {:?}", again.status);
            n += 1;
        }
    }
    Ok(format!("{n} fixtures"))
}

fn planted_search() -> Outcome {
    let f = presets::cxc();
    let mut n = 0;
    for len in 1..=2 {
        for w in CylinderWord::all_of_length(4, len) {
            let m = f.compose_word(w.as_slice());
            let c = m.coefficients();
            let (s, tx, ty) = (c[0], c[4], c[5]);
            let pb = ParamBox::similarity([s * 0.9, s * 1.1], [0.0, 0.0], [tx - 0.03, tx + 0.03], [ty - 0.03, ty + 0.03]);
            let r = bb_search(&f, &f, &pb, &SearchOptions::new(1.0 / 256.0)).map_err(err)?;
            ensure!(r.certified().any(|h| h.center.exact_eq(&m)), "planted {w} not recovered ({} hits)", r.hits.len());
            n += 1;
        }
    }
    Ok(format!("{n} planted maps"))
}

fn group_monotone(rng: &mut ChaCha8Rng) -> Outcome {
    let caps = [1usize, 2, 4, 8, 16, 64, 4096];
    for i in 0..30 {
        let k = rng.random_range(1..4);
        let gens: Vec<Orthogonal> = (0..k)
            .map(|_| {
                let q = rng.random_range(1..13);
                let p = rng.random_range(0..q);
                Orthogonal { rotation: Rotation::turns(p, q), reflect: rng.random_bool(0.3) }
            })
            .collect();
        let mut first_finite: Option<(usize, usize)> = None;
        for &cap in &caps {
            let r = group_closure_of(&gens, cap);
            match (first_finite, r.order) {
                (Some((c0, n0)), Some(n)) => ensure!(n == n0, "set {i}: order {n0} at cap {c0}, {n} at cap {cap}"),
                (Some((c0, _)), None) => return Err(format!("set {i}: finite at cap {c0}, not at cap {cap}")),
                (None, Some(n)) => {
                    ensure!(r.classification == GroupClass::Finite && n <= cap, "set {i}: order {n} above cap {cap}");
                    first_finite = Some((cap, n));
                }
                (None, None) => {}
            }
        }
        ensure!(first_finite.is_some(), "set {i}: rational rotations never closed");
    }
    let irrational = [Orthogonal {
        rotation: Rotation::Cosine { cos: BigRational::new(3.into(), 5.into()), sin_positive: true },
        reflect: false,
    }];
    ensure!(caps.iter().all(|&c| group_closure_of(&irrational, c).order.is_none()), "3-4-5 rotation closed");
    Ok("30 rotation sets".into())
}

fn c11() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let parts = [
        ("hausdorff", hausdorff_axioms(&mut rng)?),
        ("interval", interval_soundness(&mut rng)?),
        ("entropy", entropy_additivity(&mut rng)?),
        ("rescale", rescale_recertifies()?),
        ("bb_search", planted_search()?),
        ("group", group_monotone(&mut rng)?),
    ];
    let s = t0.elapsed().as_secs_f64();
    ensure!(s < 600.0, "batch took {s:.1}s");
    Ok(format!("{} ({s:.1}s)", parts.iter().map(|(n, d)| format!("{n}: {d}")).collect::<Vec<_>>().join(", ")))
}

fn c12() -> Outcome {
    let f = presets::cxc();
    let g = AffineMap2::ratios([(1, 3), (0, 1), (0, 1), (1, 9), (0, 1), (0, 1)]);
    let phi = f.affine(0).clone();
    let ((a, b), t) = timed(30.0, "iterate_rescale", || {
        Ok((
            iterate_rescale_sequence(&g, &f, 12, 1e-3).map_err(err)?,
            iterate_rescale_sequence(&phi, &f, 12, 1e-3).map_err(err)?,
        ))
    })?;
    match &a.limit_class {
        LimitClass::Rank1 { kernel } => {
            ensure!(kernel[0].abs() < 1e-9 && (kernel[1].abs() - 1.0).abs() < 1e-9, "kernel {kernel:?}")
        }
        other => return Err(format!("(x/3, y/9): {other:?}")),
    }
    ensure!(matches!(b.limit_class, LimitClass::Similarity { .. }), "φ₁: {:?}", b.limit_class);
    Ok(format!("(x/3, y/9) → rank 1, kernel = y-axis; φ₁ → {:?} ({t:.2}s)", b.limit_class))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "similarity dimension", c1),
        (2, "embedding certification", c2),
        (3, "eigenvalue rationality", c3),
        (4, "counterexample fidelity", c4),
        (5, "structure equation", c5),
        (6, "entropy dimension", c6),
        (7, "dimension conservation", c7),
        (8, "slice gap", c8),
        (9, "GD-IFS projection", c9),
        (10, "WSC suite", c10),
        (11, "property suites", c11),
        (12, "rank-1 limit extraction", c12),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    let t0 = Instant::now();
    for (n, title, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let dt = t.elapsed();
        match out {
            Ok(detail) => println!("criterion {n:>2} PASS  {title} [{}] — {detail}", secs(dt)),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {title} [{}] — {why}", secs(dt));
                failed.push(n);
            }
        }
    }
    println!("acceptance: {} failed {:?} in {}", failed.len(), failed, secs(t0.elapsed()));
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
