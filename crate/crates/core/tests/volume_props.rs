use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sadic_core::linalg::{q, qi, QMat};
use sadic_core::padic::{smallest_nonresidue, valuation, wedge_valuation_rational, PadicNumber};
use sadic_core::qform::{standard_gram, FiniteRegion, PadicInterval, Place, QuadraticFormP, RealRegion};
use sadic_core::volume::{
    j_kernel, lambda_inf, lambda_p, orbit_volume, variety_volume, volume_inf, volume_p, McConfig, PadicBox, Variety,
};
use std::f64::consts::PI;
use std::sync::Arc;

fn pow(p: u64, e: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p)).pow(e as i32)
}

fn standard_forms(p: u64, n: usize) -> Vec<QuadraticFormP> {
    let u = smallest_nonresidue(p) as i64;
    let choices = [1i64, p as i64, u, p as i64 * u];
    let mut out = Vec::new();
    let mut idx = vec![0usize; n - 2];
    loop {
        let coeffs: Vec<i64> = idx.iter().map(|&i| choices[i]).collect();
        out.push(QuadraticFormP::from_rational(Place::P(p), standard_gram(&coeffs)).unwrap());
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn cone(f: &QuadraticFormP) -> Variety {
    Variety::Quadric { form: f.clone(), value: qi(0), primitive: true, region: None }
}

fn int_gram(f: &QuadraticFormP) -> Vec<Vec<i64>> {
    // 2B is integral for the forms used here
    f.exact()
        .unwrap()
        .iter()
        .map(|r| r.iter().map(|x| (x * qi(2)).to_integer().try_into().unwrap()).collect())
        .collect()
}

/// `#{x mod p^ℓ primitive : some lift mod p^{ℓ+2} is a zero of q}`, by enumeration.
fn brute_cone_image(f: &QuadraticFormP, p: u64, l: u32) -> u64 {
    let g2 = int_gram(f);
    let n = g2.len();
    let big = (p as i64).pow(l + 2);
    let small = (p as i64).pow(l);
    let mut seen = std::collections::HashSet::new();
    let total = (big as u64).pow(n as u32);
    let mut x = vec![0i64; n];
    for _ in 0..total {
        if x.iter().any(|c| c % p as i64 != 0) {
            let mut s = 0i64;
            for i in 0..n {
                for j in 0..n {
                    s += g2[i][j] * x[i] * x[j];
                }
            }
            // 2q(x) ≡ 0
            if s.rem_euclid(big) == 0 {
                seen.insert(x.iter().map(|c| c % small).collect::<Vec<_>>());
            }
        }
        for c in x.iter_mut() {
            *c += 1;
            if *c < big {
                break;
            }
            *c = 0;
        }
    }
    seen.len() as u64
}

#[test]
fn cone_images_match_enumeration() {
    for (p, n, l) in [(3u64, 3usize, 1u32), (3, 3, 2), (5, 3, 1), (3, 4, 1)] {
        for f in standard_forms(p, n) {
            let c = variety_volume(&cone(&f), n - 1, l).unwrap();
            assert_eq!(c.count, BigInt::from(brute_cone_image(&f, p, l)), "p = {}, gram {:?}", p, f.exact());
        }
    }
}

#[test]
fn cone_counts_stabilise_on_standard_forms() {
    for p in [3u64, 5] {
        for n in [3usize, 4] {
            for f in standard_forms(p, n) {
                let vals: Vec<BigRational> =
                    (1..=4).map(|l| variety_volume(&cone(&f), n - 1, l).unwrap().normalized).collect();
                assert!(vals.windows(2).all(|w| w[0] == w[1]), "p = {}, gram {:?}: {:?}", p, f.exact(), vals);
                assert_eq!(vals[0], orbit_volume(&f).unwrap().value);
                // one regular residue point already contributes (1 - 1/p) p^{-(n-1)}
                assert!(vals[0] >= (qi(1) - q(1, p as i64)) * pow(p, -(n as i64 - 1)));
            }
        }
    }
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-9i64..10, prop::sample::select(vec![1i64, 1, 1, 3, 5, 9])).prop_map(|(a, b)| q(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn parallelepiped_volume_is_wedge_norm(
        p in prop::sample::select(vec![3u64, 5]),
        n in 1usize..4,
        dd in 0usize..3,
        entries in prop::collection::vec(small_rational(), 9),
    ) {
        let d = (dd % n) + 1;
        let basis: Vec<Vec<BigRational>> = (0..d).map(|i| entries[i * 3..i * 3 + n].to_vec()).collect();
        let Some(v) = wedge_valuation_rational(&basis, p) else { return Ok(()) };
        prop_assume!(v.abs() <= 3);
        let c = variety_volume(&Variety::Parallelepiped { p, basis }, d, 6).unwrap();
        prop_assert_eq!(c.normalized, pow(p, -v));
    }
}

#[test]
fn lambda_p_unit_ball_and_scaling() {
    for p in [3u64, 5] {
        for f in standard_forms(p, 4).into_iter().take(4) {
            let l0 = lambda_p(&f, &FiniteRegion::Ball(0)).unwrap();
            let unimodular = f.exact().unwrap().iter().flatten().all(|x| x.is_zero() || valuation(x, p) == Some(0));
            if unimodular {
                assert_eq!(l0.hat, orbit_volume(&f).unwrap().value);
            }
            let lm = lambda_p(&f, &FiniteRegion::Ball(-1)).unwrap();
            assert_eq!(lm.value, &l0.value * pow(p, -2));
            assert_eq!(l0.value, &l0.hat / (qi(1) - pow(p, -2)));
        }
    }
}

#[test]
fn table_region_splits_lambda_by_class() {
    // ρ = 3 on vectors with x_1 ≡ 0 mod 3, 1 elsewhere
    let p = 3u64;
    let f = QuadraticFormP::from_rational(Place::P(p), standard_gram(&[1, 2])).unwrap();
    let mut entries = std::collections::BTreeMap::new();
    for a in 0..3u64 {
        for b in 0..3u64 {
            for c in 0..3u64 {
                if (a, b, c) != (0, 0, 0) {
                    entries.insert(vec![0, a, b, c], 1);
                }
            }
        }
    }
    let region = FiniteRegion::Table { level: 1, default: 0, entries };
    let l = lambda_p(&f, &region).unwrap();
    let mass: BigRational = l.classes.iter().map(|(_, m)| m.clone()).sum();
    assert_eq!(mass, orbit_volume(&f).unwrap().value);
    let hat: BigRational = l.classes.iter().map(|(e, m)| m * pow(p, 2 * e)).sum();
    assert_eq!(hat, l.hat);
}

#[test]
fn finite_volume_approaches_lambda() {
    let p = 3u64;
    for coeffs in [vec![1i64, 2], vec![1, 3]] {
        let f = QuadraticFormP::from_rational(Place::P(p), standard_gram(&coeffs)).unwrap();
        let l = lambda_p(&f, &FiniteRegion::Ball(0)).unwrap();
        let zp = PadicInterval { p, center: PadicNumber::zero(p), b: 0 };
        let mut last = f64::INFINITY;
        for np in 1..=4i64 {
            let v = volume_p(&f, &zp, &FiniteRegion::Ball(0), np).unwrap();
            let ratio = sadic_core::padic::rational_to_f64(&(v / (&l.value * pow(p, 2 * np))));
            assert!((ratio - 1.0).abs() <= last + 1e-12);
            last = (ratio - 1.0).abs();
        }
        assert!(last < 0.02, "{:?}: {}", coeffs, last);
        // I = 1 + 3^2 Z_3 at large T
        let i = PadicInterval { p, center: PadicNumber::one(p, 30), b: 2 };
        let v = volume_p(&f, &i, &FiniteRegion::Ball(0), 5).unwrap();
        let pred = &l.value * pow(p, -2) * pow(p, 10);
        let ratio = sadic_core::padic::rational_to_f64(&(v / pred));
        assert!((ratio - 1.0).abs() < 0.02, "{}", ratio);
    }
}

/// `J_f` by direct enumeration of the middle coordinates modulo `p^L`.
fn brute_j(b: &QMat, f: &PadicBox, r: i64, zeta: &BigRational, l: u32) -> BigRational {
    let p = f.p;
    let n = b.len();
    let d = n - 2;
    let m = (p as i64).pow(l);
    let first = pow(p, -r);
    if !(PadicBox { p, balls: vec![f.balls[0].clone()] }).contains(&[first]) {
        return qi(0);
    }
    let mut hits = 0u64;
    let mut y = vec![0i64; d];
    for _ in 0..m.pow(d as u32) {
        let x: Vec<BigRational> = (0..d).map(|i| qi(y[i])).collect();
        let in_box = (0..d).all(|i| {
            let (c, k) = &f.balls[i + 1];
            let diff = &x[i] - c;
            diff.is_zero() || valuation(&diff, p).unwrap() >= *k
        });
        if in_box {
            let mut q0 = qi(0);
            for i in 0..d {
                for j in 0..d {
                    q0 += &b[i + 1][j + 1] * &x[i] * &x[j];
                }
            }
            let xn = pow(p, r) * (zeta - q0);
            let (c, k) = &f.balls[n - 1];
            let diff = xn - c;
            if diff.is_zero() || valuation(&diff, p).unwrap() >= *k {
                hits += 1;
            }
        }
        for c in y.iter_mut() {
            *c += 1;
            if *c < m {
                break;
            }
            *c = 0;
        }
    }
    pow(p, -r * d as i64) * BigRational::new(hits.into(), BigInt::from(m).pow(d as u32))
}

#[test]
fn j_kernel_matches_enumeration() {
    let p = 3u64;
    let b = standard_gram(&[1, 3]);
    let f = QuadraticFormP::from_rational(Place::P(p), b.clone()).unwrap();
    let boxes = [
        PadicBox::unit(p, 4),
        PadicBox { p, balls: vec![(qi(0), -2), (qi(1), 1), (qi(0), 0), (qi(2), 2)] },
        PadicBox { p, balls: vec![(qi(0), -1), (qi(0), 0), (qi(2), 1), (q(1, 3), -1)] },
    ];
    for fb in &boxes {
        for r in 0..=2i64 {
            for zeta in [qi(0), qi(1), qi(7), q(5, 3)] {
                let fast = j_kernel(&f, fb, r, &zeta, 1).unwrap();
                let slow = brute_j(&b, fb, r, &zeta, 5);
                assert_eq!(fast, slow, "box {:?}, r = {}, ζ = {}", fb.balls, r, zeta);
            }
        }
    }
    // f vanishing at the first coordinate
    let off = PadicBox { p, balls: vec![(qi(1), 1), (qi(0), 0), (qi(0), 0), (qi(0), 0)] };
    assert_eq!(j_kernel(&f, &off, 1, &qi(0), 1).unwrap(), qi(0));
}

fn diag(d: &[f64]) -> QuadraticFormP {
    let n = d.len();
    QuadraticFormP::real((0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect()).unwrap()
}

/// Area of `{σ, τ ≥ 0, σ + τ ≤ R, a < σ - τ < b}` by clipping the triangle.
fn clipped_area(r: f64, a: f64, b: f64) -> f64 {
    let mut poly = vec![(0.0, 0.0), (r, 0.0), (0.0, r)];
    let clip = |poly: Vec<(f64, f64)>, f: &dyn Fn(f64, f64) -> f64| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (p0, p1) = (poly[i], poly[(i + 1) % poly.len()]);
            let (f0, f1) = (f(p0.0, p0.1), f(p1.0, p1.1));
            if f0 >= 0.0 {
                out.push(p0);
            }
            if (f0 >= 0.0) != (f1 >= 0.0) {
                let t = f0 / (f0 - f1);
                out.push((p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1)));
            }
        }
        out
    };
    poly = clip(poly, &|s, t| s - t - a);
    poly = clip(poly, &|s, t| b - (s - t));
    let n = poly.len();
    (0..n).map(|i| poly[i].0 * poly[(i + 1) % n].1 - poly[(i + 1) % n].0 * poly[i].1).sum::<f64>().abs() / 2.0
}

#[test]
fn split_four_dimensional_volume_is_exact() {
    let f = diag(&[1.0, 1.0, -1.0, -1.0]);
    let cfg = McConfig::new(10, 1);
    for (t, a, b) in [(1.0, -0.5, 0.5), (3.0, 0.0, 1.0), (5.0, -7.0, 2.0), (2.0, 3.0, 9.0), (10.0, 99.0, 101.0)] {
        let v = volume_inf(&f, a, b, &RealRegion::Ball(1.0), t, &cfg).unwrap();
        let exact = PI * PI * clipped_area(t * t, a, b);
        assert_eq!(v.stderr, 0.0);
        assert!((v.value - exact).abs() <= 1e-7 * exact.max(1e-3), "T = {} ({}, {}): {} vs {}", t, a, b, v.value, exact);
    }
}

#[test]
fn ternary_volume_matches_cylindrical_quadrature() {
    let f = diag(&[1.0, 1.0, -1.0]);
    let cfg = McConfig::new(10, 1);
    for (t, a, b) in [(1.0, -0.3, 0.4), (4.0, 0.0, 1.0), (6.0, -5.0, -1.0)] {
        let v = volume_inf(&f, a, b, &RealRegion::Ball(1.0), t, &cfg).unwrap();
        let r2 = t * t;
        let len = |z: f64| {
            let z2 = z * z;
            ((r2 - z2).min(z2 + b) - (z2 + a).max(0.0)).max(0.0)
        };
        let steps = 400_000;
        let h = 2.0 * t / steps as f64;
        let oracle: f64 = PI * (0..steps).map(|i| len(-t + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((v.value - oracle).abs() < 1e-4 * oracle, "{} vs {}", v.value, oracle);
    }
}

/// Hit-or-miss estimate in the ball of radius `rmax`.
fn direct_mc(f: &QuadraticFormP, a: f64, b: f64, region: &RealRegion, t: f64, samples: usize) -> (f64, f64) {
    let g = f.gram_real().unwrap();
    let n = g.len();
    let rmax = t * region.max();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hits = 0usize;
    for _ in 0..samples {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: Vec<f64> = dir.iter().map(|x| x / len).collect();
        let r = rmax * rng.gen::<f64>().powf(1.0 / n as f64);
        let v: Vec<f64> = u.iter().map(|x| x * r).collect();
        let qv: f64 = (0..n).map(|i| (0..n).map(|j| g[i][j] * v[i] * v[j]).sum::<f64>()).sum();
        if r <= t * region.rho(&u) && qv > a && qv < b {
            hits += 1;
        }
    }
    let ball = PI.powf(n as f64 / 2.0) / libm_gamma(n as f64 / 2.0 + 1.0) * rmax.powi(n as i32);
    let frac = hits as f64 / samples as f64;
    (ball * frac, ball * (frac * (1.0 - frac) / samples as f64).sqrt())
}

fn libm_gamma(x: f64) -> f64 {
    // half-integers and integers only
    if x == 1.0 {
        1.0
    } else if x == 0.5 {
        PI.sqrt()
    } else {
        (x - 1.0) * libm_gamma(x - 1.0)
    }
}

#[test]
fn anisotropic_volume_matches_hit_or_miss() {
    let f = diag(&[1.0, 2.0, -1.0, -3.0]);
    let cfg = McConfig::new(4096, 7);
    let v = volume_inf(&f, -1.0, 2.0, &RealRegion::Ball(1.0), 3.0, &cfg).unwrap();
    let (m, se) = direct_mc(&f, -1.0, 2.0, &RealRegion::Ball(1.0), 3.0, 400_000);
    assert!((v.value - m).abs() < 4.0 * (v.stderr.powi(2) + se * se).sqrt(), "{:?} vs {} ± {}", v, m, se);

    let rho = RealRegion::Radial { rho: Arc::new(|u: &[f64]| 1.0 + 0.5 * u[0] * u[0]), max: 1.5 };
    let g = diag(&[1.0, 1.0, -1.0]);
    let v = volume_inf(&g, -0.5, 1.5, &rho, 2.0, &cfg).unwrap();
    let (m, se) = direct_mc(&g, -0.5, 1.5, &rho, 2.0, 400_000);
    assert!((v.value - m).abs() < 4.0 * (v.stderr.powi(2) + se * se).sqrt(), "{:?} vs {} ± {}", v, m, se);
}

#[test]
fn volume_is_additive_in_the_interval() {
    let f = diag(&[1.0, 2.0, -1.0, -3.0]);
    let cfg = McConfig::new(512, 3);
    let ball = RealRegion::Ball(1.0);
    let a = volume_inf(&f, 0.0, 1.0, &ball, 5.0, &cfg).unwrap();
    let b = volume_inf(&f, 1.0, 2.0, &ball, 5.0, &cfg).unwrap();
    let c = volume_inf(&f, 0.0, 2.0, &ball, 5.0, &cfg).unwrap();
    // same seed, same directions: additivity holds up to quadrature error
    assert!((a.value + b.value - c.value).abs() < 1e-7 * c.value);
}

#[test]
fn lambda_inf_is_the_large_t_limit() {
    let ball = RealRegion::Ball(1.0);
    for (f, iv) in [
        (diag(&[1.0, 1.0, 1.0, -1.0]), (-1.0, 1.0)),
        (diag(&[1.0, 2.0, -1.0, -3.0]), (0.0, 2.0)),
        (diag(&[2.0, 1.0, -0.5]), (1.0, 3.0)),
    ] {
        let cfg = McConfig::new(1024, 11);
        let n = f.n() as i32;
        let l = lambda_inf(&f, &ball, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for t in [20.0, 80.0, 320.0] {
            let v = volume_inf(&f, iv.0, iv.1, &ball, t, &cfg).unwrap();
            let ratio = v.value / ((iv.1 - iv.0) * t.powi(n - 2) * l.value);
            assert!((ratio - 1.0).abs() <= prev + 1e-9, "T = {}: {}", t, ratio);
            prev = (ratio - 1.0).abs();
        }
        assert!(prev < 0.01, "{}", prev);
    }
    // T and 2T agree after rescaling
    let f = diag(&[1.0, 3.0, -2.0, -1.0]);
    let cfg = McConfig::new(2048, 5);
    let v1 = volume_inf(&f, 0.0, 1.0, &ball, 200.0, &cfg).unwrap();
    let v2 = volume_inf(&f, 0.0, 1.0, &ball, 400.0, &McConfig::new(2048, 6)).unwrap();
    let (r1, r2) = (v1.value / 4e4, v2.value / 1.6e5);
    assert!((r1 - r2).abs() < 3.0 * ((v1.stderr / 4e4).powi(2) + (v2.stderr / 1.6e5).powi(2)).sqrt() + 1e-3 * r1);
}

#[test]
fn stderr_bound_is_enforced() {
    let f = diag(&[1.0, 5.0, -1.0, -7.0]);
    let mut cfg = McConfig::new(64, 1);
    cfg.max_rel_stderr = Some(1e-9);
    assert!(lambda_inf(&f, &RealRegion::Ball(1.0), &cfg).is_err());
    let a = lambda_inf(&f, &RealRegion::Ball(1.0), &McConfig::new(256, 4)).unwrap();
    let b = lambda_inf(&f, &RealRegion::Ball(1.0), &McConfig::new(256, 4)).unwrap();
    assert_eq!(a, b);
}
