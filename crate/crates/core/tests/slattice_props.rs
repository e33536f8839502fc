use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sadic_core::linalg::{self, qi, QMat};
use sadic_core::padic::rational_to_f64;
use sadic_core::slattice::{
    alpha, alpha_all, d_squared_of_generators, d_subspace_sq, project_to_real, schmidt_constant, siegel_transform,
    siegel_transform_projected, BallNorm, BallProduct, RationalSubspace, SLattice,
};
use std::collections::BTreeSet;

/// Rows `g · diag(s_1, …, s_n)` with `g ∈ SL_n(Z)` a product of elementary moves and the
/// `s_i` S-units of product one.
fn random_unimodular(rng: &mut impl Rng, primes: &[u64], n: usize, moves: usize) -> QMat {
    let mut g: QMat = linalg::identity(n);
    for _ in 0..moves {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let c = qi(rng.gen_range(-1..=1));
        for k in 0..n {
            let t = &g[j][k] * &c;
            g[i][k] += t;
        }
    }
    let p = primes[rng.gen_range(0..primes.len())];
    let e = rng.gen_range(-1i32..=1);
    let i = rng.gen_range(0..n);
    let j = (i + 1) % n;
    let s = BigRational::from_integer(BigInt::from(p)).pow(e);
    for k in 0..n {
        g[i][k] = &g[i][k] * &s;
        g[j][k] = &g[j][k] / &s;
    }
    g
}

fn combo(c: &[i64], rows: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = rows[0].len();
    (0..n)
        .map(|k| c.iter().zip(rows).map(|(a, r)| BigRational::from_integer((*a).into()) * &r[k]).sum())
        .collect()
}

fn random_coeffs(rng: &mut impl Rng, n: usize, b: i64) -> Vec<i64> {
    loop {
        let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-b..=b)).collect();
        if c.iter().any(|&x| x != 0) {
            return c;
        }
    }
}

fn random_subspace(rng: &mut impl Rng, delta: &SLattice, rows: &[Vec<BigRational>], dim: usize) -> RationalSubspace {
    let n = rows.len();
    loop {
        let gens: Vec<Vec<BigRational>> = (0..dim).map(|_| combo(&random_coeffs(rng, n, 2), rows)).collect();
        let l = RationalSubspace::saturate(delta, &gens).unwrap();
        if l.dim() == dim {
            return l;
        }
    }
}

#[test]
fn d_is_basis_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let primes = [3u64, 5];
    for _ in 0..60 {
        let n = rng.gen_range(3..=4);
        let rows = random_unimodular(&mut rng, &primes, n, 6);
        let delta = SLattice::from_rational(&primes, &rows, 40).unwrap();
        let dim = rng.gen_range(1..n);
        let l = random_subspace(&mut rng, &delta, &rows, dim);
        let base = d_subspace_sq(&delta, &l).unwrap();
        // unimodular recombination plus an S-unit rescaling of one generator
        let mut gens = l.generators.clone();
        if dim >= 2 {
            let t = gens[1].clone();
            let c = qi(rng.gen_range(-3..=3));
            for (x, y) in gens[0].iter_mut().zip(&t) {
                *x += y * &c;
            }
        }
        let s = qi(15).pow(rng.gen_range(-1i32..=1));
        gens[0] = gens[0].iter().map(|x| x * &s).collect();
        let l2 = RationalSubspace { generators: gens };
        assert_eq!(d_subspace_sq(&delta, &l2).unwrap(), base);
    }
}

fn intersect(delta: &SLattice, l: &RationalSubspace, m: &RationalSubspace) -> RationalSubspace {
    // a x = b y with x, y coefficient vectors
    let n = delta.n();
    let k1 = l.dim();
    let k2 = m.dim();
    let mat: QMat = (0..n)
        .map(|r| {
            let mut row: Vec<BigRational> = l.generators.iter().map(|g| g[r].clone()).collect();
            row.extend(m.generators.iter().map(|g| -g[r].clone()));
            row
        })
        .collect();
    let ker = linalg::kernel(&mat, k1 + k2);
    let span: Vec<Vec<BigRational>> = ker
        .iter()
        .map(|c| (0..n).map(|r| (0..k1).map(|j| &c[j] * &l.generators[j][r]).sum()).collect())
        .collect();
    RationalSubspace::saturate(delta, &span).unwrap()
}

#[test]
fn submodularity_of_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let primes = [3u64];
    let mut violations = 0;
    for t in 0..500 {
        let n = 3 + t % 2;
        let rows = random_unimodular(&mut rng, &primes, n, 5);
        let delta = SLattice::from_rational(&primes, &rows, 40).unwrap();
        let (dl, dm) = (rng.gen_range(1..n), rng.gen_range(1..n));
        let l = random_subspace(&mut rng, &delta, &rows, dl);
        let m = random_subspace(&mut rng, &delta, &rows, dm);
        let mut all = l.generators.clone();
        all.extend(m.generators.iter().cloned());
        let sum = RationalSubspace::saturate(&delta, &all).unwrap();
        let cap = intersect(&delta, &l, &m);
        let lhs = d_subspace_sq(&delta, &l).unwrap() * d_subspace_sq(&delta, &m).unwrap();
        let rhs = d_subspace_sq(&delta, &cap).unwrap() * d_subspace_sq(&delta, &sum).unwrap();
        if lhs < rhs {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

fn integer_vectors(n: usize, b: i64) -> Vec<Vec<i64>> {
    let total = (2 * b + 1).pow(n as u32);
    (0..total)
        .map(|idx| {
            let mut t = idx;
            (0..n)
                .map(|_| {
                    let d = t % (2 * b + 1);
                    t /= 2 * b + 1;
                    d - b
                })
                .collect::<Vec<i64>>()
        })
        .filter(|c| c.iter().any(|&x| x != 0))
        .collect()
}

/// `min d(L)²` over Δ-rational lines and planes of a rank-3 lattice, by direct search.
///
/// Lines are spanned by integer vectors `w` and planes are cut out by `ν·x = 0` for
/// integer `ν`, all in ambient coordinates with entries bounded by `b`.
fn brute_alpha_sq(delta: &SLattice, i: usize, b: i64) -> BigRational {
    let n = delta.n();
    let mut best: Option<BigRational> = None;
    for c in integer_vectors(n, b) {
        let w: Vec<BigRational> = c.iter().map(|&x| qi(x)).collect();
        let gens = if i == 1 { vec![w] } else { linalg::kernel(&[w], n) };
        let l = RationalSubspace::saturate(delta, &gens).unwrap();
        assert_eq!(l.dim(), i);
        let d2 = d_squared_of_generators(&l.generators, delta.primes()).unwrap();
        if best.as_ref().map_or(true, |x| &d2 < x) {
            best = Some(d2);
        }
    }
    best.unwrap()
}

#[test]
fn alpha_of_s_lattice_equals_alpha_of_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let primes = [3u64];
    for _ in 0..50 {
        let rows = random_unimodular(&mut rng, &primes, 3, 3);
        let delta = SLattice::from_rational(&primes, &rows, 40).unwrap();
        for i in 1..=2 {
            let a = alpha(&delta, i).unwrap();
            let brute = brute_alpha_sq(&delta, i, 5);
            assert_eq!(a.min_covolume_sq, brute, "rows {:?}, i = {}", rows, i);
        }
    }
}

#[test]
fn projection_has_covolume_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let primes = [3u64, 7];
        let n = rng.gen_range(2..=4);
        let rows = random_unimodular(&mut rng, &primes, n, 8);
        let delta = SLattice::from_rational(&primes, &rows, 40).unwrap();
        let pr = project_to_real(&delta).unwrap();
        assert_eq!(linalg::det(&pr).abs(), BigRational::one());
        assert!((rational_to_f64(&linalg::det(&pr)).abs() - 1.0).abs() < 1e-9);
        for r in &pr {
            assert!(delta.contains(r).unwrap());
        }
    }
}

#[test]
fn real_components_determine_points() {
    let delta = SLattice::from_rational(&[5], &[vec![qi(5), qi(1)], vec![qi(0), BigRational::new(1.into(), 5.into())]], 40).unwrap();
    let a = delta.exact_basis().unwrap().clone();
    let mut seen = BTreeSet::new();
    for x in -6i64..=6 {
        for y in -6i64..=6 {
            let c = [BigRational::new(x.into(), 5.into()), BigRational::new(y.into(), 25.into())];
            let v: Vec<BigRational> = (0..2).map(|i| &a[i][0] * &c[0] + &a[i][1] * &c[1]).collect();
            // distinct coefficient vectors give distinct real points
            assert!(seen.insert(v));
        }
    }
}

#[test]
fn siegel_routes_and_schmidt_bound_on_random_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let primes = [3u64, 5];
    let ball = BallProduct::new(1.5, BallNorm::Euclidean, vec![(3, 0), (5, 0)]);
    let c = schmidt_constant(&ball, &primes, 3);
    for _ in 0..40 {
        let rows = random_unimodular(&mut rng, &primes, 3, 6);
        let delta = SLattice::from_rational(&primes, &rows, 40).unwrap();
        let a = siegel_transform(&ball, &delta).unwrap();
        assert_eq!(a.indeterminate, 0);
        assert_eq!(a.count, siegel_transform_projected(&ball, &delta).unwrap());
        let al = alpha_all(&delta).unwrap().iter().map(|x| x.value).fold(0.0, f64::max);
        assert!(a.count as f64 <= c * al);
    }
}
