use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use sadic_core::linalg::{combinations, det, mat_mul, q, qi, QMat};
use sadic_core::padic::{
    cartan_valuations, hilbert_symbol, sqrt_padic, valuation, wedge_norm_p, PadicNumber,
};

fn rat() -> impl Strategy<Value = BigRational> {
    (-2000i64..2000, 1i64..500).prop_filter_map("nonzero", |(a, b)| {
        if a == 0 {
            None
        } else {
            Some(q(a, b))
        }
    })
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11])
}

fn to_padic(m: &QMat, p: u64) -> Vec<Vec<PadicNumber>> {
    m.iter().map(|r| r.iter().map(|x| PadicNumber::from_rational(p, x, 40)).collect()).collect()
}

/// Determinantal divisors: λ_1 + … + λ_k is the minimal valuation of a k×k minor.
fn cartan_oracle(m: &QMat, p: u64) -> Vec<i64> {
    let n = m.len();
    let mut prev = 0i64;
    let mut out = Vec::new();
    for k in 1..=n {
        let mut best: Option<i64> = None;
        for rows in combinations(n, k) {
            for cols in combinations(n, k) {
                let minor: QMat =
                    rows.iter().map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect()).collect();
                if let Some(v) = valuation(&det(&minor), p) {
                    best = Some(best.map_or(v, |b: i64| b.min(v)));
                }
            }
        }
        let b = best.unwrap();
        out.push(b - prev);
        prev = b;
    }
    out
}

/// Random element of SL_n(Z_(p)) as a product of elementary matrices.
fn random_sl(n: usize, p: u64, ops: &[(usize, usize, i64, i64)]) -> QMat {
    let mut g = sadic_core::linalg::identity(n);
    for &(i, j, a, b) in ops {
        let (i, j) = (i % n, j % n);
        if i == j {
            continue;
        }
        let den = if b % p as i64 == 0 { b + 1 } else { b };
        let mut e = sadic_core::linalg::identity(n);
        e[i][j] = q(a, den);
        g = mat_mul(&g, &e);
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn valuation_laws(x in rat(), y in rat(), p in prime()) {
        let vx = valuation(&x, p).unwrap();
        let vy = valuation(&y, p).unwrap();
        prop_assert_eq!(valuation(&(&x * &y), p).unwrap(), vx + vy);
        let s = &x + &y;
        if let Some(vs) = valuation(&s, p) {
            prop_assert!(vs >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }
        // the same laws hold for the bounded-precision numbers
        let px = PadicNumber::from_rational(p, &x, 30);
        let py = PadicNumber::from_rational(p, &y, 30);
        prop_assert_eq!((&px * &py).valuation(), Some(vx + vy));
        if vx != vy {
            prop_assert_eq!((&px + &py).valuation(), Some(vx.min(vy)));
        }
        prop_assert!((&px + &py).agrees_with(&s) || s.is_zero());
    }

    #[test]
    fn sqrt_squares_back(x in rat(), p in prime()) {
        let sq = &x * &x;
        let px = PadicNumber::from_rational(p, &sq, 30);
        let r = sqrt_padic(&px, 30).unwrap();
        prop_assert!((&r * &r).agrees_with(&sq));
        let d = r.digits()[0];
        prop_assert!(d >= 1 && d <= (p - 1) / 2);
    }

    #[test]
    fn wedge_norm_invariant_under_sl(
        p in prime(),
        entries in prop::collection::vec(-30i64..30, 8),
        ops in prop::collection::vec((0usize..4, 0usize..4, -9i64..9, 1i64..9), 1..6),
    ) {
        let vs: QMat = entries.chunks(4).map(|c| c.iter().map(|&x| qi(x)).collect()).collect();
        let g = random_sl(4, p, &ops);
        let gvs: QMat = vs.iter().map(|v| sadic_core::linalg::mat_vec(&g, v)).collect();
        let a = wedge_norm_p(&to_padic(&vs, p));
        let b = wedge_norm_p(&to_padic(&gvs, p));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a.valuation, b.valuation);
        }
    }

    #[test]
    fn cartan_matches_determinantal_divisors(
        p in prime(),
        entries in prop::collection::vec((-40i64..40, 1i64..30), 9),
    ) {
        let m: QMat = entries.chunks(3).map(|c| c.iter().map(|&(a, b)| q(a, b)).collect()).collect();
        prop_assume!(!det(&m).is_zero());
        let got = cartan_valuations(&to_padic(&m, p)).unwrap();
        prop_assert_eq!(got.iter().sum::<i64>(), valuation(&det(&m), p).unwrap());
        prop_assert_eq!(got, cartan_oracle(&m, p));
    }

    #[test]
    fn cartan_additive_on_dkd(
        p in prime(),
        mut d1 in prop::collection::vec(-3i64..4, 3),
        mut d2 in prop::collection::vec(-3i64..4, 3),
        kent in prop::collection::vec(-5i64..5, 9),
    ) {
        d1.sort();
        d2.sort();
        let pp = p as i64;
        let diag = |d: &[i64]| -> QMat {
            (0..3).map(|i| (0..3).map(|j| {
                if i == j {
                    let x = BigRational::from_integer(num_traits::pow(BigInt::from(pp), d[i].unsigned_abs() as usize));
                    if d[i] >= 0 { x } else { x.recip() }
                } else { qi(0) }
            }).collect()).collect()
        };
        // k ≡ I mod p
        let k: QMat = (0..3).map(|i| (0..3).map(|j| {
            let base = if i == j { qi(1) } else { qi(0) };
            base + qi(pp * kent[3 * i + j])
        }).collect()).collect();
        prop_assume!(!det(&k).is_zero());
        let g = mat_mul(&mat_mul(&diag(&d1), &k), &diag(&d2));
        let got = cartan_valuations(&to_padic(&g, p)).unwrap();
        let want: Vec<i64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn hilbert_symmetric_and_bimultiplicative_on_square_classes() {
    for &p in &[3u64, 5, 7, 11, 13] {
        let u0 = sadic_core::padic::smallest_nonresidue(p) as i64;
        let pi = p as i64;
        let classes = [1, u0, pi, u0 * pi];
        let h = |a: i64, b: i64| {
            hilbert_symbol(&PadicNumber::from_int(p, a, 20), &PadicNumber::from_int(p, b, 20)).unwrap()
        };
        for &a in &classes {
            for &b in &classes {
                assert_eq!(h(a, b), h(b, a));
                for &c in &classes {
                    assert_eq!(h(a, b * c), h(a, b) * h(a, c), "p={} a={} b={} c={}", p, a, b, c);
                }
            }
        }
    }
}
