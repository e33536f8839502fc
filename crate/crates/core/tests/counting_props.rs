mod common;

use common::{brute_force, for_each_vector, random_instance, Instance, Oracle, RealGram, RealShape};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sadic_core::counting::{count, count_N, counterexample_experiment, null_vectors, perturb_beta, Tri};
use sadic_core::exec;
use sadic_core::linalg::{qi, to_q};
use sadic_core::qform::{FiniteRegion, QuadraticFormS, Region, SInterval, STime};

fn check_instance(inst: &Instance) {
    let c = count(&inst.form(), &inst.interval(), &inst.region(), &inst.time()).unwrap();
    let want = brute_force(inst);
    assert!(
        c.count <= want && want <= c.count + c.undecided,
        "count {} (+{} undecided) vs brute force {} for {:?}",
        c.count,
        c.undecided,
        want,
        inst
    );
    if matches!(inst.real, RealGram::Rational(_)) && matches!(inst.shape, RealShape::Ball(_)) {
        assert_eq!(c.undecided, 0);
    }
}

#[test]
fn lorentzian_example_matches_double_loop() {
    let q = QuadraticFormS::rational(to_q(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]]), &[5]).unwrap();
    let t = STime::new(5.0, vec![(5, 1)]).unwrap();
    let i = SInterval::integral(-0.5, 0.5, &[5]).unwrap();
    let got = count_N(&q, &i, &Region::unit_balls(&[5]), &t).unwrap();
    let mut want = 0;
    for x in -25i64..=25 {
        for y in -25i64..=25 {
            for z in -25i64..=25 {
                let v = x * x + y * y - z * z;
                // |w/5| ≤ 5, -1/2 < v/25 < 1/2 and v/25 ∈ Z_5
                if x * x + y * y + z * z <= 625 && 2 * v > -25 && 2 * v < 25 && v % 25 == 0 {
                    want += 1;
                }
            }
        }
    }
    assert_eq!(got, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_brute_force(seed in any::<u64>(), four in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = if four { random_instance(&mut rng, 4, 10) } else { random_instance(&mut rng, 3, 25) };
        check_instance(&inst);
    }

    #[test]
    fn skipped_strata_fail_their_congruences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 3, 30);
        let plan = count(&inst.form(), &inst.interval(), &inst.region(), &inst.time()).unwrap().plan;
        let o = Oracle::new(&inst);
        let b = plan.box_bound.max(1);
        for _ in 0..400 {
            let w: Vec<i64> = (0..3).map(|_| rng.gen_range(-b..=b)).collect();
            if plan.skipped_by_striding(&w) {
                prop_assert!(!o.padic_values_ok(&w), "skipped {:?} satisfies the p-adic conditions", w);
            }
        }
    }
}

#[test]
fn symmetric_halves_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 3, 20);
        if !matches!(inst.shape, RealShape::Ball(_)) {
            continue;
        }
        let total = count_N(&inst.form(), &inst.interval(), &inst.region(), &inst.time()).unwrap_or(0);
        let o = Oracle::new(&inst);
        let (mut pos, mut neg, mut zero) = (0u64, 0u64, 0u64);
        for_each_vector(3, inst.box_bound(), |w| {
            if !o.accepts(w) {
                return;
            }
            match w.iter().find(|&&x| x != 0) {
                Some(&x) if x > 0 => pos += 1,
                Some(_) => neg += 1,
                None => zero += 1,
            }
        });
        assert_eq!(pos, neg);
        if matches!(inst.real, RealGram::Rational(_)) {
            assert_eq!(total, 2 * pos + zero);
        }
    }
}

#[test]
fn independent_of_worker_count() {
    let q = QuadraticFormS::rational(
        to_q(&[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, -2]]),
        &[3, 5],
    )
    .unwrap();
    let t = STime::new(12.0, vec![(3, 1), (5, 1)]).unwrap();
    let i = SInterval::integral(-3.0, 5.0, &[3, 5]).unwrap();
    let r = Region::unit_balls(&[3, 5]);
    let one = exec::with_workers(Some(1), || count_N(&q, &i, &r, &t).unwrap());
    let four = exec::with_workers(Some(4), || count_N(&q, &i, &r, &t).unwrap());
    exec::set_sequential(true);
    let seq = count_N(&q, &i, &r, &t).unwrap();
    exec::set_sequential(false);
    assert_eq!(one, four);
    assert_eq!(one, seq);
    assert!(one > 0);
}

#[test]
fn monotone_in_time_and_interval() {
    let q = QuadraticFormS::rational(to_q(&[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, -3]]), &[3, 5]).unwrap();
    let r = Region::unit_balls(&[3, 5]);
    let i = SInterval::integral(-1.0, 2.0, &[3, 5]).unwrap();
    let times = [
        STime::new(2.0, vec![(3, 0), (5, 0)]).unwrap(),
        STime::new(3.0, vec![(3, 0), (5, 0)]).unwrap(),
        STime::new(3.0, vec![(3, 1), (5, 0)]).unwrap(),
        STime::new(3.0, vec![(3, 1), (5, 1)]).unwrap(),
        STime::new(5.5, vec![(3, 1), (5, 1)]).unwrap(),
        STime::new(5.5, vec![(3, 2), (5, 1)]).unwrap(),
    ];
    let counts: Vec<u64> = times.iter().map(|t| count_N(&q, &i, &r, t).unwrap()).collect();
    for (k, w) in counts.windows(2).enumerate() {
        assert!(times[k + 1].dominates(&times[k]));
        assert!(w[0] <= w[1], "{:?}", counts);
    }
    let t = &times[4];
    let nested = [(-0.5, 0.5), (-1.0, 0.75), (-1.0, 2.0), (-4.0, 4.0)];
    let mut last = 0;
    for (a, b) in nested {
        let c = count_N(&q, &SInterval::integral(a, b, &[3, 5]).unwrap(), &r, t).unwrap();
        assert!(c >= last);
        last = c;
    }
}

#[test]
fn table_region_narrows_count() {
    let q = QuadraticFormS::rational(to_q(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]]), &[3]).unwrap();
    let t = STime::new(6.0, vec![(3, 1)]).unwrap();
    let i = SInterval::integral(-2.0, 2.0, &[3]).unwrap();
    let ball = count_N(&q, &i, &Region::unit_balls(&[3]), &t).unwrap();
    let mut entries = std::collections::BTreeMap::new();
    for x in 0..3u64 {
        for y in 0..3u64 {
            for z in 0..3u64 {
                if (x, y, z) != (0, 0, 0) && z != 0 {
                    entries.insert(vec![x, y, z], -1);
                }
            }
        }
    }
    let mut region = Region::unit_balls(&[3]);
    region.finite[0].1 = FiniteRegion::Table { level: 1, default: 0, entries };
    let narrowed = count_N(&q, &i, &region, &t).unwrap();
    assert!(narrowed < ball);
}

#[test]
fn null_vectors_are_counted_and_satisfy_conditions() {
    let alpha = BigRational::one();
    let t = STime::new(30.0, vec![(3, 1)]).unwrap();
    let table = counterexample_experiment(&alpha, 0.1, &[t.clone()], &[]).unwrap();
    let row = &table.rows[0];
    assert_eq!(row.failed_conditions, 0);
    assert_eq!(row.missed, 0);
    assert!(row.floor > 0);
    assert!(row.n >= row.floor);
    assert_eq!(row.undecided, 0);
    let nv = null_vectors(&alpha, &t).unwrap();
    assert_eq!(nv.x.len(), row.constructed);
}

#[test]
fn perturbed_values_land_in_the_window() {
    let alpha = BigRational::new(3.into(), 2.into());
    let t = STime::new(80.0, vec![(5, 1)]).unwrap();
    let nv = null_vectors(&alpha, &t).unwrap();
    let beta = perturb_beta(&alpha, &t, &[(5, 2)]).unwrap();
    let tq = qi(80);
    let quarter = BigRational::new(1.into(), 4.into());
    let mut hits = 0;
    for y in nv.mapped() {
        let n2 = y.iter().fold(BigRational::zero(), |a, c| a + c * c);
        // L(α, T): |y| ∈ [T/2, T]
        if &n2 * qi(4) < &tq * &tq || n2 > &tq * &tq {
            continue;
        }
        hits += 1;
        let qb = |b2: &BigRational| &y[0] * &y[0] + &y[1] * &y[1] - b2 * &y[2] * &y[2];
        let v = qb(&beta.square_inf);
        assert!(v >= quarter && v <= BigRational::one(), "{}", v);
        let vp = qb(&beta.squares[0].1);
        assert!(vp.is_zero() || sadic_core::padic::valuation(&vp, 5).unwrap() >= 0);
    }
    assert!(hits > 0);
}

#[test]
fn stride_audit_finds_pruning() {
    let q = QuadraticFormS::rational(to_q(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 3]]), &[3]).unwrap();
    let t = STime::new(4.0, vec![(3, 1)]).unwrap();
    let i = SInterval::integral(-100.0, 100.0, &[3]).unwrap();
    let c = count(&q, &i, &Region::unit_balls(&[3]), &t).unwrap();
    assert!(c.plan.pruning < 1.0);
    let w = [1, 0, 0];
    assert!(c.plan.skipped_by_striding(&w));
    assert_eq!(c.plan.accepts(&w), Tri::No);
}
