//! Counting `N_{I,q,Ω}(T) = #{v ∈ Z_S^n ∩ TΩ : q_p(v) ∈ I_p for all p ∈ S}`.
//!
//! Every `v ∈ Z_S^n ∩ TΩ` is `w / D` for an integer vector `w` in a ball, with `D` a
//! product of prime powers fixed by `T` and `Ω`. The p-adic conditions become
//! congruences on `w`, the real ones an exact (or error-budgeted) integer interval test.

pub mod congruence;
mod counterexample;
mod kernel;
mod plan;

pub use counterexample::{
    counterexample_experiment, counterexample_row, growth_slopes, hyperbolic_transform, null_vectors, perturb_beta,
    CounterexampleRow, CounterexampleTable, NullVectors, PerturbedBeta,
};
pub use kernel::Tally;
pub use plan::{EnumerationPlan, Tri};

use crate::error::{Error, Result};
use crate::qform::{QuadraticFormS, Region, SInterval, STime};
use crate::volume::{lambda, volume_V, LambdaConstants, McConfig};
use serde::Serialize;
use std::time::Instant;

/// Result of one enumeration.
#[derive(Clone, Debug)]
pub struct Count {
    pub count: u64,
    /// Points whose membership floating point could not decide; excluded from `count`.
    pub undecided: u64,
    pub prefixes: u64,
    pub plan: EnumerationPlan,
}

/// Counts `v = w / D` with all conditions, reporting undecided boundary points.
pub fn count(q: &QuadraticFormS, interval: &SInterval, region: &Region, t: &STime) -> Result<Count> {
    let plan = EnumerationPlan::new(q, interval, region, t)?;
    let tally = kernel::run(&plan);
    Ok(Count { count: tally.count, undecided: tally.undecided, prefixes: tally.prefixes, plan })
}

/// `N_{I,q,Ω}(T)`; fails when some point cannot be decided at the available precision.
#[allow(non_snake_case)]
pub fn count_N(q: &QuadraticFormS, interval: &SInterval, region: &Region, t: &STime) -> Result<u64> {
    let c = count(q, interval, region, t)?;
    if c.undecided > 0 {
        return Err(Error::PrecisionExhausted(format!(
            "{} boundary points undecided in double precision",
            c.undecided
        )));
    }
    Ok(c.count)
}

/// One row of an asymptotics sweep.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    #[serde(skip)]
    pub t: STime,
    pub norm: f64,
    pub n: u64,
    pub undecided: u64,
    pub volume: f64,
    pub volume_stderr: f64,
    /// `λ |I| ‖T‖^{n-2}`.
    pub lambda_pred: f64,
    /// `N / (λ |I| ‖T‖^{n-2})`.
    pub ratio: f64,
    /// `N / V`.
    pub ratio_volume: f64,
    pub wall_ms: f64,
}

impl CountReport {
    pub fn csv_header(primes: &[u64]) -> Vec<String> {
        let mut h = vec!["T_inf".to_string()];
        h.extend(primes.iter().map(|p| format!("T_{}", p)));
        h.extend(["N", "V", "lambda_pred", "ratio", "undecided", "wall_ms"].map(String::from));
        h
    }

    /// CSV fields; `wall_ms` stays empty unless `timing` is set so reruns are identical.
    pub fn csv_record(&self, primes: &[u64], timing: bool) -> Vec<String> {
        let mut r = vec![self.t.t_inf.to_string()];
        r.extend(primes.iter().map(|&p| format!("{}", (p as f64).powi(self.t.exp(p) as i32))));
        r.push(self.n.to_string());
        r.push(self.volume.to_string());
        r.push(self.lambda_pred.to_string());
        r.push(self.ratio.to_string());
        r.push(self.undecided.to_string());
        r.push(if timing { format!("{:.1}", self.wall_ms) } else { String::new() });
        r
    }
}

/// Counts at `t` and compares against the volume and the `λ` prediction.
pub fn count_report(
    q: &QuadraticFormS,
    interval: &SInterval,
    region: &Region,
    t: &STime,
    lambda: &LambdaConstants,
    cfg: &McConfig,
) -> Result<CountReport> {
    let start = Instant::now();
    let c = count(q, interval, region, t)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let v = volume_V(q, interval, region, t, cfg)?;
    let pred = lambda.prediction(interval, t, q.n());
    Ok(CountReport {
        t: t.clone(),
        norm: t.norm(),
        n: c.count,
        undecided: c.undecided,
        volume: v.value,
        volume_stderr: v.stderr,
        lambda_pred: pred,
        ratio: c.count as f64 / pred,
        ratio_volume: c.count as f64 / v.value,
        wall_ms,
    })
}

/// One report per `T`; `λ` is computed once.
pub fn asymptotics_experiment(
    q: &QuadraticFormS,
    interval: &SInterval,
    region: &Region,
    ts: &[STime],
    cfg: &McConfig,
) -> Result<Vec<CountReport>> {
    let lam = lambda(q, region, cfg)?;
    ts.iter().map(|t| count_report(q, interval, region, t, &lam, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_q;
    use crate::padic::PadicNumber;
    use crate::qform::{PadicInterval, QuadraticFormP, Place};

    fn lorentz(primes: &[u64]) -> QuadraticFormS {
        QuadraticFormS::rational(to_q(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]]), primes).unwrap()
    }

    /// Direct loop over `w ∈ [-B, B]^3` with rational arithmetic.
    fn naive(d: i64, t_inf: f64, a: f64, b: f64, p: u64, n_p: i64) -> u64 {
        let bnd = (t_inf * d as f64).floor() as i64;
        let mut c = 0;
        let d2 = (d * d) as f64;
        for x in -bnd..=bnd {
            for y in -bnd..=bnd {
                for z in -bnd..=bnd {
                    let norm2 = (x * x + y * y + z * z) as f64;
                    if norm2 > t_inf * t_inf * d2 {
                        continue;
                    }
                    let qv = x * x + y * y - z * z;
                    if !((qv as f64) > a * d2 && (qv as f64) < b * d2) {
                        continue;
                    }
                    // q(w/D) ∈ Z_p ⟺ p^{2 n_p} | q(w)
                    if qv.rem_euclid((p as i64).pow(2 * n_p as u32)) != 0 {
                        continue;
                    }
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn small_lorentzian_count() {
        let q = lorentz(&[5]);
        let t = STime::new(5.0, vec![(5, 1)]).unwrap();
        let i = SInterval::integral(-0.5, 0.5, &[5]).unwrap();
        let r = Region::unit_balls(&[5]);
        let n = count_N(&q, &i, &r, &t).unwrap();
        assert_eq!(n, naive(5, 5.0, -0.5, 0.5, 5, 1));
        assert!(n > 0);
    }

    #[test]
    fn empty_real_interval_counts_nothing() {
        let q = lorentz(&[5]);
        let t = STime::new(5.0, vec![(5, 1)]).unwrap();
        let i = SInterval::integral(0.5, 0.5, &[5]).unwrap();
        assert_eq!(count_N(&q, &i, &Region::unit_balls(&[5]), &t).unwrap(), 0);
    }

    #[test]
    fn negative_exponent_rejected() {
        let q = lorentz(&[3]);
        let t = STime::new(5.0, vec![(3, -1)]).unwrap();
        let i = SInterval::integral(-1.0, 1.0, &[3]).unwrap();
        assert!(count_N(&q, &i, &Region::unit_balls(&[3]), &t).is_err());
    }

    #[test]
    fn padic_interval_shifts_target() {
        let q = lorentz(&[3]);
        let t = STime::new(4.0, vec![(3, 1)]).unwrap();
        let centre = PadicNumber::from_int(3, 1, 20);
        let i = SInterval::new(-30.0, 30.0, vec![PadicInterval { p: 3, center: centre, b: 1 }]).unwrap();
        let got = count_N(&q, &i, &Region::unit_balls(&[3]), &t).unwrap();
        let mut want = 0;
        for x in -12i64..=12 {
            for y in -12i64..=12 {
                for z in -12i64..=12 {
                    if x * x + y * y + z * z > 144 {
                        continue;
                    }
                    let v = x * x + y * y - z * z;
                    // q(w/3) = v / 9 ≡ 1 mod 3  ⟺  v ≡ 9 mod 27
                    if (v - 9).rem_euclid(27) == 0 && (v as f64) / 9.0 > -30.0 && (v as f64) / 9.0 < 30.0 {
                        want += 1;
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn irrational_form_reports_no_spurious_undecided() {
        let s2 = 2f64.sqrt();
        let real = QuadraticFormP::real(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -s2]]).unwrap();
        let p5 = QuadraticFormP::from_integers(Place::P(5), &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -2]]).unwrap();
        let q = QuadraticFormS::new(vec![real, p5], true).unwrap();
        let t = STime::new(6.0, vec![(5, 1)]).unwrap();
        let i = SInterval::integral(-0.5, 0.5, &[5]).unwrap();
        let c = count(&q, &i, &Region::unit_balls(&[5]), &t).unwrap();
        assert_eq!(c.undecided, 0);
        let mut want = 0;
        for x in -30i64..=30 {
            for y in -30i64..=30 {
                for z in -30i64..=30 {
                    if x * x + y * y + z * z > 900 {
                        continue;
                    }
                    let v = (x * x + y * y) as f64 - s2 * (z * z) as f64;
                    if (x * x + y * y - 2 * z * z).rem_euclid(25) == 0 && v > -12.5 && v < 12.5 {
                        want += 1;
                    }
                }
            }
        }
        assert_eq!(c.count, want);
    }
}
