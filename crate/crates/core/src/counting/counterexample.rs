//! Null vectors of `x1 x2 - x3²` with prescribed norms, their transport to
//! `q^α = y1² + y2² - α² y3²`, and the perturbation `α → β` that moves them into a
//! fixed value window.

use super::{count, plan::Tri};
use crate::error::{Error, Result};
use crate::padic::{rational_from_f64, rational_to_f64, sqrt_padic, valuation, PadicNumber, SScalar};
use crate::qform::{Place, QuadraticFormP, QuadraticFormS, Region, SInterval, STime};
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

const BETA_PRECISION: u32 = 40;

type Vec3 = [BigRational; 3];

/// Zeros `x = (aku², akv², akuv)` of `x1 x2 - x3²` and the map `A` onto zeros of `q^α`.
#[derive(Clone, Debug)]
pub struct NullVectors {
    pub alpha: BigRational,
    pub t: STime,
    /// `a = ∏ p^{-n_p}`.
    pub a: BigRational,
    pub x: Vec<Vec3>,
    /// `q^α(A x) = -4 r² q'(x)` for `α = r / s`.
    pub transform: [[BigInt; 3]; 3],
}

impl NullVectors {
    pub fn mapped(&self) -> Vec<Vec3> {
        self.x
            .iter()
            .map(|x| {
                std::array::from_fn(|i| {
                    (0..3).fold(BigRational::zero(), |acc, j| {
                        acc + BigRational::from_integer(self.transform[i][j].clone()) * &x[j]
                    })
                })
            })
            .collect()
    }

    /// Conditions (1)–(3): `q'(x) = 0`, `‖x_i‖_p = T_p` and `|x| ≤ T_∞`, checked exactly.
    pub fn check(&self, x: &Vec3) -> bool {
        if &x[0] * &x[1] != &x[2] * &x[2] {
            return false;
        }
        for &(p, n_p) in &self.t.exps {
            if x.iter().any(|c| valuation(c, p) != Some(-n_p)) {
                return false;
            }
        }
        let t = rational_from_f64(self.t.t_inf).expect("finite");
        let norm2 = x.iter().fold(BigRational::zero(), |acc, c| acc + c * c);
        norm2 <= &t * &t
    }
}

fn coprime_to(x: i64, primes: &[u64]) -> bool {
    primes.iter().all(|&p| x % p as i64 != 0)
}

/// All `x = (aku², akv², akuv)` with `gcd(u, v) = 1`, `u > 0`, `v ≠ 0`, `u, v, k` prime to
/// every `p ∈ S_f` and `|u|, |v| ≤ sqrt(T_∞ / 3ak)`.
pub fn null_vectors(alpha: &BigRational, t: &STime) -> Result<NullVectors> {
    let primes: Vec<u64> = t.exps.iter().map(|e| e.0).collect();
    let mut inv_a = BigInt::one();
    for &(p, n_p) in &t.exps {
        if n_p < 0 {
            return Err(Error::Invalid(format!("T_{} < 1", p)));
        }
        inv_a *= BigInt::from(p).pow(n_p as u32);
    }
    let a = BigRational::new(BigInt::one(), inv_a.clone());
    // T_∞ / 3a = T_∞ ∏ p^{n_p} / 3
    let reach = rational_from_f64(t.t_inf)? * BigRational::from_integer(inv_a) / BigRational::from_integer(3.into());
    let k_max = reach.floor().to_integer().to_i64().unwrap_or(0);
    let mut x = Vec::new();
    for k in (1..=k_max).filter(|&k| coprime_to(k, &primes)) {
        let bound = (&reach / BigRational::from_integer(k.into())).floor().to_integer().to_i64().unwrap();
        let u_max = bound.sqrt();
        let ak = &a * BigRational::from_integer(k.into());
        for u in (1..=u_max).filter(|&u| coprime_to(u, &primes)) {
            for v in (-u_max..=u_max).filter(|&v| v != 0 && coprime_to(v, &primes) && u.gcd(&v) == 1) {
                let r = |m: i64| &ak * BigRational::from_integer(m.into());
                x.push([r(u * u), r(v * v), r(u * v)]);
            }
        }
    }
    Ok(NullVectors { alpha: alpha.clone(), t: t.clone(), a, x, transform: hyperbolic_transform(alpha) })
}

/// The integer matrix `A` taking zeros of `x_1 x_2 - x_3²` to zeros of `q^α`, for `α = r/s`.
pub fn hyperbolic_transform(alpha: &BigRational) -> [[BigInt; 3]; 3] {
    let (r, s) = (alpha.numer().clone(), alpha.denom().clone());
    let z = BigInt::zero;
    [[-&r, r.clone(), z()], [z(), z(), BigInt::from(2) * &r], [s.clone(), s, z()]]
}

/// `β` with `β_∞² = α² - (1 + α²) T_∞^{-2}` and `β_p² = α² + u_p p^{2 n_p}`.
#[derive(Clone, Debug)]
pub struct PerturbedBeta {
    pub beta: SScalar,
    pub square_inf: BigRational,
    pub squares: Vec<(u64, BigRational)>,
}

impl PerturbedBeta {
    /// `q^β = y1² + y2² - β² y3²` at every place.
    pub fn form(&self) -> Result<QuadraticFormS> {
        let diag = |b2: &BigRational| {
            let o = BigRational::one;
            let z = BigRational::zero;
            vec![vec![o(), z(), z()], vec![z(), o(), z()], vec![z(), z(), -b2.clone()]]
        };
        let mut places = vec![QuadraticFormP::from_rational(Place::Inf, diag(&self.square_inf))?];
        for (p, b2) in &self.squares {
            places.push(QuadraticFormP::from_rational(Place::P(*p), diag(b2))?);
        }
        QuadraticFormS::new(places, false)
    }
}

/// Deterministic: the p-adic roots use the fixed sign convention of [`sqrt_padic`].
pub fn perturb_beta(alpha: &BigRational, t: &STime, units: &[(u64, i64)]) -> Result<PerturbedBeta> {
    let a2 = alpha * alpha;
    let tq = rational_from_f64(t.t_inf)?;
    let square_inf = &a2 - (BigRational::one() + &a2) / (&tq * &tq);
    if !square_inf.is_positive() {
        return Err(Error::NegativeSquare(rational_to_f64(&square_inf)));
    }
    let mut padic = Vec::new();
    let mut squares = Vec::new();
    for &(p, n_p) in &t.exps {
        let u = units.iter().find(|e| e.0 == p).map_or(1, |e| e.1);
        if u % p as i64 == 0 {
            return Err(Error::Invalid(format!("u_{} = {} is not a unit", p, u)));
        }
        let b2 = &a2 + BigRational::from_integer(BigInt::from(u) * BigInt::from(p).pow(2 * n_p as u32));
        let root = sqrt_padic(&PadicNumber::from_rational(p, &b2, BETA_PRECISION + 4), BETA_PRECISION)?;
        padic.push(root);
        squares.push((p, b2));
    }
    let beta = SScalar { real: rational_to_f64(&square_inf).sqrt(), padic, exact: None };
    Ok(PerturbedBeta { beta, square_inf, squares })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleRow {
    pub t_inf: f64,
    pub t_finite: Vec<(u64, f64)>,
    pub norm: f64,
    /// `‖T‖ (log ‖T‖)^{1-ε}`.
    pub target: f64,
    pub beta_inf: f64,
    pub beta_p: Vec<(u64, String)>,
    pub constructed: usize,
    /// Constructed vectors failing conditions (1)–(3).
    pub failed_conditions: usize,
    /// Transported null vectors inside the counting region.
    pub floor: u64,
    /// Transported vectors in the region that the enumeration missed.
    pub missed: u64,
    pub n: u64,
    pub undecided: u64,
    pub floor_exceeds: bool,
    pub n_exceeds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleTable {
    pub alpha: String,
    pub epsilon: f64,
    pub transform: Vec<Vec<String>>,
    pub rows: Vec<CounterexampleRow>,
    /// Least-squares slopes of `log N` and `log floor` against `log ‖T‖ + (1-ε) log log ‖T‖`.
    pub slope_n: Option<f64>,
    pub slope_floor: Option<f64>,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Least-squares slopes of `log N` and `log floor` against `log ‖T‖ + (1-ε) log log ‖T‖`.
pub fn growth_slopes(rows: &[CounterexampleRow], epsilon: f64) -> (Option<f64>, Option<f64>) {
    let z: Vec<f64> = rows.iter().map(|r| r.norm.ln() + (1.0 - epsilon) * r.norm.ln().ln()).collect();
    let ln = |v: u64| (v.max(1) as f64).ln();
    (
        slope(&z, &rows.iter().map(|r| ln(r.n)).collect::<Vec<_>>()),
        slope(&z, &rows.iter().map(|r| ln(r.floor)).collect::<Vec<_>>()),
    )
}

/// One table row: build `β`, count `q^β` in the window `I_∞ = (1/8, 2)`, `I_p = Z_p` with
/// unit balls, and transport the null vectors into it.
pub fn counterexample_row(alpha: &BigRational, epsilon: f64, t: &STime, units: &[(u64, i64)]) -> Result<CounterexampleRow> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Invalid("epsilon must lie in (0, 1)".into()));
    }
    let primes: Vec<u64> = t.exps.iter().map(|e| e.0).collect();
    let nv = null_vectors(alpha, t)?;
    let beta = perturb_beta(alpha, t, units)?;
    let q = beta.form()?;
    let interval = SInterval::integral(0.125, 2.0, &primes)?;
    let region = Region::unit_balls(&primes);
    let c = count(&q, &interval, &region, t)?;
    let d = BigRational::from_integer(BigInt::from(c.plan.denominator));
    let failed = nv.x.iter().filter(|x| !nv.check(x)).count();
    let (mut floor, mut missed) = (0u64, 0u64);
    for y in nv.mapped() {
        if !in_window(&y, &beta, t) {
            continue;
        }
        floor += 1;
        let w: Option<Vec<i64>> =
            y.iter().map(|c| c * &d).map(|c| c.is_integer().then(|| c.to_integer().to_i64()).flatten()).collect();
        if w.map_or(true, |w| c.plan.accepts(&w) != Tri::Yes) {
            missed += 1;
        }
    }
    let norm = t.norm();
    let target = norm * norm.ln().powf(1.0 - epsilon);
    Ok(CounterexampleRow {
        t_inf: t.t_inf,
        t_finite: t.exps.iter().map(|&(p, e)| (p, (p as f64).powi(e as i32))).collect(),
        norm,
        target,
        beta_inf: beta.beta.real,
        beta_p: beta.beta.padic.iter().map(|b| (b.p(), format!("{:?}", b.digits()))).collect(),
        constructed: nv.x.len(),
        failed_conditions: failed,
        floor,
        missed,
        n: c.count,
        undecided: c.undecided,
        floor_exceeds: floor as f64 > target,
        n_exceeds: c.count as f64 > target,
    })
}

pub fn counterexample_experiment(
    alpha: &BigRational,
    epsilon: f64,
    ts: &[STime],
    units: &[(u64, i64)],
) -> Result<CounterexampleTable> {
    let rows = ts.iter().map(|t| counterexample_row(alpha, epsilon, t, units)).collect::<Result<Vec<_>>>()?;
    let (slope_n, slope_floor) = growth_slopes(&rows, epsilon);
    let transform = hyperbolic_transform(alpha).iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    Ok(CounterexampleTable { alpha: alpha.to_string(), epsilon, transform, rows, slope_n, slope_floor })
}

/// Exact test of `q^β(y) ∈ (1/8, 2)`, `q^β(y) ∈ Z_p`, `‖y‖_p ≤ T_p` and `|y| ≤ T_∞`.
fn in_window(y: &Vec3, beta: &PerturbedBeta, t: &STime) -> bool {
    let qv = |b2: &BigRational| &y[0] * &y[0] + &y[1] * &y[1] - b2 * &y[2] * &y[2];
    let v = qv(&beta.square_inf);
    let lo = BigRational::new(1.into(), 8.into());
    let hi = BigRational::from_integer(2.into());
    if !(v > lo && v < hi) {
        return false;
    }
    let tq = rational_from_f64(t.t_inf).expect("finite");
    if y.iter().fold(BigRational::zero(), |a, c| a + c * c) > &tq * &tq {
        return false;
    }
    for (p, b2) in &beta.squares {
        let n_p = t.exp(*p);
        if y.iter().any(|c| valuation(c, *p).is_some_and(|v| v < -n_p)) {
            return false;
        }
        if valuation(&qv(b2), *p).is_some_and(|v| v < 0) {
            return false;
        }
    }
    true
}
