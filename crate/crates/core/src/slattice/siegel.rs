use super::reduce::fincke_pohst;
use super::SLattice;
use crate::error::Result;
use crate::padic::{cartan_valuations, pow_big, rational_from_f64, rational_to_f64, PadicNumber};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallNorm {
    Euclidean,
    Sup,
}

/// `{‖v_∞‖ ≤ R} × ∏_p {‖v_p‖_p ≤ p^{m_p}}`; primes not listed get `m_p = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallProduct {
    pub r_inf: f64,
    pub norm: BallNorm,
    pub exps: Vec<(u64, i64)>,
}

impl BallProduct {
    pub fn new(r_inf: f64, norm: BallNorm, exps: Vec<(u64, i64)>) -> Self {
        BallProduct { r_inf, norm, exps }
    }

    pub fn exp(&self, p: u64) -> i64 {
        self.exps.iter().find(|e| e.0 == p).map_or(0, |e| e.1)
    }

    /// Euclidean radius of a ball containing the real factor.
    fn outer_radius(&self, n: usize) -> f64 {
        match self.norm {
            BallNorm::Euclidean => self.r_inf,
            BallNorm::Sup => self.r_inf * (n as f64).sqrt(),
        }
    }

    /// `∏_p p^{m_p}` over the primes of `S`.
    fn scale(&self, primes: &[u64]) -> f64 {
        primes.iter().map(|&p| (p as f64).powi(self.exp(p) as i32)).product()
    }
}

/// Lattice points in a ball product; points whose p-adic membership cannot be decided
/// at the available precision are reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SiegelCount {
    pub count: u64,
    pub indeterminate: u64,
}

const POINT_BUDGET: usize = 50_000_000;

fn inside_exact(v: &[BigRational], ball: &BallProduct, r: &BigRational) -> bool {
    match ball.norm {
        BallNorm::Euclidean => v.iter().map(|x| x * x).sum::<BigRational>() <= r * r,
        BallNorm::Sup => v.iter().all(|x| x.abs() <= *r),
    }
}

fn inside_f64(v: &[f64], ball: &BallProduct) -> bool {
    match ball.norm {
        BallNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>() <= ball.r_inf * ball.r_inf,
        BallNorm::Sup => v.iter().all(|x| x.abs() <= ball.r_inf),
    }
}

/// `f̃(Δ) = Σ_{v ∈ Δ} f(v)` for the indicator of a ball product, by enumerating
/// `x ∈ Z^n` with `A_∞ x / D` in the real ball and testing `A_p x / D` at each prime.
///
/// `D = ∏ p^{m_p + μ_p}` where `p^{-μ_p}` bounds the entries of `A_p^{-1}`.
pub fn siegel_transform(ball: &BallProduct, delta: &SLattice) -> Result<SiegelCount> {
    let n = delta.n();
    if ball.r_inf < 0.0 {
        return Ok(SiegelCount::default());
    }
    let mut d_exp: Vec<(u64, i64)> = Vec::new();
    for &p in delta.primes() {
        let ap = delta.padic_basis(p).unwrap();
        let lam = cartan_valuations(ap)?;
        let mu = lam.iter().copied().max().unwrap_or(0).max(0);
        d_exp.push((p, (ball.exp(p) + mu).max(0)));
    }
    let d_f: f64 = d_exp.iter().map(|&(p, e)| (p as f64).powi(e as i32)).product();
    let d_big: BigInt = d_exp.iter().fold(BigInt::from(1), |acc, &(p, e)| acc * pow_big(p, e as u32));
    // rows: real images of e_k / D
    let real = delta.real_basis();
    let rows: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|i| real[i][k] / d_f).collect()).collect();
    let exact_rows: Option<Vec<Vec<BigRational>>> = delta.exact_basis().map(|a| {
        (0..n)
            .map(|k| (0..n).map(|i| &a[i][k] / BigRational::from_integer(d_big.clone())).collect())
            .collect()
    });
    let r_exact = rational_from_f64(ball.r_inf)?;
    let outer = ball.outer_radius(n);
    let mut out = SiegelCount { count: 1, indeterminate: 0 };
    fincke_pohst(&rows, outer * outer * (1.0 + 1e-9), false, POINT_BUDGET, |x| {
        let real_ok = match &exact_rows {
            Some(er) => {
                let v: Vec<BigRational> = (0..n)
                    .map(|i| x.iter().zip(er).filter(|(c, _)| **c != 0).map(|(c, r)| BigRational::from_integer((*c).into()) * &r[i]).sum())
                    .collect();
                inside_exact(&v, ball, &r_exact)
            }
            None => {
                let v: Vec<f64> = (0..n).map(|i| x.iter().zip(&rows).map(|(c, r)| *c as f64 * r[i]).sum()).collect();
                inside_f64(&v, ball)
            }
        };
        if !real_ok {
            return;
        }
        let mut undecided = false;
        for &(p, de) in &d_exp {
            let ap = delta.padic_basis(p).unwrap();
            let floor = -ball.exp(p) + de;
            let xs: Vec<PadicNumber> = x.iter().map(|&c| PadicNumber::from_int(p, c, ap[0][0].prec().max(1))).collect();
            for row in ap {
                let w = row.iter().zip(&xs).fold(PadicNumber::zero(p), |acc, (a, b)| &acc + &(a * b));
                match w.valuation() {
                    Some(v) if v < floor => return,
                    Some(_) => {}
                    None if w.is_exact_zero() || w.val_lower_bound() >= floor => {}
                    None => undecided = true,
                }
            }
        }
        if undecided {
            out.indeterminate += 1;
        } else {
            out.count += 1;
        }
    })?;
    Ok(out)
}

/// The same count through `π`: lattice points of the real lattice `∏ p^{-m_p} · π(Δ)`.
/// Needs a rational basis.
pub fn siegel_transform_projected(ball: &BallProduct, delta: &SLattice) -> Result<u64> {
    let n = delta.n();
    if ball.r_inf < 0.0 {
        return Ok(0);
    }
    let exps: Vec<(u64, i64)> = delta.primes().iter().map(|&p| (p, ball.exp(p))).collect();
    let basis = delta.integral_real_basis(&exps)?;
    let rows: Vec<Vec<f64>> = basis.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect();
    let r_exact = rational_from_f64(ball.r_inf)?;
    let outer = ball.outer_radius(n);
    let mut count = 1u64;
    fincke_pohst(&rows, outer * outer * (1.0 + 1e-9), false, POINT_BUDGET, |x| {
        let v: Vec<BigRational> = (0..n)
            .map(|i| x.iter().zip(&basis).filter(|(c, _)| **c != 0).map(|(c, r)| BigRational::from_integer((*c).into()) * &r[i]).sum())
            .collect();
        if inside_exact(&v, ball, &r_exact) {
            count += 1;
        }
    })?;
    Ok(count)
}

/// `c` with `f̃(Δ) ≤ c·α(Δ)` for every unimodular `Δ`, from Henk's bound
/// `#(K ∩ Λ) ≤ 2^{n-1} ∏ ⌊2/λ_i(K) + 1⌋` and `λ_1⋯λ_j ≥ 1/α_j`.
pub fn schmidt_constant(ball: &BallProduct, primes: &[u64], n: usize) -> f64 {
    let r = ball.outer_radius(n) * ball.scale(primes);
    2f64.powi(n as i32 - 1) * (4.0 * r).max(1.0).powi(n as i32)
}
