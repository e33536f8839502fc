use super::congruence::{inv_mod_i128, SqrtTable};
use crate::error::{Error, Result};
use crate::padic::{pow_big, rational_from_f64, PadicNumber};
use crate::qform::{FiniteRegion, QuadraticFormS, RealRegion, Region, SInterval, STime};
use crate::volume::IntegralForm;
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use std::sync::Arc;

const COMPAT_TABLE_MAX: u64 = 1 << 16;
const SQRT_TABLE_MAX: i64 = 1 << 20;

/// Three-valued membership for tests that may be undecidable in floating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug)]
pub(crate) enum RealTest {
    /// `lo ≤ Σ g_ij w_i w_j ≤ hi` in exact integers.
    Exact { g: Vec<Vec<i128>>, lo: i128, hi: i128 },
    /// `lo < Σ g_ij w_i w_j < hi` in floating point with a rounding budget.
    Float { g: Vec<Vec<f64>>, lo: f64, hi: f64 },
}

/// Which prefixes `w mod p^j` admit a last coordinate solving the congruence.
#[derive(Clone, Debug)]
pub(crate) struct Compat {
    pub pj: i64,
    pub ok: Vec<bool>,
}

impl Compat {
    pub fn index(&self, prefix: &[i64]) -> usize {
        prefix.iter().rev().fold(0usize, |acc, &w| acc * self.pj as usize + w.rem_euclid(self.pj) as usize)
    }
}

/// `P_p(w) ≡ t mod p^k`, coefficients permuted into plan order.
#[derive(Clone, Debug)]
pub(crate) struct PrimeTest {
    pub p: u64,
    pub k: u32,
    pub m: i128,
    /// `P = Σ s_ii w_i² + Σ_{i<j} s_ij w_i w_j`, symmetric storage.
    pub s: Vec<Vec<i128>>,
    pub t: i128,
    /// Present when the last coefficient is a unit: `(table, (2α)^{-1} mod p^k)`.
    pub sqrt: Option<(Arc<SqrtTable>, i128)>,
    pub compat: Option<Compat>,
}

#[derive(Clone, Debug)]
pub(crate) enum VectorCheck {
    Radial { scale: f64, region: RealRegion },
    PadicNorm { p: u64, e: i64, n_p: i64, region: FiniteRegion },
}

/// How `count_N` enumerates `v = w / D` with `w ∈ Z^n`.
#[derive(Clone, Debug)]
pub struct EnumerationPlan {
    pub n: usize,
    /// `D = ∏ p^{e_p}`.
    pub denominator: i64,
    pub denominator_exps: Vec<(u64, i64)>,
    /// `|w_i| ≤ B_∞`.
    pub box_bound: i64,
    /// `order[i]` is the original coordinate at position `i`; the last one is resolved
    /// in closed form.
    pub order: Vec<usize>,
    /// Congruence levels `ℓ_p` deciding `q(w/D) ∈ I_p`.
    pub levels: Vec<(u64, u32)>,
    /// Fraction of prefix residues that survive striding.
    pub pruning: f64,
    /// Dry-run estimate of visited prefixes.
    pub estimated_prefixes: f64,
    pub(crate) radius_sq: i128,
    pub(crate) real: RealTest,
    pub(crate) primes: Vec<PrimeTest>,
    pub(crate) checks: Vec<VectorCheck>,
    pub(crate) empty: bool,
}

fn floor_big(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

fn clamp_i128(x: &BigInt) -> i128 {
    x.to_i128().unwrap_or(if x.is_negative() { i128::MIN / 4 } else { i128::MAX / 4 })
}

fn real_test(q: &QuadraticFormS, interval: &SInterval, d: i64) -> Result<RealTest> {
    let real = q.real();
    let exact: Option<Vec<Vec<BigRational>>> = match real.exact() {
        Some(e) => Some(e.clone()),
        None if !q.irrational => {
            let g = real.gram_real().unwrap();
            let r: Vec<Vec<BigRational>> =
                g.iter().map(|row| row.iter().map(|&x| rational_from_f64(x)).collect::<Result<_>>()).collect::<Result<_>>()?;
            let small = r.iter().flatten().all(|x| x.denom().bits() <= 24 && x.numer().bits() <= 60);
            small.then_some(r)
        }
        None => None,
    };
    let d2 = BigRational::from_integer(BigInt::from(d) * BigInt::from(d));
    if let Some(e) = exact {
        let l = e.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let lq = BigRational::from_integer(l.clone());
        let mut g = Vec::new();
        for row in &e {
            let mut out = Vec::new();
            for x in row {
                let v = (x * &lq).to_integer();
                out.push(v.to_i128().filter(|v| v.abs() < 1 << 60).ok_or_else(|| {
                    Error::Invalid("real coefficients too large for exact enumeration".into())
                })?);
            }
            g.push(out);
        }
        let a = rational_from_f64(interval.a_inf)? * &lq * &d2;
        let b = rational_from_f64(interval.b_inf)? * &lq * &d2;
        let lo = clamp_i128(&(floor_big(&a) + 1));
        let hi = clamp_i128(&(-floor_big(&-b) - 1));
        return Ok(RealTest::Exact { g, lo, hi });
    }
    let d2f = (d as f64) * (d as f64);
    Ok(RealTest::Float {
        g: real.gram_real().unwrap().clone(),
        lo: interval.a_inf * d2f,
        hi: interval.b_inf * d2f,
    })
}

/// Symmetric coefficient storage for `P` from its upper-triangular form.
fn symmetric(c: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = c.len();
    let mut s = vec![vec![0; n]; n];
    for i in 0..n {
        for j in i..n {
            s[i][j] = c[i][j];
            s[j][i] = c[i][j];
        }
    }
    s
}

fn permute<T: Clone>(g: &[Vec<T>], order: &[usize]) -> Vec<Vec<T>> {
    order.iter().map(|&i| order.iter().map(|&j| g[i][j].clone()).collect()).collect()
}

/// Evaluates `P` at a residue vector modulo `m`.
fn eval_mod(s: &[Vec<i128>], w: &[i128], m: i128) -> i128 {
    let n = w.len();
    let mut acc = 0i128;
    for i in 0..n {
        acc = (acc + s[i][i] * (w[i] * w[i] % m)) % m;
        for j in i + 1..n {
            acc = (acc + s[i][j] * (w[i] * w[j] % m)) % m;
        }
    }
    acc.rem_euclid(m)
}

fn compat_table(p: u64, k: u32, s: &[Vec<i128>], t: i128) -> Option<Compat> {
    let n = s.len();
    if n < 2 {
        return None;
    }
    let mut j = 0u32;
    while j < k && (p as u128).pow((j + 1) * (n as u32 - 1)) <= COMPAT_TABLE_MAX as u128 {
        j += 1;
    }
    if j == 0 {
        return None;
    }
    let pj = (p as i64).pow(j);
    let size = (pj as usize).pow(n as u32 - 1);
    let m = pj as i128;
    let tj = t.rem_euclid(m);
    let mut ok = vec![false; size];
    let mut w = vec![0i128; n];
    for (idx, slot) in ok.iter_mut().enumerate() {
        let mut rest = idx;
        for c in w.iter_mut().take(n - 1) {
            *c = (rest % pj as usize) as i128;
            rest /= pj as usize;
        }
        *slot = (0..m).any(|x| {
            w[n - 1] = x;
            eval_mod(s, &w, m) == tj
        });
    }
    Some(Compat { pj, ok })
}

enum Congruence {
    Always,
    Never,
    Mod { k: u32, coeffs: Vec<Vec<i128>>, t: i128 },
}

fn congruence(
    q: &QuadraticFormS,
    p: u64,
    interval: &SInterval,
    e_p: i64,
    d_unit: &BigInt,
) -> Result<Congruence> {
    let f = q.finite().iter().find(|f| f.prime() == Some(p)).unwrap();
    let int = IntegralForm::new(f)?;
    let (center, b) = match interval.at(p) {
        Some(i) => (i.center.clone(), i.b),
        None => (PadicNumber::zero(p), 0),
    };
    let k = 2 * e_p + b + int.scale;
    // c = p^s D² a
    let c = if center.is_exact_zero() {
        center.clone()
    } else {
        let du = PadicNumber::from_bigint(p, &(d_unit * d_unit), center.prec().max(1) + 8);
        (&center * &du).shift(int.scale + 2 * e_p)
    };
    if k <= 0 {
        if c.is_exact_zero() || c.val_lower_bound() >= k {
            return Ok(Congruence::Always);
        }
        if c.valuation().is_some() {
            return Ok(Congruence::Never);
        }
        return Err(Error::PrecisionExhausted(format!("interval centre at {} too coarse", p)));
    }
    if !c.is_exact_zero() && c.valuation().is_some_and(|v| v < 0) {
        return Ok(Congruence::Never);
    }
    let k = k as u32;
    let t: i128 = c.residue(k)?.try_into().expect("residue fits");
    let coeffs = int.coefficient_residues(k)?;
    Ok(Congruence::Mod { k, coeffs, t })
}

fn radius_sq(region: &RealRegion, t_inf: f64, d: i64) -> Result<i128> {
    let r = rational_from_f64(t_inf)? * rational_from_f64(region.max())? * BigRational::from_integer(BigInt::from(d));
    let k = floor_big(&(&r * &r));
    k.to_i128().filter(|k| *k < 1 << 100).ok_or_else(|| Error::Invalid("enumeration box too large".into()))
}

impl EnumerationPlan {
    pub fn new(q: &QuadraticFormS, interval: &SInterval, region: &Region, t: &STime) -> Result<Self> {
        let n = q.n();
        let primes = q.primes();
        for &(p, e) in &t.exps {
            if !primes.contains(&p) {
                return Err(Error::Invalid(format!("T given at {} outside S", p)));
            }
            if e < 0 {
                return Err(Error::Invalid(format!("n_{} = {} < 0 is not supported", p, e)));
            }
        }
        for f in &interval.finite {
            if !primes.contains(&f.p) {
                return Err(Error::Invalid(format!("interval given at {} outside S", f.p)));
            }
        }
        if region.inf.max() <= 0.0 {
            return Err(Error::Invalid("real region must have positive radius".into()));
        }
        let mut checks = Vec::new();
        if let RealRegion::Radial { .. } = region.inf {
            checks.push(VectorCheck::Radial { scale: 0.0, region: region.inf.clone() });
        }
        let mut d: i64 = 1;
        let mut denominator_exps = Vec::new();
        for &p in &primes {
            let rho = region.at(p);
            rho.validate(p, n)?;
            let n_p = t.exp(p);
            let exps = rho.exps();
            let e_p = (n_p + exps[exps.len() - 1]).max(0);
            if e_p > n_p + exps[0] {
                checks.push(VectorCheck::PadicNorm { p, e: e_p, n_p, region: rho });
            }
            d = (p as i64)
                .checked_pow(e_p as u32)
                .and_then(|x| d.checked_mul(x))
                .filter(|d| *d < 1 << 31)
                .ok_or_else(|| Error::Invalid("common denominator too large".into()))?;
            denominator_exps.push((p, e_p));
        }
        for c in checks.iter_mut() {
            if let VectorCheck::Radial { scale, .. } = c {
                *scale = t.t_inf * d as f64;
            }
        }
        let k2 = radius_sq(&region.inf, t.t_inf, d)?;
        let box_bound = k2.sqrt() as i64;
        let real = real_test(q, interval, d)?;
        let mut empty = interval.is_empty_inf();
        let mut congr = Vec::new();
        for &(p, e_p) in &denominator_exps {
            let d_unit = BigInt::from(d) / pow_big(p, e_p as u32);
            match congruence(q, p, interval, e_p, &d_unit)? {
                Congruence::Always => {}
                Congruence::Never => empty = true,
                Congruence::Mod { k, coeffs, t } => congr.push((p, k, symmetric(&coeffs), t)),
            }
        }
        let levels = congr.iter().map(|c| (c.0, c.1)).collect();

        let a_real = |j: usize| match &real {
            RealTest::Exact { g, .. } => g[j][j] != 0,
            RealTest::Float { g, .. } => g[j][j] != 0.0,
        };
        let mut best: Option<((usize, bool, i64, usize), Vec<usize>, Vec<PrimeTest>, f64)> = None;
        for j in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            order.push(j);
            let mut tests = Vec::new();
            let mut frac = 1.0;
            let mut units = 0;
            for (p, k, s, t) in &congr {
                let s = permute(s, &order);
                let m = (*p as i128).pow(*k);
                let alpha = s[n - 1][n - 1];
                let sqrt = if alpha % *p as i128 != 0 && m <= SQRT_TABLE_MAX as i128 {
                    units += 1;
                    Some((Arc::new(SqrtTable::new(*p, *k)), inv_mod_i128(2 * alpha, m).unwrap()))
                } else {
                    if alpha % *p as i128 != 0 {
                        units += 1;
                    }
                    None
                };
                let compat = compat_table(*p, *k, &s, *t);
                if let Some(c) = &compat {
                    frac *= c.ok.iter().filter(|&&b| b).count() as f64 / c.ok.len() as f64;
                }
                tests.push(PrimeTest { p: *p, k: *k, m, s, t: *t, sqrt, compat });
            }
            let key = (units, a_real(j), -((frac * 1e6) as i64), j);
            if best.as_ref().map_or(true, |b| key > b.0) {
                best = Some((key, order, tests, frac));
            }
        }
        let (_, order, tests, pruning) = best.unwrap();
        let real = match real {
            RealTest::Exact { g, lo, hi } => RealTest::Exact { g: permute(&g, &order), lo, hi },
            RealTest::Float { g, lo, hi } => RealTest::Float { g: permute(&g, &order), lo, hi },
        };
        let ball = unit_ball_volume(n - 1) * (box_bound as f64).powi(n as i32 - 1);
        Ok(EnumerationPlan {
            n,
            denominator: d,
            denominator_exps,
            box_bound,
            order,
            levels,
            pruning,
            estimated_prefixes: ball * pruning,
            radius_sq: k2,
            real,
            primes: tests,
            checks,
            empty,
        })
    }

    /// Prefix `w_{order[0..n-1]}` in plan order.
    fn prefix_of(&self, w: &[i64]) -> Vec<i64> {
        self.order[..self.n - 1].iter().map(|&i| w[i]).collect()
    }

    /// True when striding never visits the prefix of `w` (original coordinates).
    pub fn skipped_by_striding(&self, w: &[i64]) -> bool {
        let prefix = self.prefix_of(w);
        !self.primes.iter().all(|pt| pt.compat.as_ref().map_or(true, |c| c.ok[c.index(&prefix)]))
    }

    /// `q(w / D)` tested against `I_∞` and `I_p` and `w / D ∈ TΩ`, for `w` in original
    /// coordinates.
    pub fn accepts(&self, w: &[i64]) -> Tri {
        if self.empty {
            return Tri::No;
        }
        let norm2: i128 = w.iter().map(|&x| x as i128 * x as i128).sum();
        if norm2 > self.radius_sq {
            return Tri::No;
        }
        let pw: Vec<i64> = self.order.iter().map(|&i| w[i]).collect();
        for pt in &self.primes {
            let r: Vec<i128> = pw.iter().map(|&x| (x as i128).rem_euclid(pt.m)).collect();
            if eval_mod(&pt.s, &r, pt.m) != pt.t.rem_euclid(pt.m) {
                return Tri::No;
            }
        }
        let real = self.real_value(&pw);
        if real == Tri::No {
            return Tri::No;
        }
        match (real, self.vector_checks(w)) {
            (_, Tri::No) => Tri::No,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }

    fn real_value(&self, pw: &[i64]) -> Tri {
        match &self.real {
            RealTest::Exact { g, lo, hi } => {
                let v = quad_i128(g, pw);
                if *lo <= v && v <= *hi {
                    Tri::Yes
                } else {
                    Tri::No
                }
            }
            RealTest::Float { g, lo, hi } => {
                let n = pw.len();
                let (mut v, mut abs) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let t = g[i][j] * pw[i] as f64 * pw[j] as f64;
                        v += t;
                        abs += t.abs();
                    }
                }
                float_between(v, float_budget(n, abs), *lo, *hi)
            }
        }
    }

    pub(crate) fn vector_checks(&self, w: &[i64]) -> Tri {
        let mut out = Tri::Yes;
        for c in &self.checks {
            match c.check(w) {
                Tri::No => return Tri::No,
                Tri::Unknown => out = Tri::Unknown,
                Tri::Yes => {}
            }
        }
        out
    }
}

impl VectorCheck {
    fn check(&self, w: &[i64]) -> Tri {
        if w.iter().all(|&x| x == 0) {
            return Tri::Yes;
        }
        match self {
            VectorCheck::Radial { scale, region } => {
                let r = w.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
                let dir: Vec<f64> = w.iter().map(|&x| x as f64 / r).collect();
                let bound = scale * region.rho(&dir);
                if r < bound * (1.0 - 1e-12) {
                    Tri::Yes
                } else if r > bound * (1.0 + 1e-12) {
                    Tri::No
                } else {
                    Tri::Unknown
                }
            }
            VectorCheck::PadicNorm { p, e, n_p, region } => {
                let pi = *p as i64;
                let v = w
                    .iter()
                    .filter(|&&x| x != 0)
                    .map(|&x| {
                        let mut x = x;
                        let mut v = 0;
                        while x % pi == 0 {
                            x /= pi;
                            v += 1;
                        }
                        v
                    })
                    .min()
                    .unwrap();
                let level = region.level();
                let m = (pi as i128).pow(level);
                let scale = (pi as i128).pow(v as u32);
                let u: Vec<u64> = w.iter().map(|&x| ((x as i128 / scale).rem_euclid(m)) as u64).collect();
                if e - v <= n_p + region.exp_at(&u) {
                    Tri::Yes
                } else {
                    Tri::No
                }
            }
        }
    }
}

pub(crate) fn quad_i128(g: &[Vec<i128>], w: &[i64]) -> i128 {
    let n = w.len();
    let mut v = 0i128;
    for i in 0..n {
        let mut row = 0i128;
        for j in 0..n {
            row += g[i][j] * w[j] as i128;
        }
        v += row * w[i] as i128;
    }
    v
}

/// Rounding bound for a sum of `n²` products whose absolute values total `abs`.
pub(crate) fn float_budget(n: usize, abs: f64) -> f64 {
    4.0 * ((n * n + 4) as f64) * f64::EPSILON * abs
}

pub(crate) fn float_between(v: f64, err: f64, lo: f64, hi: f64) -> Tri {
    let above = if lo == f64::NEG_INFINITY {
        Tri::Yes
    } else {
        let slack = err + lo.abs() * f64::EPSILON;
        if v - slack > lo {
            Tri::Yes
        } else if v + slack < lo {
            Tri::No
        } else {
            Tri::Unknown
        }
    };
    let below = if hi == f64::INFINITY {
        Tri::Yes
    } else {
        let slack = err + hi.abs() * f64::EPSILON;
        if v + slack < hi {
            Tri::Yes
        } else if v - slack > hi {
            Tri::No
        } else {
            Tri::Unknown
        }
    };
    match (above, below) {
        (Tri::No, _) | (_, Tri::No) => Tri::No,
        (Tri::Yes, Tri::Yes) => Tri::Yes,
        _ => Tri::Unknown,
    }
}

fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}
