//! Random counting instances and a brute-force enumerator that checks every condition
//! directly on `v = w / D` with exact integer and rational arithmetic.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use sadic_core::linalg::{det, q, qi, QMat};
use sadic_core::padic::PadicNumber;
use sadic_core::qform::{
    FiniteRegion, PadicInterval, Place, QuadraticFormP, QuadraticFormS, RealRegion, Region, SInterval, STime,
};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum RealGram {
    Rational(QMat),
    Float(Vec<Vec<f64>>),
}

#[derive(Clone, Debug)]
pub enum RealShape {
    Ball(f64),
    /// `ρ(x) = 1 + c x_1²`.
    Bump(f64),
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub primes: Vec<u64>,
    pub real: RealGram,
    pub padic: Vec<(u64, QMat)>,
    pub t_inf: f64,
    pub exps: Vec<(u64, i64)>,
    pub a: f64,
    pub b: f64,
    pub centres: Vec<(u64, BigRational, i64)>,
    pub shape: RealShape,
    pub finite: Vec<(u64, FiniteRegion)>,
}

impl Instance {
    pub fn form(&self) -> QuadraticFormS {
        let (real, irrational) = match &self.real {
            RealGram::Rational(g) => (QuadraticFormP::from_rational(Place::Inf, g.clone()).unwrap(), false),
            RealGram::Float(g) => (QuadraticFormP::real(g.clone()).unwrap(), true),
        };
        let mut places = vec![real];
        for (p, g) in &self.padic {
            places.push(QuadraticFormP::from_rational(Place::P(*p), g.clone()).unwrap());
        }
        QuadraticFormS::new(places, irrational).unwrap()
    }

    pub fn interval(&self) -> SInterval {
        let finite = self
            .centres
            .iter()
            .map(|(p, c, b)| PadicInterval { p: *p, center: PadicNumber::from_rational(*p, c, 30), b: *b })
            .collect();
        SInterval::new(self.a, self.b, finite).unwrap()
    }

    pub fn region(&self) -> Region {
        let inf = match self.shape {
            RealShape::Ball(r) => RealRegion::Ball(r),
            RealShape::Bump(c) => RealRegion::Radial { rho: Arc::new(move |x: &[f64]| 1.0 + c * x[0] * x[0]), max: 1.0 + c },
        };
        Region { inf, finite: self.finite.clone() }
    }

    pub fn time(&self) -> STime {
        STime::new(self.t_inf, self.exps.clone()).unwrap()
    }

    fn rho_max(&self) -> f64 {
        match self.shape {
            RealShape::Ball(r) => r,
            RealShape::Bump(c) => 1.0 + c,
        }
    }

    fn exp(&self, p: u64) -> i64 {
        self.exps.iter().find(|e| e.0 == p).map_or(0, |e| e.1)
    }

    fn finite_at(&self, p: u64) -> FiniteRegion {
        self.finite.iter().find(|f| f.0 == p).map_or(FiniteRegion::Ball(0), |f| f.1.clone())
    }

    /// Denominator `D` such that every counted `v` lies in `D^{-1} Z^n`.
    pub fn denominator(&self) -> i64 {
        self.primes
            .iter()
            .map(|&p| {
                let top = *self.finite_at(p).exps().last().unwrap();
                (p as i64).pow((self.exp(p) + top).max(0) as u32)
            })
            .product()
    }

    pub fn box_bound(&self) -> i64 {
        (self.t_inf * self.rho_max() * self.denominator() as f64).floor() as i64
    }
}

fn val(mut x: i128, p: u64) -> i64 {
    let p = p as i128;
    let mut v = 0;
    while x != 0 && x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn small(x: &BigRational) -> (i128, i128) {
    (x.numer().to_i128().unwrap(), x.denom().to_i128().unwrap())
}

/// `L G` with integer entries and the common denominator `L`.
fn integral(g: &QMat) -> (Vec<Vec<i128>>, i128) {
    let l = g.iter().flatten().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let lg = g
        .iter()
        .map(|r| r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer().to_i128().unwrap()).collect())
        .collect();
    (lg, l.to_i128().unwrap())
}

fn quad_int(g: &[Vec<i128>], w: &[i64]) -> i128 {
    let mut s = 0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            s += g[i][j] * w[i] as i128 * w[j] as i128;
        }
    }
    s
}

enum RealCheck {
    /// `q(v) = X / (L D²)` with `X = wᵗ (L G) w`.
    Int { g: Vec<Vec<i128>>, l: i128, a: (i128, i128), b: (i128, i128) },
    Big { g: QMat, a: BigRational, b: BigRational },
}

/// Precomputed data for the direct membership test.
pub struct Oracle<'a> {
    inst: &'a Instance,
    d: i128,
    /// `floor((T_∞ ρ D)²)`.
    radius_sq: i128,
    real: RealCheck,
    padic: Vec<(u64, Vec<Vec<i128>>, i128, (i128, i128), i64)>,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let real = match &inst.real {
            RealGram::Rational(g) => {
                let (g, l) = integral(g);
                RealCheck::Int { g, l, a: small(&rat(inst.a)), b: small(&rat(inst.b)) }
            }
            RealGram::Float(g) => RealCheck::Big {
                g: g.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect(),
                a: rat(inst.a),
                b: rat(inst.b),
            },
        };
        let padic = inst
            .padic
            .iter()
            .map(|(p, g)| {
                let (g, l) = integral(g);
                let (c, b) = inst
                    .centres
                    .iter()
                    .find(|x| x.0 == *p)
                    .map_or((BigRational::zero(), 0), |x| (x.1.clone(), x.2));
                (*p, g, l, small(&c), b)
            })
            .collect();
        let d = inst.denominator() as i128;
        let r = rat(inst.t_inf) * rat(inst.rho_max()) * BigRational::from_integer(d.into());
        let radius_sq = (&r * &r).floor().to_integer().to_i128().unwrap();
        Oracle { inst, d, radius_sq, real, padic }
    }

    /// Real norm condition `|v| ≤ T_∞ ρ(v / |v|)`.
    pub fn real_norm_ok(&self, w: &[i64]) -> bool {
        let n2: i128 = w.iter().map(|&x| x as i128 * x as i128).sum();
        match self.inst.shape {
            RealShape::Ball(_) => n2 <= self.radius_sq,
            RealShape::Bump(c) => {
                if n2 == 0 {
                    return true;
                }
                let r = (n2 as f64).sqrt();
                r / self.d as f64 <= self.inst.t_inf * (1.0 + c * (w[0] as f64 / r).powi(2))
            }
        }
    }

    pub fn real_value_ok(&self, w: &[i64]) -> bool {
        let d2 = self.d * self.d;
        match &self.real {
            RealCheck::Int { g, l, a, b } => {
                let x = quad_int(g, w);
                x * a.1 > a.0 * l * d2 && x * b.1 < b.0 * l * d2
            }
            RealCheck::Big { g, a, b } => {
                let v: Vec<BigRational> = w.iter().map(|&x| BigRational::new(x.into(), self.d.into())).collect();
                let mut s = BigRational::zero();
                for i in 0..v.len() {
                    for j in 0..v.len() {
                        s += &g[i][j] * &v[i] * &v[j];
                    }
                }
                &s > a && &s < b
            }
        }
    }

    /// `q_p(v) ∈ a_p + p^{b_p} Z_p` at `p`.
    pub fn padic_value_ok(&self, w: &[i64], p: u64) -> bool {
        let (_, g, l, c, b) = self.padic.iter().find(|x| x.0 == p).unwrap();
        let den = l * self.d * self.d;
        // q(v) - c = (X c_d - c_n L D²) / (L D² c_d)
        let num = quad_int(g, w) * c.1 - c.0 * den;
        num == 0 || val(num, p) - val(den * c.1, p) >= *b
    }

    /// `‖v‖_p ≤ T_p ρ_p(v / ‖v‖_p)` at `p`.
    pub fn padic_norm_ok(&self, w: &[i64], p: u64) -> bool {
        let Some(mw) = w.iter().filter(|&&x| x != 0).map(|&x| val(x as i128, p)).min() else {
            return true;
        };
        let vd = val(self.d, p);
        let m = mw - vd;
        let region = self.inst.finite_at(p);
        let modulus = (p as i128).pow(region.level());
        let d_unit = self.d / (p as i128).pow(vd as u32);
        let inv = (0..modulus).find(|y| (y * d_unit).rem_euclid(modulus) == 1 % modulus).unwrap_or(0);
        let pm = (p as i128).pow(mw as u32);
        let u: Vec<u64> = w.iter().map(|&x| ((x as i128 / pm) * inv).rem_euclid(modulus) as u64).collect();
        -m <= self.inst.exp(p) + region.exp_at(&u)
    }

    pub fn accepts(&self, w: &[i64]) -> bool {
        if !self.real_norm_ok(w) {
            return false;
        }
        for &p in &self.inst.primes {
            if !self.padic_norm_ok(w, p) || !self.padic_value_ok(w, p) {
                return false;
            }
        }
        self.real_value_ok(w)
    }

    pub fn padic_values_ok(&self, w: &[i64]) -> bool {
        self.inst.primes.iter().all(|&p| self.padic_value_ok(w, p))
    }
}

/// Every `w ∈ [-B, B]^n`.
pub fn for_each_vector(n: usize, b: i64, mut f: impl FnMut(&[i64])) {
    let mut w = vec![-b; n];
    loop {
        f(&w);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            w[i] += 1;
            if w[i] <= b {
                break;
            }
            w[i] = -b;
            i += 1;
        }
    }
}

pub fn brute_force(inst: &Instance) -> u64 {
    let o = Oracle::new(inst);
    let b = inst.box_bound();
    let mut c = 0;
    for_each_vector(inst.n, b, |w| {
        if o.accepts(w) {
            c += 1;
        }
    });
    c
}

fn random_gram<R: Rng>(rng: &mut R, n: usize) -> QMat {
    loop {
        let mut g = vec![vec![qi(0); n]; n];
        for i in 0..n {
            g[i][i] = qi(*[-3i64, -2, -1, 1, 2, 3].choose(rng).unwrap());
            for j in 0..i {
                let x = *[0i64, 0, 0, 0, 1, -1, 2, -2].choose(rng).unwrap();
                g[i][j] = q(x, 2);
                g[j][i] = q(x, 2);
            }
        }
        if !det(&g).is_zero() {
            return g;
        }
    }
}

fn scale(g: &QMat, c: &BigRational) -> QMat {
    g.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

/// A unit-invariant level-1 table with exponents in `{-1, 0, 1}`.
fn random_table<R: Rng>(rng: &mut R, p: u64, n: usize) -> FiniteRegion {
    let mut per_line: BTreeMap<Vec<u64>, i64> = BTreeMap::new();
    let mut entries = BTreeMap::new();
    let mut x = vec![0u64; n];
    loop {
        let mut i = 0;
        loop {
            if i == n {
                return FiniteRegion::Table { level: 1, default: 0, entries };
            }
            x[i] += 1;
            if x[i] < p {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        let lead = *x.iter().find(|&&c| c != 0).unwrap();
        let inv = (1..p).find(|u| u * lead % p == 1).unwrap();
        let line: Vec<u64> = x.iter().map(|c| c * inv % p).collect();
        let e = *per_line.entry(line).or_insert_with(|| *[-1i64, 0, 0, 1].choose(rng).unwrap());
        if e != 0 {
            entries.insert(x.clone(), e);
        }
    }
}

/// A random instance whose integer box `B_∞` is at most `cap`.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, cap: i64) -> Instance {
    let primes: Vec<u64> = [3u64, 5].into_iter().filter(|_| rng.gen_bool(0.6)).collect();
    let real_q = random_gram(rng, n);
    let irrational = rng.gen_bool(0.1);
    let real = if irrational {
        let mut g: Vec<Vec<f64>> = real_q.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
        g[n - 1][n - 1] *= 2f64.sqrt();
        RealGram::Float(g)
    } else {
        RealGram::Rational(real_q.clone())
    };
    let mut padic = Vec::new();
    let mut exps = Vec::new();
    let mut centres = Vec::new();
    let mut finite = Vec::new();
    for &p in &primes {
        let g = match rng.gen_range(0..10) {
            0..=5 => real_q.clone(),
            6 | 7 => random_gram(rng, n),
            8 => scale(&random_gram(rng, n), &qi(p as i64)),
            _ => scale(&random_gram(rng, n), &q(1, p as i64)),
        };
        padic.push((p, g));
        let n_p = if p == 3 { *[0i64, 1, 1, 2].choose(rng).unwrap() } else { *[0i64, 1].choose(rng).unwrap() };
        exps.push((p, n_p));
        if rng.gen_bool(0.5) {
            let c = [qi(0), qi(1), qi(-1), qi(2), q(1, p as i64), qi(p as i64)][rng.gen_range(0..6)].clone();
            centres.push((p, c, rng.gen_range(-1..=2)));
        }
        let region = match rng.gen_range(0..20) {
            0..=11 => FiniteRegion::Ball(0),
            12..=14 => FiniteRegion::Ball(1),
            15 | 16 => FiniteRegion::Ball(-1),
            _ => random_table(rng, p, n),
        };
        finite.push((p, region));
    }
    let shape = if rng.gen_bool(0.8) {
        RealShape::Ball(*[1.0, 1.5, 2.0].choose(rng).unwrap())
    } else {
        RealShape::Bump(0.5)
    };
    let mut inst = Instance {
        n,
        primes,
        real,
        padic,
        t_inf: 1.0,
        exps,
        a: 0.0,
        b: 0.0,
        centres,
        shape,
        finite,
    };
    // keep D small so that the box is not all denominators
    while inst.denominator() > 25 {
        let i = rng.gen_range(0..inst.exps.len());
        inst.exps[i].1 = 0;
        inst.finite[i].1 = FiniteRegion::Ball(0);
    }
    let target = rng.gen_range(3..=cap) as f64;
    let quarters = (4.0 * target / (inst.rho_max() * inst.denominator() as f64)).floor().max(1.0);
    inst.t_inf = quarters / 4.0;
    let lo = rng.gen_range(-24..12) as f64 / 4.0;
    let len = rng.gen_range(-2..40) as f64 / 4.0;
    let s = inst.t_inf * inst.t_inf;
    inst.a = lo * s / 4.0;
    inst.b = (lo + len) * s / 4.0;
    inst
}
