//! Digit-by-digit descent over residue classes `x mod p^j` of `Z_p^n`, with early exit
//! on Hensel-regular classes.
//!
//! A class `x + p^j Z_p^n` of a quadratic polynomial `P` is regular when the gradient
//! valuation `g = v(∇P(x))` satisfies `g < j` and `P(x) ≡ 0 mod p^{j+g}`. Its zero set is
//! then a graph over `n - 1` coordinates, so it meets `p^{(n-1)(ℓ-j)}` classes at every
//! level `ℓ ≥ j`, and `P ≡ 0 mod p^k` has `p^{(n-1)(k-j)+g}` solutions mod `p^k` in it.

use crate::error::{Error, Result};
use crate::exec;
use crate::qform::FiniteRegion;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Largest `m` with `p^m < 2^62`, so products of residues fit in `i128`.
pub(crate) fn max_modulus_exp(p: u64) -> u32 {
    let mut m = 0;
    let mut acc: u128 = 1;
    while acc * (p as u128) < (1u128 << 62) {
        acc *= p as u128;
        m += 1;
    }
    m
}

fn reduce(x: &BigInt, pm: i128) -> i128 {
    let r = x % BigInt::from(pm);
    let r: i128 = r.try_into().expect("reduced residue fits");
    r.rem_euclid(pm)
}

/// `P(x) = Σ_{i≤j} c_ij x_i x_j + Σ l_i x_i + c_0` modulo `p^m`.
#[derive(Clone, Debug)]
pub(crate) struct Poly2 {
    pub p: u64,
    pub n: usize,
    pub m: u32,
    pm: i128,
    quad: Vec<Vec<i128>>,
    lin: Vec<i128>,
    cst: i128,
}

impl Poly2 {
    pub fn new(p: u64, m: u32, quad: &[Vec<BigInt>], lin: &[BigInt], cst: &BigInt) -> Result<Self> {
        if m > max_modulus_exp(p) {
            return Err(Error::PrecisionExhausted(format!("residues mod {}^{} exceed the native range", p, m)));
        }
        let pm = (p as i128).pow(m);
        let n = lin.len();
        Ok(Poly2 {
            p,
            n,
            m,
            pm,
            quad: (0..n).map(|i| (0..n).map(|j| if j >= i { reduce(&quad[i][j], pm) } else { 0 }).collect()).collect(),
            lin: lin.iter().map(|c| reduce(c, pm)).collect(),
            cst: reduce(cst, pm),
        })
    }

    #[inline]
    fn mul(&self, a: i128, b: i128) -> i128 {
        (a * b).rem_euclid(self.pm)
    }

    pub fn eval(&self, x: &[i128]) -> i128 {
        let mut s = self.cst;
        for i in 0..self.n {
            if x[i] == 0 {
                continue;
            }
            let mut row = self.lin[i];
            for j in i..self.n {
                row = (row + self.mul(self.quad[i][j], x[j])) % self.pm;
            }
            s = (s + self.mul(row, x[i])) % self.pm;
        }
        s
    }

    /// Smallest valuation among the partial derivatives, capped at `cap`.
    pub fn grad_val(&self, x: &[i128], cap: u32) -> u32 {
        let mut best = cap;
        for k in 0..self.n {
            let mut d = self.lin[k];
            for j in 0..self.n {
                let c = match j.cmp(&k) {
                    std::cmp::Ordering::Equal => 2 * self.quad[k][k],
                    std::cmp::Ordering::Less => self.quad[j][k],
                    std::cmp::Ordering::Greater => self.quad[k][j],
                };
                d = (d + self.mul(c, x[j])) % self.pm;
            }
            best = best.min(self.val(d, cap));
            if best == 0 {
                break;
            }
        }
        best
    }

    pub fn val(&self, mut y: i128, cap: u32) -> u32 {
        y = y.rem_euclid(self.pm);
        if y == 0 {
            return cap.min(self.m);
        }
        let p = self.p as i128;
        let mut v = 0;
        while y % p == 0 && v < cap {
            y /= p;
            v += 1;
        }
        v
    }
}

/// A compact open subset of `Z_p^n` cut out by optional conditions.
pub(crate) struct ClassProblem<'a> {
    pub p: u64,
    pub n: usize,
    /// `P = 0` (exact zero set) or `P ≡ 0 mod p^k` when `congruence = Some(k)`.
    pub poly: Option<Poly2>,
    pub congruence: Option<u32>,
    pub primitive: bool,
    /// Restrict to primitive vectors with `ρ(x) = p^E`.
    pub region: Option<(&'a FiniteRegion, i64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Number of residues mod `p^K` in the set.
    CountAt(u32),
    /// `#π_ℓ(Y)` for the exact zero set.
    VarietyAt(u32),
    /// `lim #π_ℓ(Y)/p^{dℓ}` (Serre), or with `leray` the limit of `#{P ≡ 0 mod p^k}/p^{(n-1)k}`.
    Limit { leray: bool },
}

enum Status {
    Dead,
    Open,
    /// Every lift belongs to the set.
    Full,
    Regular(u32),
}

/// Counts `p^e` leaves by exponent; `deepest` is the largest level of a leaf.
#[derive(Default)]
pub(crate) struct Tally {
    pub buckets: BTreeMap<i64, u64>,
    pub deepest: u32,
    pub nodes: u64,
}

impl Tally {
    fn add(&mut self, e: i64, j: u32) {
        *self.buckets.entry(e).or_insert(0) += 1;
        self.deepest = self.deepest.max(j);
    }

    fn merge(&mut self, other: Tally) {
        for (e, c) in other.buckets {
            *self.buckets.entry(e).or_insert(0) += c;
        }
        self.deepest = self.deepest.max(other.deepest);
        self.nodes += other.nodes;
    }

    pub fn to_rational(&self, p: u64) -> BigRational {
        let pb = BigRational::from_integer(BigInt::from(p));
        self.buckets.iter().fold(BigRational::zero(), |acc, (&e, &c)| {
            acc + BigRational::from_integer(BigInt::from(c)) * pb.pow(e as i32)
        })
    }
}

const NODE_BUDGET: u64 = 200_000_000;

impl ClassProblem<'_> {
    fn settled_level(&self) -> u32 {
        let r = self.region.map_or(0, |(f, _)| f.level());
        r.max(u32::from(self.primitive || self.region.is_some()))
    }

    fn status(&self, x: &[i128], j: u32) -> Status {
        let p = self.p as i128;
        if j >= 1 && (self.primitive || self.region.is_some()) && x.iter().all(|c| c % p == 0) {
            return Status::Dead;
        }
        if let Some((f, e)) = self.region {
            if let FiniteRegion::Ball(b) = f {
                if *b != e {
                    return Status::Dead;
                }
            } else if j >= f.level() {
                let m = p.pow(f.level());
                let key: Vec<u64> = x.iter().map(|c| c.rem_euclid(m) as u64).collect();
                if f.exp_at(&key) != e {
                    return Status::Dead;
                }
            }
        }
        let settled = j >= self.settled_level();
        let Some(poly) = &self.poly else {
            return if settled { Status::Full } else { Status::Open };
        };
        let k = self.congruence.unwrap_or(u32::MAX);
        let v = poly.val(poly.eval(x), poly.m);
        if v < j.min(k).min(poly.m) {
            return Status::Dead;
        }
        if !settled {
            return Status::Open;
        }
        if j >= k {
            return Status::Full;
        }
        let g = poly.grad_val(x, j);
        if g < j && v >= j + g && j + g <= k && j + g < poly.m {
            return Status::Regular(g);
        }
        Status::Open
    }

    fn depth_limit(&self) -> u32 {
        self.poly.as_ref().map_or(64, |q| q.m.saturating_sub(1))
    }

    fn leaf(&self, mode: Mode, st: &Status, j: u32, t: &mut Tally) {
        let n = self.n as i64;
        let j64 = j as i64;
        match (mode, st) {
            (Mode::CountAt(kk), Status::Full) => t.add(n * (kk as i64 - j64), j),
            (Mode::CountAt(kk), Status::Regular(g)) => {
                let k = self.congruence.expect("regular classes need an equation") as i64;
                t.add((n - 1) * (k - j64) + *g as i64 + n * (kk as i64 - k), j)
            }
            (Mode::VarietyAt(l), Status::Full) => t.add(n * (l as i64 - j64), j),
            (Mode::VarietyAt(l), Status::Regular(_)) => t.add((n - 1) * (l as i64 - j64), j),
            (Mode::Limit { .. }, Status::Full) => t.add(-n * j64, j),
            (Mode::Limit { leray }, Status::Regular(g)) => {
                t.add(-(n - 1) * j64 + if leray { *g as i64 } else { 0 }, j)
            }
            _ => unreachable!(),
        }
    }

    fn children(&self, x: &[i128], j: u32) -> Vec<Vec<i128>> {
        let p = self.p as i128;
        let step = p.pow(j);
        let total = (self.p as usize).pow(self.n as u32);
        let mut out = Vec::with_capacity(total);
        let mut d = vec![0i128; self.n];
        for _ in 0..total {
            out.push(x.iter().zip(&d).map(|(a, b)| a + b * step).collect());
            for c in d.iter_mut() {
                *c += 1;
                if *c < p {
                    break;
                }
                *c = 0;
            }
        }
        out
    }

    fn descend(&self, x: &[i128], j: u32, mode: Mode, t: &mut Tally) -> Result<()> {
        t.nodes += 1;
        if t.nodes > NODE_BUDGET {
            return Err(Error::BudgetExceeded { lower_bound: 0.0 });
        }
        let st = self.status(x, j);
        match st {
            Status::Dead => return Ok(()),
            Status::Full | Status::Regular(_) => {
                self.leaf(mode, &st, j, t);
                return Ok(());
            }
            Status::Open => {}
        }
        match mode {
            Mode::CountAt(kk) if j >= kk => {
                // only reachable when the set is not yet settled at level K
                return Err(Error::Invalid(format!("count level {} below the settling level", kk)));
            }
            Mode::VarietyAt(l) if j >= l => {
                if self.meets(x, j, t)? {
                    t.add(0, j);
                }
                return Ok(());
            }
            _ => {}
        }
        if j >= self.depth_limit() {
            return Err(Error::PrecisionExhausted(format!("descent reached level {} without regular classes", j)));
        }
        for c in self.children(x, j) {
            self.descend(&c, j + 1, mode, t)?;
        }
        Ok(())
    }

    /// Whether the class `x + p^j Z_p^n` meets the exact zero set.
    fn meets(&self, x: &[i128], j: u32, t: &mut Tally) -> Result<bool> {
        t.nodes += 1;
        match self.status(x, j) {
            Status::Dead => Ok(false),
            Status::Full | Status::Regular(_) => Ok(true),
            Status::Open => {
                if j >= self.depth_limit() {
                    return Err(Error::PrecisionExhausted("membership undecided at the native modulus".into()));
                }
                for c in self.children(x, j) {
                    if self.meets(&c, j + 1, t)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Runs the descent, splitting the level-1 classes across workers.
    pub fn tally(&self, mode: Mode) -> Result<Tally> {
        let root = vec![0i128; self.n];
        let mut t = Tally::default();
        let st = self.status(&root, 0);
        match st {
            Status::Dead => return Ok(t),
            Status::Full | Status::Regular(_) => {
                self.leaf(mode, &st, 0, &mut t);
                return Ok(t);
            }
            Status::Open => {}
        }
        if matches!(mode, Mode::CountAt(0) | Mode::VarietyAt(0)) {
            let mut t = Tally::default();
            if self.meets(&root, 0, &mut t)? {
                t.add(0, 0);
            }
            return Ok(t);
        }
        let kids = self.children(&root, 0);
        let parts = exec::map(&kids, |c| {
            let mut t = Tally::default();
            self.descend(c, 1, mode, &mut t).map(|_| t)
        });
        for part in parts {
            t.merge(part?);
        }
        Ok(t)
    }
}

/// `p^e` as a rational.
pub(crate) fn p_pow(p: u64, e: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p)).pow(e as i32)
}

pub(crate) fn to_integer(r: &BigRational) -> BigInt {
    debug_assert!(r.denom().is_one());
    r.to_integer()
}
