use super::{check_odd_prime, inv_mod, pow_big, split_rational, val_int};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Working precision (in p-adic digits) used when nothing else is requested.
pub const DEFAULT_PRECISION: u32 = 64;

const INF_VAL: i64 = i64::MAX;

/// A p-adic number `p^val * unit`, with `unit` known modulo `p^prec`.
///
/// Three shapes occur:
/// * exact zero: `unit = 0`, `val = +∞`;
/// * `O(p^val)`: the value is only known to lie in `p^val Z_p` (`unit = 0`, `prec = 0`);
/// * nonzero: `unit` is a p-adic unit reduced into `[1, p^prec)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PadicNumber {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: u32,
}

impl PadicNumber {
    pub fn zero(p: u64) -> Self {
        PadicNumber { p, val: INF_VAL, unit: BigInt::zero(), prec: 0 }
    }

    /// The unknown element of `p^k Z_p`.
    pub fn big_o(p: u64, k: i64) -> Self {
        PadicNumber { p, val: k, unit: BigInt::zero(), prec: 0 }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_int(p, 1, prec)
    }

    pub fn from_int(p: u64, x: i64, prec: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(x), prec)
    }

    /// Embeds an integer, keeping `prec` digits of relative precision.
    pub fn from_bigint(p: u64, x: &BigInt, prec: u32) -> Self {
        match val_int(x, p) {
            None => Self::zero(p),
            Some(v) => {
                let u = x / pow_big(p, v as u32);
                Self::from_parts(p, v, u, prec)
            }
        }
    }

    /// Embeds a rational number with `prec` digits of relative precision.
    pub fn from_rational(p: u64, x: &BigRational, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let (v, u) = split_rational(x, p);
        let m = pow_big(p, prec);
        let unit = (u.numer() * inv_mod(u.denom(), &m).expect("unit")).mod_floor(&m);
        Self::from_parts(p, v, unit, prec)
    }

    /// Builds `p^val * unit` where `unit` is already a p-adic unit.
    fn from_parts(p: u64, val: i64, unit: BigInt, prec: u32) -> Self {
        debug_assert!(prec > 0);
        let m = pow_big(p, prec);
        PadicNumber { p, val, unit: unit.mod_floor(&m), prec }
    }

    /// Normalizes `p^val * x` with `x` known modulo `p^prec` (x may contain factors of p).
    fn normalize(p: u64, val: i64, x: BigInt, prec: u32) -> Self {
        let m = pow_big(p, prec);
        let x = x.mod_floor(&m);
        match val_int(&x, p) {
            None => Self::big_o(p, val.saturating_add(prec as i64)),
            Some(k) => {
                let k32 = k as u32;
                let rest = prec - k32;
                let u = x / pow_big(p, k32);
                Self::from_parts(p, val + k, u, rest)
            }
        }
    }

    /// The p-adic integer represented by `x`, known modulo `p^abs_prec`.
    pub fn from_residue(p: u64, x: &BigInt, abs_prec: u32) -> Self {
        if abs_prec == 0 {
            return Self::big_o(p, 0);
        }
        Self::normalize(p, 0, x.clone(), abs_prec)
    }

    /// Parses the literal form: valuation plus base-p little-endian digits.
    pub fn from_digits(p: u64, val: i64, digits: &[u64]) -> Result<Self> {
        check_odd_prime(p)?;
        if let Some(d) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::Parse(format!("digit {} out of range for p = {}", d, p)));
        }
        if digits.is_empty() {
            return Ok(Self::big_o(p, val));
        }
        let mut x = BigInt::zero();
        let pb = BigInt::from(p);
        for &d in digits.iter().rev() {
            x = x * &pb + BigInt::from(d);
        }
        Ok(Self::normalize(p, val, x, digits.len() as u32))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Valuation, or `None` when the value is zero (exactly or to known precision).
    pub fn valuation(&self) -> Option<i64> {
        if self.unit.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Lower bound on the valuation (exact for nonzero values).
    pub fn val_lower_bound(&self) -> i64 {
        self.val
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Relative precision: number of known unit digits.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Absolute precision `val + prec`; `None` for an exact zero.
    pub fn abs_prec(&self) -> Option<i64> {
        if self.is_exact_zero() {
            None
        } else {
            Some(self.val + self.prec as i64)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.unit.is_zero() && self.val == INF_VAL
    }

    /// `|x|_p`; zero (to known precision) gives 0.
    pub fn norm(&self) -> f64 {
        match self.valuation() {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    /// Unit digits, little-endian, `prec` of them.
    pub fn digits(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.prec as usize);
        let pb = BigInt::from(self.p);
        let mut x = self.unit.clone();
        for _ in 0..self.prec {
            let (q, r) = x.div_rem(&pb);
            out.push(r.to_u64().unwrap());
            x = q;
        }
        out
    }

    /// Reduces to the requested relative precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        if self.is_zero() || prec >= self.prec {
            return self.clone();
        }
        if prec == 0 {
            return Self::big_o(self.p, self.val);
        }
        Self::from_parts(self.p, self.val, self.unit.clone(), prec)
    }

    /// Representative integer of `self` modulo `p^k`; fails if the value is not integral
    /// or not known modulo `p^k`.
    pub fn residue(&self, k: u32) -> Result<BigInt> {
        if self.is_exact_zero() {
            return Ok(BigInt::zero());
        }
        if self.is_zero() {
            if self.val >= k as i64 {
                return Ok(BigInt::zero());
            }
            return Err(Error::PrecisionExhausted(format!(
                "value known only modulo p^{}, need p^{}",
                self.val, k
            )));
        }
        if self.val < 0 {
            return Err(Error::Invalid("value is not p-integral".into()));
        }
        if self.val >= k as i64 {
            return Ok(BigInt::zero());
        }
        if self.val + (self.prec as i64) < k as i64 {
            return Err(Error::PrecisionExhausted(format!(
                "absolute precision {} below requested {}",
                self.val + self.prec as i64,
                k
            )));
        }
        let m = pow_big(self.p, k);
        Ok((pow_big(self.p, self.val as u32) * &self.unit).mod_floor(&m))
    }

    /// Rational value of the truncation (exact when the number came from a rational
    /// with small height at full precision only by accident; used for display).
    pub fn to_rational_approx(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let u = BigRational::from_integer(self.unit.clone());
        let pv = BigRational::from_integer(pow_big(self.p, self.val.unsigned_abs() as u32));
        if self.val >= 0 {
            u * pv
        } else {
            u / pv
        }
    }

    /// Unit part reduced modulo `p^k`.
    pub fn residue_unit(&self, k: u32) -> Result<BigInt> {
        let v = self.valuation().ok_or_else(|| Error::PrecisionExhausted("unit part of zero".into()))?;
        self.shift(-v).residue(k)
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::PrecisionExhausted("inverse of a value indistinguishable from 0".into()));
        }
        let m = pow_big(self.p, self.prec);
        let u = inv_mod(&self.unit, &m).expect("unit");
        Ok(Self::from_parts(self.p, -self.val, u, self.prec))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Leading unit digit (`unit mod p`); `None` for zero.
    pub fn leading_digit(&self) -> Option<u64> {
        if self.is_zero() {
            None
        } else {
            Some((&self.unit % BigInt::from(self.p)).to_u64().unwrap())
        }
    }

    /// `p^k` scaled copy.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_exact_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.val += k;
        out
    }

    fn assert_same_prime(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixing p-adic numbers of different primes");
    }

    fn add_impl(&self, other: &Self) -> Self {
        self.assert_same_prime(other);
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        let a_abs = self.val + self.prec as i64;
        let b_abs = other.val + other.prec as i64;
        let abs = a_abs.min(b_abs);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Self::big_o(self.p, abs),
            (true, false) => {
                if other.val >= abs {
                    return Self::big_o(self.p, abs);
                }
                return other.with_prec((abs - other.val) as u32);
            }
            (false, true) => {
                if self.val >= abs {
                    return Self::big_o(self.p, abs);
                }
                return self.with_prec((abs - self.val) as u32);
            }
            _ => {}
        }
        let (lo, hi) = if self.val <= other.val { (self, other) } else { (other, self) };
        if lo.val >= abs {
            return Self::big_o(self.p, abs);
        }
        let width = (abs - lo.val) as u32;
        let shift = hi.val - lo.val;
        let mut x = lo.unit.clone();
        if shift < width as i64 {
            x += &hi.unit * pow_big(self.p, shift as u32);
        }
        Self::normalize(self.p, lo.val, x, width)
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.assert_same_prime(other);
        if self.is_exact_zero() || other.is_exact_zero() {
            return Self::zero(self.p);
        }
        match (self.is_zero(), other.is_zero()) {
            (false, false) => {
                let prec = self.prec.min(other.prec);
                let m = pow_big(self.p, prec);
                PadicNumber {
                    p: self.p,
                    val: self.val + other.val,
                    unit: (&self.unit * &other.unit).mod_floor(&m),
                    prec,
                }
            }
            _ => Self::big_o(self.p, self.val + other.val),
        }
    }

    fn neg_impl(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = pow_big(self.p, self.prec);
        PadicNumber { p: self.p, val: self.val, unit: (-&self.unit).mod_floor(&m), prec: self.prec }
    }

    /// Square class data: (valuation parity, Legendre symbol of the unit part).
    pub fn square_class(&self) -> Option<(bool, i8)> {
        let v = self.valuation()?;
        Some((v.rem_euclid(2) == 1, super::legendre(&self.unit, self.p)))
    }

    /// Whether the value is certainly a p-adic integer.
    pub fn is_integral(&self) -> bool {
        self.val >= 0
    }

    /// True for certified units.
    pub fn is_unit(&self) -> bool {
        !self.is_zero() && self.val == 0
    }

    /// Exact integer power.
    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one(self.p, self.prec.max(1));
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Sign-agnostic check against a rational value at the known precision.
    pub fn agrees_with(&self, x: &BigRational) -> bool {
        let other = Self::from_rational(self.p, x, self.prec.max(1));
        let d = self - &other;
        match (d.valuation(), self.abs_prec()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(v), Some(a)) => v >= a,
        }
    }

    /// True when `unit` has no sign ambiguity issues (kept for API symmetry).
    pub fn is_negative_representative(&self) -> bool {
        self.unit.is_negative()
    }

    pub fn is_one(&self) -> bool {
        self.val == 0 && self.unit.is_one()
    }
}

impl fmt::Debug for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "0_{}", self.p);
        }
        if self.is_zero() {
            return write!(f, "O({}^{})", self.p, self.val);
        }
        write!(f, "{}^{}*{} + O({}^{})", self.p, self.val, self.unit, self.p, self.val + self.prec as i64)
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<'a> Add<&'a PadicNumber> for &'a PadicNumber {
    type Output = PadicNumber;
    fn add(self, rhs: &'a PadicNumber) -> PadicNumber {
        self.add_impl(rhs)
    }
}

impl<'a> Sub<&'a PadicNumber> for &'a PadicNumber {
    type Output = PadicNumber;
    fn sub(self, rhs: &'a PadicNumber) -> PadicNumber {
        self.add_impl(&rhs.neg_impl())
    }
}

impl<'a> Mul<&'a PadicNumber> for &'a PadicNumber {
    type Output = PadicNumber;
    fn mul(self, rhs: &'a PadicNumber) -> PadicNumber {
        self.mul_impl(rhs)
    }
}

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_impl()
    }
}

impl Add for PadicNumber {
    type Output = PadicNumber;
    fn add(self, rhs: PadicNumber) -> PadicNumber {
        self.add_impl(&rhs)
    }
}

impl Sub for PadicNumber {
    type Output = PadicNumber;
    fn sub(self, rhs: PadicNumber) -> PadicNumber {
        &self - &rhs
    }
}

impl Mul for PadicNumber {
    type Output = PadicNumber;
    fn mul(self, rhs: PadicNumber) -> PadicNumber {
        self.mul_impl(&rhs)
    }
}

impl Neg for PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_impl()
    }
}
