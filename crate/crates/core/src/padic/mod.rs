//! p-adic scalars, vectors and the local invariants built on them.
//!
//! Only odd primes are supported. Numbers carry a valuation and a unit part
//! known modulo `p^prec`; every arithmetic result records how much of that
//! precision survived.

mod exterior;
mod local;
mod number;
mod sscalar;

pub use exterior::{
    cartan_valuations, det_rational, wedge_norm_p, wedge_norm_real_sq, wedge_valuation_rational,
    WedgeNorm,
};
pub use local::{hilbert_symbol, hilbert_symbol_rational, sqrt_padic};
pub use number::{PadicNumber, DEFAULT_PRECISION};
pub use sscalar::{SScalar, SVector};

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Trial-division primality test; the primes used here are small.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Accepts odd primes only.
pub fn check_odd_prime(p: u64) -> Result<u64> {
    if p == 2 || !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    Ok(p)
}

/// `p^k` as a big integer.
pub fn pow_big(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// `p^k` as `i128`, panicking on overflow.
pub fn pow_i128(p: u64, k: u32) -> i128 {
    (p as i128).checked_pow(k).expect("p^k overflows i128")
}

/// Valuation of a nonzero integer; `None` for zero.
pub fn val_int(x: &BigInt, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0i64;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        y = q;
        v += 1;
    }
}

/// Valuation of a small nonzero integer; `None` for zero.
pub fn val_i128(mut x: i128, p: u64) -> Option<i64> {
    if x == 0 {
        return None;
    }
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

/// p-adic valuation of a rational number; `None` stands for +∞ (zero input).
pub fn valuation(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    Some(val_int(x.numer(), p).unwrap() - val_int(x.denom(), p).unwrap())
}

/// `|x|_p` of a rational number as a float.
pub fn abs_p(x: &BigRational, p: u64) -> f64 {
    match valuation(x, p) {
        None => 0.0,
        Some(v) => (p as f64).powi(-(v as i32)),
    }
}

/// Non-negative residue of `a` modulo `m`.
pub fn mod_floor(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// Inverse of `a` modulo `m` (requires gcd 1).
pub fn inv_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    a.modinv(m)
}

/// Legendre symbol `(a/p)` for an integer `a`; 0 when `p | a`.
pub fn legendre(a: &BigInt, p: u64) -> i8 {
    let pb = BigInt::from(p);
    let a = a.mod_floor(&pb);
    if a.is_zero() {
        return 0;
    }
    let e = BigInt::from((p - 1) / 2);
    if a.modpow(&e, &pb).is_one() {
        1
    } else {
        -1
    }
}

/// Legendre symbol for a machine integer.
pub fn legendre_u64(a: u64, p: u64) -> i8 {
    legendre(&BigInt::from(a), p)
}

/// Smallest positive quadratic non-residue modulo `p`.
pub fn smallest_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre_u64(a, p) == -1).expect("odd prime has a non-residue")
}

/// Reduces a rational with denominator prime to `p` modulo `p^k`.
pub fn rational_mod(x: &BigRational, p: u64, k: u32) -> Result<BigInt> {
    let m = pow_big(p, k);
    if val_int(x.denom(), p).unwrap_or(0) > 0 {
        return Err(Error::Invalid(format!("{} is not {}-integral", x, p)));
    }
    let inv = inv_mod(x.denom(), &m).expect("unit denominator");
    Ok((x.numer() * inv).mod_floor(&m))
}

/// Converts a float to the exact rational it represents.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Invalid(format!("non-finite number {}", x)))
}

/// Parses "a", "a/b" or a decimal like "0.25" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
        let b: BigInt = b.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
        if b.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {}", s)));
        }
        return Ok(BigRational::new(a, b));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if ip_abs.is_empty() { "0" } else { ip_abs }, fp);
        let n: BigInt = digits.parse().map_err(|_| Error::Parse(s.to_string()))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let a: BigInt = s.parse().map_err(|_| Error::Parse(s.to_string()))?;
    Ok(BigRational::from_integer(a))
}

/// Nearest `f64` to a rational.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // fall back on scaled division for huge numerators/denominators
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Splits a nonzero rational as `p^v * u` with `u` a p-adic unit.
pub fn split_rational(x: &BigRational, p: u64) -> (i64, BigRational) {
    let v = valuation(x, p).expect("nonzero");
    let pv = BigRational::from_integer(pow_big(p, v.unsigned_abs() as u32));
    let u = if v >= 0 { x / pv } else { x * pv };
    (v, u)
}

/// Integer square root test for big integers.
pub fn is_square_int(x: &BigInt) -> bool {
    if x.is_negative() {
        return false;
    }
    let r = x.sqrt();
    &r * &r == *x
}
