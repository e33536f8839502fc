use super::{check_odd_prime, inv_mod, legendre, pow_big, split_rational, PadicNumber};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Square root of `x` with `prec` digits of relative precision.
///
/// The returned root has its leading unit digit in `1..=(p-1)/2`.
pub fn sqrt_padic(x: &PadicNumber, prec: u32) -> Result<PadicNumber> {
    let p = check_odd_prime(x.p())?;
    if x.is_exact_zero() {
        return Ok(PadicNumber::zero(p));
    }
    if x.is_zero() {
        return Ok(PadicNumber::big_o(p, x.val_lower_bound().div_euclid(2)));
    }
    let v = x.valuation().unwrap();
    if v.rem_euclid(2) != 0 || legendre(x.unit(), p) != 1 {
        return Err(Error::NotASquare { p });
    }
    if x.prec() < prec {
        return Err(Error::PrecisionExhausted(format!(
            "square root to {} digits needs the radicand to {} digits, have {}",
            prec,
            prec,
            x.prec()
        )));
    }
    let m = pow_big(p, prec);
    let u = x.unit().mod_floor(&m);
    let pb = BigInt::from(p);
    let u0 = (&u % &pb).to_u64().unwrap();
    let r0 = (1..=(p - 1) / 2).find(|r| (r * r) % p == u0).expect("residue has a root");
    let mut r = BigInt::from(r0);
    // Newton iteration r <- (r + u/r)/2 doubles the number of correct digits.
    let two_inv = inv_mod(&BigInt::from(2), &m).unwrap();
    let mut correct = 1u32;
    while correct < prec {
        let rinv = inv_mod(&r, &m).unwrap();
        r = ((&r + &u * rinv) * &two_inv).mod_floor(&m);
        correct *= 2;
    }
    debug_assert!(((&r * &r - &u).mod_floor(&m)).is_zero());
    let root = PadicNumber::from_bigint(p, &r, prec);
    Ok(root.shift(v / 2))
}

/// Hilbert symbol `(a, b)_p` for odd `p` and nonzero `a`, `b`.
pub fn hilbert_symbol(a: &PadicNumber, b: &PadicNumber) -> Result<i8> {
    let p = check_odd_prime(a.p())?;
    let (al, bl) = match (a.valuation(), b.valuation()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::PrecisionExhausted("Hilbert symbol of a zero argument".into())),
    };
    Ok(hilbert_from_parts(p, al, a.unit(), bl, b.unit()))
}

/// Hilbert symbol of two nonzero rationals at an odd prime.
pub fn hilbert_symbol_rational(a: &BigRational, b: &BigRational, p: u64) -> Result<i8> {
    check_odd_prime(p)?;
    if a.is_zero() || b.is_zero() {
        return Err(Error::Invalid("Hilbert symbol of zero".into()));
    }
    let (al, ua) = split_rational(a, p);
    let (bl, ub) = split_rational(b, p);
    let ua = super::rational_mod(&ua, p, 1)?;
    let ub = super::rational_mod(&ub, p, 1)?;
    Ok(hilbert_from_parts(p, al, &ua, bl, &ub))
}

fn hilbert_from_parts(p: u64, alpha: i64, u: &BigInt, beta: i64, v: &BigInt) -> i8 {
    let eps = ((p - 1) / 2) as i64;
    let mut s: i8 = if (alpha * beta * eps).rem_euclid(2) == 1 { -1 } else { 1 };
    if beta.rem_euclid(2) == 1 {
        s *= legendre(u, p);
    }
    if alpha.rem_euclid(2) == 1 {
        s *= legendre(v, p);
    }
    s
}
