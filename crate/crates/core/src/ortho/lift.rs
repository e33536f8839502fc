//! Hensel lifting of isometries with a prescribed first column.

use super::finite::{finv, fmat_vec, fmul, ftranspose, solve_sylvester_constrained, witt_finite, FMat};
use super::OrthoElement;
use crate::error::{Error, Result};
use crate::linalg::{transpose, zmat_mul, ZMat};
use crate::padic::{inv_mod, mod_floor, pow_big, PadicNumber};
use crate::qform::{standard_coeffs, QuadraticFormP};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

fn reduce(m: &ZMat, modulus: &BigInt) -> ZMat {
    m.iter().map(|r| r.iter().map(|x| mod_floor(x, modulus)).collect()).collect()
}

fn to_f(m: &ZMat, p: u64) -> FMat {
    let pb = BigInt::from(p);
    m.iter().map(|r| r.iter().map(|x| mod_floor(x, &pb).to_u64().unwrap()).collect()).collect()
}

fn from_f(m: &FMat) -> ZMat {
    m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

fn sub_block(m: &ZMat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> ZMat {
    m[rows].iter().map(|r| r[cols.clone()].to_vec()).collect()
}

fn quad(b: &ZMat, x: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (i, r) in b.iter().enumerate() {
        for (j, bij) in r.iter().enumerate() {
            s += &x[i] * bij * &x[j];
        }
    }
    s
}

/// Integral Gram matrix of `x_1 x_n + Σ a_i x_i²` modulo `m`, with `1/2` inverted mod `m`.
pub(crate) fn standard_gram_mod(coeffs: &[i64], m: &BigInt) -> ZMat {
    let n = coeffs.len() + 2;
    let half = inv_mod(&BigInt::from(2), m).expect("odd modulus");
    let mut g = vec![vec![BigInt::zero(); n]; n];
    g[0][n - 1] = half.clone();
    g[n - 1][0] = half;
    for (i, &a) in coeffs.iter().enumerate() {
        g[i + 1][i + 1] = mod_floor(&BigInt::from(a), m);
    }
    g
}

/// Residues of `v` modulo `p^k`, requiring `‖v‖_p ≤ 1`.
fn residues(v: &[PadicNumber], k: u32) -> Result<Vec<BigInt>> {
    v.iter()
        .map(|x| {
            x.residue(k).map_err(|e| match e {
                Error::Invalid(_) => Error::NotInOrbit,
                other => other,
            })
        })
        .collect()
}

/// `k ∈ SO(q)(Z_p)` with `k e_1 ≡ v`, `kᵗ B k ≡ B` and `det k ≡ 1` modulo `p^prec`.
///
/// `q` must be in standard form. Coordinates are split into the unimodular part `U`
/// (the hyperbolic pair and unit coefficients) and the part `P` with coefficients in
/// `pZ_p^×`, so that `B = diag(B', pB'')`. A finite Witt step gives `k` modulo `p`,
/// then each step solves `A Y + Yᵗ A ≡ C (mod p)` with `Y e_1` prescribed and adds
/// `diag(p^j, p^{j-1}) k Y`.
pub fn lift_isometry(q: &QuadraticFormP, v: &[PadicNumber], prec: u32) -> Result<OrthoElement> {
    let coeffs = standard_coeffs(q).ok_or(Error::NotStandardForm)?;
    let p = q.prime().ok_or(Error::NotStandardForm)?;
    let n = q.n();
    if v.len() != n {
        return Err(Error::Dimension(format!("vector of length {} for a form of rank {}", v.len(), n)));
    }
    if prec == 0 {
        return Err(Error::Invalid("precision must be positive".into()));
    }
    let nn = prec;
    let pb = BigInt::from(p);
    let big_m = pow_big(p, nn + 2);
    let b_full = standard_gram_mod(&coeffs, &big_m);

    // value check at the requested precision, then a target known modulo p^{N+1}
    let mut vr = match residues(v, nn + 1) {
        Ok(r) => r,
        Err(Error::PrecisionExhausted(_)) => residues(v, nn)?,
        Err(e) => return Err(e),
    };
    let pn = pow_big(p, nn);
    if !mod_floor(&quad(&b_full, &vr), &pn).is_zero() {
        return Err(Error::ValueMismatch);
    }
    if vr.iter().all(|x| mod_floor(x, &pb).is_zero()) {
        return Err(Error::NotInOrbit);
    }

    // coordinate split; index 0 stays first
    let unit_idx: Vec<usize> = (0..n)
        .filter(|&i| i == 0 || i == n - 1 || coeffs[i - 1] % p as i64 != 0)
        .collect();
    let p_idx: Vec<usize> = (0..n).filter(|i| !unit_idx.contains(i)).collect();
    let perm: Vec<usize> = unit_idx.iter().chain(&p_idx).copied().collect();
    let nu = unit_idx.len();
    let np = p_idx.len();

    if vr[..].iter().enumerate().filter(|(i, _)| unit_idx.contains(i)).all(|(_, x)| mod_floor(x, &pb).is_zero()) {
        return Err(Error::NotInOrbit);
    }

    // make q(v) ≡ 0 mod p^{N+1} by a correction in p^N Z_p^n
    let pn1 = pow_big(p, nn + 1);
    let qv = mod_floor(&quad(&b_full, &vr), &pn1);
    if !qv.is_zero() {
        let bv: Vec<BigInt> = (0..n).map(|i| (0..n).map(|j| &b_full[i][j] * &vr[j]).sum()).collect();
        let i = (0..n).find(|&i| !mod_floor(&bv[i], &pb).is_zero()).ok_or(Error::NotInOrbit)?;
        let digit = &qv / &pn;
        let inv = inv_mod(&(BigInt::from(2) * &bv[i]), &pb).unwrap();
        let delta = mod_floor(&(-digit * inv), &pb);
        vr[i] = mod_floor(&(&vr[i] + &delta * &pn), &pn1);
    }

    // permuted data
    let bp: ZMat = perm.iter().map(|&i| perm.iter().map(|&j| b_full[i][j].clone()).collect()).collect();
    let vp: Vec<BigInt> = perm.iter().map(|&i| vr[i].clone()).collect();
    let b1 = sub_block(&bp, 0..nu, 0..nu);
    // B'' = (p B'')/p
    let b2: ZMat = sub_block(&bp, nu..n, nu..n).iter().map(|r| r.iter().map(|x| x / &pb).collect()).collect();
    let mut btilde = vec![vec![BigInt::zero(); n]; n];
    for i in 0..nu {
        for j in 0..nu {
            btilde[i][j] = b1[i][j].clone();
        }
    }
    for i in 0..np {
        for j in 0..np {
            btilde[nu + i][nu + j] = b2[i][j].clone();
        }
    }

    // step 1: k modulo p^2 in the shape [[X0 + pX1, pY0], [Z0, I]]
    let b1f = to_f(&b1, p);
    let b2f = to_f(&b2, p);
    let mut e1 = vec![0u64; nu];
    e1[0] = 1;
    let vu1: Vec<u64> = vp[..nu].iter().map(|x| mod_floor(x, &pb).to_u64().unwrap()).collect();
    let x0 = witt_finite(&b1f, &e1, &vu1, p)?;
    let x0_inv = finv(&x0, p).ok_or(Error::NoIsometry)?;
    let mut z0: FMat = vec![vec![0u64; nu]; np];
    for i in 0..np {
        z0[i][0] = mod_floor(&vp[nu + i], &pb).to_u64().unwrap();
    }
    let y0: FMat = if np == 0 {
        vec![vec![]; nu]
    } else {
        let lhs = finv(&fmul(&ftranspose(&x0), &b1f, p), p).ok_or(Error::NoIsometry)?;
        let r = fmul(&fmul(&lhs, &ftranspose(&z0), p), &b2f, p);
        r.iter().map(|row| row.iter().map(|&x| (p - x) % p).collect()).collect()
    };
    let p2 = pow_big(p, 2);
    let x0z = from_f(&x0);
    let a_int = reduce(&zmat_mul(&zmat_mul(&transpose(&x0z), &b1), &x0z), &p2);
    let z0z = from_f(&z0);
    let zbz = if np == 0 {
        vec![vec![BigInt::zero(); nu]; nu]
    } else {
        zmat_mul(&zmat_mul(&transpose(&z0z), &b2), &z0z)
    };
    let mut c1: FMat = vec![vec![0; nu]; nu];
    for i in 0..nu {
        for j in 0..nu {
            let d = mod_floor(&(&b1[i][j] - &a_int[i][j]), &p2);
            debug_assert!(mod_floor(&d, &pb).is_zero());
            c1[i][j] = mod_floor(&(d / &pb - &zbz[i][j]), &pb).to_u64().unwrap();
        }
    }
    let x0e1: Vec<BigInt> = x0z.iter().map(|r| r[0].clone()).collect();
    let dig1: Vec<u64> = (0..nu)
        .map(|i| {
            let d = mod_floor(&(&vp[i] - &x0e1[i]), &p2);
            (d / &pb).to_u64().unwrap()
        })
        .collect();
    let col = fmat_vec(&x0_inv, &dig1, p);
    let fixed: Vec<(usize, usize, u64)> = col.iter().enumerate().map(|(i, &x)| (i, 0, x)).collect();
    let a_f = to_f(&a_int, p);
    let yp = solve_sylvester_constrained(&a_f, &c1, &fixed, p)
        .ok_or_else(|| Error::PrecisionExhausted("first correction step is inconsistent".into()))?;
    let x1 = fmul(&x0, &yp, p);

    let mut k = vec![vec![BigInt::zero(); n]; n];
    for i in 0..nu {
        for j in 0..nu {
            k[i][j] = BigInt::from(x0[i][j]) + &pb * BigInt::from(x1[i][j]);
        }
        for j in 0..np {
            k[i][nu + j] = &pb * BigInt::from(y0[i][j]);
        }
    }
    for i in 0..np {
        for j in 0..nu {
            k[nu + i][j] = BigInt::from(z0[i][j]);
        }
        k[nu + i][nu + i] = BigInt::one();
    }

    // steps j = 2..=N
    for j in 2..=nn {
        let pj = pow_big(p, j);
        let kbk = reduce(&zmat_mul(&zmat_mul(&transpose(&k), &bp), &k), &big_m);
        let mut c: FMat = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let d = mod_floor(&(&bp[a][b] - &kbk[a][b]), &big_m);
                if !mod_floor(&d, &pj).is_zero() {
                    return Err(Error::PrecisionExhausted(format!("isometry condition lost at step {}", j)));
                }
                c[a][b] = mod_floor(&(d / &pj), &pb).to_u64().unwrap();
            }
        }
        let a_f = to_f(&reduce(&zmat_mul(&zmat_mul(&transpose(&k), &btilde), &k), &pb), p);
        let kf = to_f(&k, p);
        let k_inv = finv(&kf, p).ok_or(Error::NoIsometry)?;
        let pjm1 = pow_big(p, j - 1);
        let d: Vec<u64> = (0..n)
            .map(|i| {
                let (scale, next) = if i < nu { (&pj, pow_big(p, j + 1)) } else { (&pjm1, pj.clone()) };
                let diff = mod_floor(&(&vp[i] - &k[i][0]), &next);
                (diff / scale).to_u64().unwrap()
            })
            .collect();
        let col = fmat_vec(&k_inv, &d, p);
        let fixed: Vec<(usize, usize, u64)> = col.iter().enumerate().map(|(i, &x)| (i, 0, x)).collect();
        let y = solve_sylvester_constrained(&a_f, &c, &fixed, p)
            .ok_or_else(|| Error::PrecisionExhausted(format!("correction step {} is inconsistent", j)))?;
        let dm = fmul(&kf, &y, p);
        for i in 0..n {
            let scale = if i < nu { &pj } else { &pjm1 };
            for jj in 0..n {
                k[i][jj] = mod_floor(&(&k[i][jj] + scale * BigInt::from(dm[i][jj])), &big_m);
            }
        }
    }

    // undo the permutation
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for (a, &i) in perm.iter().enumerate() {
        for (b, &j) in perm.iter().enumerate() {
            out[i][j] = mod_floor(&k[a][b], &pn);
        }
    }
    let mut elt = OrthoElement::from_residues(p, nn, coeffs, out);
    if elt.det_residue() != BigInt::one() {
        // right multiplication by the reflection in e_2 keeps the first column
        for row in elt.matrix.iter_mut() {
            row[1] = mod_floor(&-&row[1], &pn);
        }
    }
    let report = elt.verify();
    if !report.ok() {
        return Err(Error::PrecisionExhausted(format!("lifted element failed verification: {:?}", report)));
    }
    if (0..n).any(|i| mod_floor(&(&elt.matrix[i][0] - &vr[i]), &pn) != BigInt::zero()) {
        return Err(Error::PrecisionExhausted("first column does not match the target".into()));
    }
    Ok(elt)
}
