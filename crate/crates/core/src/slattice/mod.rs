//! S-lattices `Δ = Z_S x_1 ⊕ … ⊕ Z_S x_n` in `Q_S^n`, rational subspaces and their
//! covolumes, the projection to real lattices, α-functions and the Siegel transform.

mod alpha;
mod reduce;
mod siegel;

pub use alpha::{alpha, alpha_all, alpha_real, AlphaValue};
pub use reduce::{fincke_pohst, lll};
pub use siegel::{schmidt_constant, siegel_transform, siegel_transform_projected, BallNorm, BallProduct, SiegelCount};

use crate::error::{Error, Result};
use crate::linalg::{self, QMat, ZMat};
use crate::padic::{
    check_odd_prime, pow_big, rational_to_f64, valuation, wedge_norm_p, wedge_norm_real_sq,
    wedge_valuation_rational, PadicNumber, SVector,
};
use crate::qform::PMat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An S-lattice. Basis vectors are the columns of every per-place matrix.
#[derive(Clone, Debug)]
pub struct SLattice {
    primes: Vec<u64>,
    n: usize,
    exact: Option<QMat>,
    real: Vec<Vec<f64>>,
    padic: Vec<PMat>,
}

/// Strips every prime of `primes` from a nonzero integer.
fn s_free_part(x: &BigInt, primes: &[u64]) -> BigInt {
    let mut y = x.abs();
    for &p in primes {
        let pb = BigInt::from(p);
        while !y.is_zero() && (&y % &pb).is_zero() {
            y /= &pb;
        }
    }
    y
}

/// Whether a rational has only S-primes in numerator and denominator.
pub fn is_s_unit(x: &BigRational, primes: &[u64]) -> bool {
    !x.is_zero() && s_free_part(x.numer(), primes).is_one() && s_free_part(x.denom(), primes).is_one()
}

/// Whether a rational lies in `Z_S`.
pub fn in_z_s(x: &BigRational, primes: &[u64]) -> bool {
    s_free_part(x.denom(), primes).is_one()
}

fn check_primes(primes: &[u64]) -> Result<Vec<u64>> {
    let mut ps = primes.to_vec();
    for &p in &ps {
        check_odd_prime(p)?;
    }
    ps.sort_unstable();
    ps.dedup();
    Ok(ps)
}

impl SLattice {
    /// `Z_S`-span of rational basis vectors (given as rows), embedded diagonally.
    pub fn from_rational(primes: &[u64], basis: &[Vec<BigRational>], prec: u32) -> Result<Self> {
        let primes = check_primes(primes)?;
        let n = basis.len();
        if n == 0 || basis.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("basis must be n vectors of length n".into()));
        }
        let a = linalg::transpose(basis);
        if linalg::det(&a).is_zero() {
            return Err(Error::Degenerate);
        }
        let real = a.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect();
        let padic = primes.iter().map(|&p| crate::qform::padic_matrix(&a, p, prec)).collect();
        Ok(SLattice { primes, n, exact: Some(a), real, padic })
    }

    /// `Z_S^n`.
    pub fn standard(primes: &[u64], n: usize) -> Result<Self> {
        Self::from_rational(primes, &linalg::identity(n), crate::padic::DEFAULT_PRECISION)
    }

    /// A lattice with independent per-place bases (columns).
    pub fn from_components(primes: &[u64], real: Vec<Vec<f64>>, padic: Vec<PMat>) -> Result<Self> {
        let ps = check_primes(primes)?;
        if ps.len() != primes.len() || padic.len() != ps.len() {
            return Err(Error::Dimension("one p-adic basis per prime, primes sorted".into()));
        }
        let n = real.len();
        if real.iter().any(|r| r.len() != n) || padic.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(Error::Dimension("basis matrices must be n×n".into()));
        }
        let d = nalgebra::DMatrix::from_fn(n, n, |i, j| real[i][j]).determinant();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Degenerate);
        }
        for (k, m) in padic.iter().enumerate() {
            if m.iter().flatten().any(|x| x.p() != ps[k]) {
                return Err(Error::Invalid("p-adic entries at the wrong prime".into()));
            }
        }
        Ok(SLattice { primes: ps, n, exact: None, real, padic })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Rational basis matrix (columns) when exact.
    pub fn exact_basis(&self) -> Option<&QMat> {
        self.exact.as_ref()
    }

    pub fn real_basis(&self) -> &[Vec<f64>] {
        &self.real
    }

    pub fn padic_basis(&self, p: u64) -> Option<&PMat> {
        self.primes.iter().position(|&q| q == p).map(|k| &self.padic[k])
    }

    /// `∏_{v ∈ S} |det A_v|_v`.
    pub fn covolume(&self) -> Result<f64> {
        if let Some(a) = &self.exact {
            let d = linalg::det(a);
            let mut c = rational_to_f64(&d).abs();
            for &p in &self.primes {
                c *= (p as f64).powi(-(valuation(&d, p).unwrap() as i32));
            }
            return Ok(c);
        }
        let n = self.n;
        let mut c = nalgebra::DMatrix::from_fn(n, n, |i, j| self.real[i][j]).determinant().abs();
        for m in &self.padic {
            let cols: Vec<Vec<PadicNumber>> = linalg::columns(m);
            c *= wedge_norm_p(&cols)?.value();
        }
        Ok(c)
    }

    /// Unimodularity, exactly for rational bases and to `1e-9` otherwise.
    pub fn is_unimodular(&self) -> Result<bool> {
        if let Some(a) = &self.exact {
            let d = linalg::det(a);
            let free_num = s_free_part(d.numer(), &self.primes);
            let free_den = s_free_part(d.denom(), &self.primes);
            return Ok(free_num.is_one() && free_den.is_one());
        }
        Ok((self.covolume()? - 1.0).abs() < 1e-9)
    }

    /// Coordinates of a rational vector in the basis, if it lies in `Δ`.
    pub fn coordinates(&self, v: &[BigRational]) -> Result<Option<Vec<BigRational>>> {
        let a = self.exact.as_ref().ok_or_else(|| Error::Invalid("lattice is not rational".into()))?;
        let inv = linalg::inverse(a).ok_or(Error::Degenerate)?;
        let c = linalg::mat_vec(&inv, v);
        Ok(if c.iter().all(|x| in_z_s(x, &self.primes)) { Some(c) } else { None })
    }

    pub fn contains(&self, v: &[BigRational]) -> Result<bool> {
        Ok(self.coordinates(v)?.is_some())
    }

    /// The image `Δ·v ↦ v_∞` of `Δ ∩ ∏_{p ∈ S} p^{-m_p} Z_p^n`, as a Z-basis (rows) of
    /// rational vectors. With all `m_p = 0` this is `π(Δ)`.
    pub fn integral_real_basis(&self, exps: &[(u64, i64)]) -> Result<QMat> {
        let a = self.exact.as_ref().ok_or_else(|| Error::Invalid("lattice is not rational".into()))?;
        let n = self.n;
        // Λ0 = A Z^n = (1/den) M Z^n, M = U^{-1} D V^{-1}
        let entries: Vec<BigRational> = a.iter().flatten().cloned().collect();
        let den = linalg::common_denominator(&entries);
        let m: ZMat = a.iter().map(|r| r.iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect()).collect();
        let sm = linalg::smith(&m);
        let uinv = linalg::zinverse_unimodular(&sm.u).ok_or(Error::Degenerate)?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let r = BigRational::new(sm.d[i].clone(), den.clone());
            // keep the part prime to S, then apply the p^{-m_p} scaling
            let mut c = BigRational::new(s_free_part(r.numer(), &self.primes), s_free_part(r.denom(), &self.primes));
            for &(p, e) in exps {
                let pe = BigRational::from_integer(pow_big(p, e.unsigned_abs() as u32));
                if e >= 0 {
                    c /= pe;
                } else {
                    c *= pe;
                }
            }
            rows.push((0..n).map(|k| BigRational::from_integer(uinv[k][i].clone()) * &c).collect());
        }
        Ok(rows)
    }
}

/// `π(Δ)`: a Z-basis (rows) of the real lattice of covolume 1 attached to a unimodular `Δ`.
pub fn project_to_real(delta: &SLattice) -> Result<QMat> {
    if !delta.is_exact() {
        return Err(Error::Invalid("projection needs a rational basis".into()));
    }
    if !delta.is_unimodular()? {
        return Err(Error::NotUnimodular);
    }
    delta.integral_real_basis(&[])
}

/// `π(Δ)` as floating-point rows.
pub fn project_to_real_f64(delta: &SLattice) -> Result<Vec<Vec<f64>>> {
    Ok(project_to_real(delta)?.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect())
}

/// A Δ-rational subspace given by a `Z_S`-basis of `L ∩ Δ` (rational vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct RationalSubspace {
    pub generators: Vec<Vec<BigRational>>,
}

impl RationalSubspace {
    pub fn zero() -> Self {
        RationalSubspace { generators: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// `L ∩ Δ` for `L` the span of arbitrary rational vectors, via the Smith form of their
    /// coordinate matrix.
    pub fn saturate(delta: &SLattice, spanning: &[Vec<BigRational>]) -> Result<Self> {
        let a = delta.exact.as_ref().ok_or_else(|| Error::Invalid("lattice is not rational".into()))?;
        if spanning.is_empty() {
            return Ok(Self::zero());
        }
        let inv = linalg::inverse(a).ok_or(Error::Degenerate)?;
        let n = delta.n;
        let coords: Vec<Vec<BigRational>> = spanning.iter().map(|v| linalg::mat_vec(&inv, v)).collect();
        let entries: Vec<BigRational> = coords.iter().flatten().cloned().collect();
        let den = linalg::common_denominator(&entries);
        // integer matrix with the coordinate vectors as columns
        let c: ZMat = (0..n)
            .map(|i| coords.iter().map(|v| (&v[i] * BigRational::from_integer(den.clone())).to_integer()).collect())
            .collect();
        let sm = linalg::smith(&c);
        let r = sm.d.iter().filter(|d| !d.is_zero()).count();
        let uinv = linalg::zinverse_unimodular(&sm.u).ok_or(Error::Degenerate)?;
        let generators = (0..r)
            .map(|j| {
                let col: Vec<BigRational> = (0..n).map(|i| BigRational::from_integer(uinv[i][j].clone())).collect();
                linalg::mat_vec(a, &col)
            })
            .collect();
        Ok(RationalSubspace { generators })
    }

    /// Whether the generators form a `Z_S`-basis of `L ∩ Δ`.
    pub fn is_saturated(&self, delta: &SLattice) -> Result<bool> {
        if self.generators.is_empty() {
            return Ok(true);
        }
        let a = delta.exact.as_ref().ok_or_else(|| Error::Invalid("lattice is not rational".into()))?;
        let inv = linalg::inverse(a).ok_or(Error::Degenerate)?;
        let n = delta.n;
        let coords: Vec<Vec<BigRational>> = self.generators.iter().map(|v| linalg::mat_vec(&inv, v)).collect();
        if coords.iter().flatten().any(|x| !in_z_s(x, &delta.primes)) {
            return Ok(false);
        }
        let entries: Vec<BigRational> = coords.iter().flatten().cloned().collect();
        let den = linalg::common_denominator(&entries);
        let c: ZMat = (0..n)
            .map(|i| coords.iter().map(|v| (&v[i] * BigRational::from_integer(den.clone())).to_integer()).collect())
            .collect();
        let sm = linalg::smith(&c);
        let k = self.generators.len();
        Ok(sm.d.iter().take(k).all(|d| !d.is_zero() && s_free_part(d, &delta.primes).is_one()))
    }
}

/// `d(L)² = ‖v¹∧…∧vⁱ‖_∞² ∏_p ‖v¹∧…∧vⁱ‖_p²` for rational generators, exactly.
pub fn d_squared_of_generators(gens: &[Vec<BigRational>], primes: &[u64]) -> Result<BigRational> {
    if gens.is_empty() {
        return Ok(BigRational::one());
    }
    let mut d2 = wedge_norm_real_sq(gens);
    if d2.is_zero() {
        return Err(Error::Degenerate);
    }
    for &p in primes {
        let v = wedge_valuation_rational(gens, p).ok_or(Error::Degenerate)?;
        let p2v = BigRational::from_integer(pow_big(p, 2 * v.unsigned_abs() as u32));
        if v >= 0 {
            d2 /= p2v;
        } else {
            d2 *= p2v;
        }
    }
    Ok(d2)
}

/// `d_Δ(L)`, with the generators checked to be a `Z_S`-basis of `L ∩ Δ`.
pub fn d_subspace(delta: &SLattice, l: &RationalSubspace) -> Result<f64> {
    Ok(rational_to_f64(&d_subspace_sq(delta, l)?).sqrt())
}

pub fn d_subspace_sq(delta: &SLattice, l: &RationalSubspace) -> Result<BigRational> {
    if !l.is_saturated(delta)? {
        return Err(Error::NotSaturated);
    }
    d_squared_of_generators(&l.generators, &delta.primes)
}

/// `d(L)` for generators given at every place, without a saturation check.
pub fn d_of_svectors(gens: &[SVector]) -> Result<f64> {
    if gens.is_empty() {
        return Ok(1.0);
    }
    if let Some(ex) = gens.iter().map(|g| g.exact()).collect::<Option<Vec<_>>>() {
        let primes = gens[0].entries[0].primes();
        return Ok(rational_to_f64(&d_squared_of_generators(&ex, &primes)?).sqrt());
    }
    let real: Vec<Vec<f64>> = gens.iter().map(|g| g.entries.iter().map(|e| e.real).collect()).collect();
    let k = real.len();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| real[i].iter().zip(&real[j]).map(|(a, b)| a * b).sum::<f64>());
    let mut d = gram.determinant().max(0.0).sqrt();
    let places = gens[0].entries[0].padic.len();
    for t in 0..places {
        let vs: Vec<Vec<PadicNumber>> = gens.iter().map(|g| g.entries.iter().map(|e| e.padic[t].clone()).collect()).collect();
        d *= wedge_norm_p(&vs)?.value();
    }
    Ok(d)
}
