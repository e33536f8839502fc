//! Quadratic forms over `R` and `Q_p`, their invariants, isotropy and standard shapes,
//! together with the time, interval and region data of the counting problem.

mod data;
mod standard;

pub use data::{FiniteRegion, PadicInterval, RealRegion, Region, SInterval, STime};
pub use standard::{
    diagonalize, find_isotropic_vector, standard_coeffs, standard_gram, to_standard, StandardForm,
};

use crate::error::{Error, Result};
use crate::linalg::{self, QMat};
use crate::padic::{
    check_odd_prime, hilbert_symbol, legendre, rational_to_f64, PadicNumber, DEFAULT_PRECISION,
};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type PMat = Vec<Vec<PadicNumber>>;

/// A place of `Q`: the real place or an odd prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Inf,
    P(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Inf => write!(f, "inf"),
            Place::P(p) => write!(f, "{}", p),
        }
    }
}

/// Square class of a nonzero element of `Q_p`: valuation parity and whether the unit
/// part is a square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscClass {
    pub odd_valuation: bool,
    pub unit_square: bool,
}

impl DiscClass {
    pub fn is_trivial(&self) -> bool {
        !self.odd_valuation && self.unit_square
    }
}

/// Complete invariants of a non-degenerate form over `Q_p`, p odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Invariants {
    pub rank: usize,
    pub disc: DiscClass,
    pub hasse: i8,
}

#[derive(Clone, Debug, PartialEq)]
enum Gram {
    Real(Vec<Vec<f64>>),
    Padic(PMat),
}

/// A quadratic form `q(x) = xᵗ B x` at one place.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFormP {
    place: Place,
    n: usize,
    gram: Gram,
    exact: Option<QMat>,
}

fn check_symmetric<T: PartialEq>(m: &[Vec<T>]) -> Result<usize> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("Gram matrix must be square and nonempty".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::Invalid("Gram matrix is not symmetric".into()));
            }
        }
    }
    Ok(n)
}

impl QuadraticFormP {
    /// A form given by an exact rational Gram matrix.
    pub fn from_rational(place: Place, gram: QMat) -> Result<Self> {
        let n = check_symmetric(&gram)?;
        if linalg::det(&gram).is_zero() {
            return Err(Error::Degenerate);
        }
        let g = match place {
            Place::Inf => Gram::Real(gram.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect()),
            Place::P(p) => {
                check_odd_prime(p)?;
                Gram::Padic(padic_matrix(&gram, p, DEFAULT_PRECISION))
            }
        };
        Ok(QuadraticFormP { place, n, gram: g, exact: Some(gram) })
    }

    pub fn from_integers(place: Place, gram: &[Vec<i64>]) -> Result<Self> {
        Self::from_rational(place, linalg::to_q(gram))
    }

    /// A real form with floating-point coefficients (possibly irrational).
    pub fn real(gram: Vec<Vec<f64>>) -> Result<Self> {
        let n = check_symmetric(&gram)?;
        let q = QuadraticFormP { place: Place::Inf, n, gram: Gram::Real(gram), exact: None };
        q.signature()?;
        Ok(q)
    }

    /// A p-adic form with bounded-precision coefficients.
    pub fn padic(p: u64, gram: PMat) -> Result<Self> {
        check_odd_prime(p)?;
        let n = check_symmetric(&gram)?;
        if gram.iter().flatten().any(|x| x.p() != p) {
            return Err(Error::Invalid("mixed primes in Gram matrix".into()));
        }
        Ok(QuadraticFormP { place: Place::P(p), n, gram: Gram::Padic(gram), exact: None })
    }

    pub fn place(&self) -> Place {
        self.place
    }

    pub fn prime(&self) -> Option<u64> {
        match self.place {
            Place::Inf => None,
            Place::P(p) => Some(p),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exact(&self) -> Option<&QMat> {
        self.exact.as_ref()
    }

    pub fn gram_real(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.gram {
            Gram::Real(g) => Some(g),
            Gram::Padic(_) => None,
        }
    }

    pub fn gram_padic(&self) -> Option<&PMat> {
        match &self.gram {
            Gram::Padic(g) => Some(g),
            Gram::Real(_) => None,
        }
    }

    /// Gram matrix at `prec` digits: re-embedded from the exact data when available.
    pub fn gram_padic_at(&self, prec: u32) -> Result<PMat> {
        let p = self.prime().ok_or_else(|| Error::Invalid("real form has no p-adic Gram".into()))?;
        if let Some(e) = &self.exact {
            return Ok(padic_matrix(e, p, prec));
        }
        Ok(self.gram_padic().unwrap().clone())
    }

    /// Value at a real vector.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let g: Vec<Vec<f64>> = match &self.gram {
            Gram::Real(g) => g.clone(),
            Gram::Padic(_) => self
                .exact
                .as_ref()
                .map(|e| e.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect())
                .unwrap_or_default(),
        };
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += g[i][j] * x[i] * x[j];
            }
        }
        s
    }

    /// Value at a p-adic vector.
    pub fn eval_padic(&self, x: &[PadicNumber]) -> Result<PadicNumber> {
        let p = self.prime().ok_or_else(|| Error::Invalid("not a p-adic form".into()))?;
        let g = self.gram_padic().unwrap();
        Ok(eval_pmat(g, x, p))
    }

    /// Signature `(positive, negative)` of a real form.
    pub fn signature(&self) -> Result<(usize, usize)> {
        let g = match &self.gram {
            Gram::Real(g) => g,
            Gram::Padic(_) => return Err(Error::Invalid("signature needs the real place".into())),
        };
        real_signature(g)
    }

    /// Invariants (rank, discriminant square class, Hasse invariant) at an odd prime.
    pub fn invariants(&self) -> Result<Invariants> {
        let p = self.prime().ok_or_else(|| Error::Invalid("invariants need a finite place".into()))?;
        let (diag, _) = diagonalize(self)?;
        Ok(invariants_of_diagonal(&diag, p))
    }

    /// Equivalence over the place's field.
    pub fn equivalent(&self, other: &QuadraticFormP) -> Result<bool> {
        if self.place != other.place {
            return Err(Error::Invalid("forms at different places".into()));
        }
        if self.n != other.n {
            return Ok(false);
        }
        match self.place {
            Place::Inf => Ok(self.signature()? == other.signature()?),
            Place::P(_) => Ok(self.invariants()? == other.invariants()?),
        }
    }

    /// Whether the form has a nontrivial zero.
    pub fn is_isotropic(&self) -> Result<bool> {
        match self.place {
            Place::Inf => {
                let (pos, neg) = self.signature()?;
                Ok(pos > 0 && neg > 0)
            }
            Place::P(p) => {
                if self.n >= 5 {
                    return Ok(true);
                }
                let (diag, _) = diagonalize(self)?;
                let (b0, b1) = split_blocks(&diag);
                Ok(residue_zero(&b0, p).is_some() || residue_zero(&b1, p).is_some())
            }
        }
    }

    /// Whether this form is equivalent to `x1 x4 + x2² - x3²` (for n = 4).
    pub fn is_split(&self) -> Result<bool> {
        if self.n != 4 {
            return Ok(false);
        }
        match self.place {
            Place::Inf => Ok(self.signature()? == (2, 2)),
            Place::P(p) => {
                let split = split_form(Place::P(p))?;
                Ok(self.invariants()? == split.invariants()?)
            }
        }
    }

    /// Multiplies the form by a rational scalar.
    pub fn scaled(&self, c: &BigRational) -> Result<Self> {
        if let Some(e) = &self.exact {
            let g: QMat = e.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
            return Self::from_rational(self.place, g);
        }
        match &self.gram {
            Gram::Real(g) => {
                let cf = rational_to_f64(c);
                Self::real(g.iter().map(|r| r.iter().map(|x| x * cf).collect()).collect())
            }
            Gram::Padic(g) => {
                let p = self.prime().unwrap();
                let cp = PadicNumber::from_rational(p, c, DEFAULT_PRECISION);
                Self::padic(p, g.iter().map(|r| r.iter().map(|x| x * &cp).collect()).collect())
            }
        }
    }

    /// The form `x ↦ q(g x)` for an exact rational change of basis.
    pub fn transformed(&self, g: &QMat) -> Result<Self> {
        if let Some(e) = &self.exact {
            return Self::from_rational(self.place, linalg::congruent(e, g));
        }
        match &self.gram {
            Gram::Real(b) => {
                let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect();
                let n = self.n;
                let mut out = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            for l in 0..n {
                                s += gf[k][i] * b[k][l] * gf[l][j];
                            }
                        }
                        out[i][j] = s;
                    }
                }
                Self::real(out)
            }
            Gram::Padic(b) => {
                let p = self.prime().unwrap();
                let gp = padic_matrix(g, p, DEFAULT_PRECISION);
                Self::padic(p, pmat_congruent(b, &gp, p))
            }
        }
    }
}

/// Embeds a rational matrix into `Q_p` at the given relative precision.
pub fn padic_matrix(m: &[Vec<BigRational>], p: u64, prec: u32) -> PMat {
    m.iter().map(|r| r.iter().map(|x| PadicNumber::from_rational(p, x, prec)).collect()).collect()
}

pub(crate) fn eval_pmat(g: &PMat, x: &[PadicNumber], p: u64) -> PadicNumber {
    let mut s = PadicNumber::zero(p);
    for (i, row) in g.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            if b.is_exact_zero() {
                continue;
            }
            s = &s + &(&(b * &x[i]) * &x[j]);
        }
    }
    s
}

pub(crate) fn pmat_mul(a: &PMat, b: &PMat, p: u64) -> PMat {
    let m = b[0].len();
    a.iter()
        .map(|r| {
            (0..m)
                .map(|j| {
                    let mut s = PadicNumber::zero(p);
                    for (k, x) in r.iter().enumerate() {
                        if x.is_exact_zero() || b[k][j].is_exact_zero() {
                            continue;
                        }
                        s = &s + &(x * &b[k][j]);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub(crate) fn pmat_congruent(b: &PMat, g: &PMat, p: u64) -> PMat {
    pmat_mul(&pmat_mul(&linalg::transpose(g), b, p), g, p)
}

pub(crate) fn real_signature(g: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = g.len();
    let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let eig = m.symmetric_eigen();
    let radius = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if radius == 0.0 {
        return Err(Error::Degenerate);
    }
    let tol = 1e-9 * radius;
    let mut pos = 0;
    let mut neg = 0;
    for &e in eig.eigenvalues.iter() {
        if e > tol {
            pos += 1;
        } else if e < -tol {
            neg += 1;
        } else {
            return Err(Error::Degenerate);
        }
    }
    Ok((pos, neg))
}

/// Invariants of `⟨a_1, …, a_n⟩`.
pub fn invariants_of_diagonal(diag: &[PadicNumber], p: u64) -> Invariants {
    let mut v = 0i64;
    let mut qr = 1i8;
    for a in diag {
        v += a.valuation().unwrap();
        qr *= legendre(a.unit(), p);
    }
    let mut hasse = 1i8;
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            hasse *= hilbert_symbol(&diag[i], &diag[j]).unwrap();
        }
    }
    Invariants {
        rank: diag.len(),
        disc: DiscClass { odd_valuation: v.rem_euclid(2) == 1, unit_square: qr == 1 },
        hasse,
    }
}

/// Splits a diagonal form into unit forms `q0 ⊕ p q1` (up to squares), returning the
/// unit coefficients modulo `p` of each block.
pub(crate) fn split_blocks(diag: &[PadicNumber]) -> (Vec<u64>, Vec<u64>) {
    let mut b0 = Vec::new();
    let mut b1 = Vec::new();
    for a in diag {
        let u = a.leading_digit().unwrap();
        if a.valuation().unwrap().rem_euclid(2) == 0 {
            b0.push(u);
        } else {
            b1.push(u);
        }
    }
    (b0, b1)
}

/// Lexicographically first primitive zero mod p of the diagonal unit form `Σ c_i x_i²`.
///
/// Every such zero is nonsingular, so it lifts to a zero over `Z_p`.
pub(crate) fn residue_zero(coeffs: &[u64], p: u64) -> Option<Vec<u64>> {
    let k = coeffs.len();
    if k < 2 {
        return None;
    }
    // at most three coordinates are ever needed (Chevalley–Warning)
    let m = k.min(3);
    let total = p.pow(m as u32);
    for idx in 1..total {
        let mut x = vec![0u64; k];
        let mut t = idx;
        for slot in x.iter_mut().take(m).rev() {
            *slot = t % p;
            t /= p;
        }
        let s: u64 = coeffs.iter().zip(&x).map(|(c, xi)| c * xi % p * xi % p).sum::<u64>() % p;
        if s == 0 {
            return Some(x);
        }
    }
    None
}

/// `x1 x_n + x2² - x3²` at a place (n = 4).
pub fn split_form(place: Place) -> Result<QuadraticFormP> {
    let h = linalg::q(1, 2);
    let z = linalg::qi(0);
    let g = vec![
        vec![z.clone(), z.clone(), z.clone(), h.clone()],
        vec![z.clone(), linalg::qi(1), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), linalg::qi(-1), z.clone()],
        vec![h, z.clone(), z.clone(), z],
    ];
    QuadraticFormP::from_rational(place, g)
}

/// A quadratic form on `Q_S^n`: one form per place, the real place first.
#[derive(Clone, Debug)]
pub struct QuadraticFormS {
    n: usize,
    places: Vec<QuadraticFormP>,
    /// Declared by the user; not detectable from finite data.
    pub irrational: bool,
}

impl QuadraticFormS {
    pub fn new(mut places: Vec<QuadraticFormP>, irrational: bool) -> Result<Self> {
        let inf = places.iter().filter(|q| q.place == Place::Inf).count();
        if inf != 1 {
            return Err(Error::Invalid("the real place must appear exactly once".into()));
        }
        let n = places[0].n;
        if places.iter().any(|q| q.n != n) {
            return Err(Error::Dimension("all places must share the rank".into()));
        }
        places.sort_by_key(|q| q.place);
        for w in places.windows(2) {
            if w[0].place == w[1].place {
                return Err(Error::Invalid(format!("place {} repeated", w[0].place)));
            }
        }
        Ok(QuadraticFormS { n, places, irrational })
    }

    /// The same rational form at every place of `S`.
    pub fn rational(gram: QMat, primes: &[u64]) -> Result<Self> {
        let mut places = vec![QuadraticFormP::from_rational(Place::Inf, gram.clone())?];
        for &p in primes {
            places.push(QuadraticFormP::from_rational(Place::P(p), gram.clone())?);
        }
        Self::new(places, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn places(&self) -> &[QuadraticFormP] {
        &self.places
    }

    pub fn real(&self) -> &QuadraticFormP {
        &self.places[0]
    }

    pub fn finite(&self) -> &[QuadraticFormP] {
        &self.places[1..]
    }

    pub fn primes(&self) -> Vec<u64> {
        self.places[1..].iter().filter_map(|q| q.prime()).collect()
    }

    pub fn at(&self, place: Place) -> Option<&QuadraticFormP> {
        self.places.iter().find(|q| q.place == place)
    }

    pub fn is_isotropic(&self) -> Result<bool> {
        for q in &self.places {
            if !q.is_isotropic()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rank at most 3, or rank 4 and split at some place.
    pub fn is_exceptional(&self) -> Result<bool> {
        if self.n <= 3 {
            return Ok(true);
        }
        if self.n > 4 {
            return Ok(false);
        }
        for q in &self.places {
            if q.is_split()? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
