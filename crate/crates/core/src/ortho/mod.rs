//! Orthogonal groups of standard forms: the diagonal flow `a_t`, the compact group
//! `K_p = SL_n(Z_p) ∩ SO(q)` and Witt lifting into it.

mod finite;
mod lift;

pub use finite::{fbil, finv, fmul, solve_sylvester_constrained, solve_symmetric_sylvester, sylvester_rank, witt_finite, FMat};
pub use lift::lift_isometry;

use crate::error::{Error, Result};
use crate::linalg::{self, transpose, zmat_mul, QMat, ZMat};
use crate::padic::{mod_floor, pow_big, PadicNumber};
use crate::qform::{standard_coeffs, standard_gram, Place, PMat, QuadraticFormP};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// An element of `K_p` known modulo `p^prec`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoElement {
    pub p: u64,
    pub prec: u32,
    /// Coefficients `a_2, …, a_{n-1}` of the standard form it preserves.
    pub coeffs: Vec<i64>,
    /// Integer residues in `[0, p^prec)`.
    pub matrix: ZMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrthoReport {
    pub integral: bool,
    pub preserves_form: bool,
    pub det_one: bool,
}

impl OrthoReport {
    pub fn ok(&self) -> bool {
        self.integral && self.preserves_form && self.det_one
    }
}

impl OrthoElement {
    pub(crate) fn from_residues(p: u64, prec: u32, coeffs: Vec<i64>, matrix: ZMat) -> Self {
        OrthoElement { p, prec, coeffs, matrix }
    }

    pub fn identity(q: &QuadraticFormP, prec: u32) -> Result<Self> {
        let coeffs = standard_coeffs(q).ok_or(Error::NotStandardForm)?;
        let p = q.prime().ok_or(Error::NotStandardForm)?;
        Ok(OrthoElement { p, prec, coeffs, matrix: linalg::zidentity(q.n()) })
    }

    pub fn n(&self) -> usize {
        self.matrix.len()
    }

    fn modulus(&self) -> BigInt {
        pow_big(self.p, self.prec)
    }

    pub fn det_residue(&self) -> BigInt {
        let q: QMat = self.matrix.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
        mod_floor(&linalg::det(&q).to_integer(), &self.modulus())
    }

    pub fn to_padic(&self) -> PMat {
        self.matrix
            .iter()
            .map(|r| r.iter().map(|x| PadicNumber::from_residue(self.p, x, self.prec)).collect())
            .collect()
    }

    /// `k x` for a p-adic vector.
    pub fn apply(&self, x: &[PadicNumber]) -> Vec<PadicNumber> {
        let k = self.to_padic();
        k.iter()
            .map(|row| row.iter().zip(x).fold(PadicNumber::zero(self.p), |acc, (a, b)| &acc + &(a * b)))
            .collect()
    }

    pub fn compose(&self, other: &OrthoElement) -> Result<OrthoElement> {
        if self.p != other.p || self.coeffs != other.coeffs {
            return Err(Error::Invalid("elements preserve different forms".into()));
        }
        let prec = self.prec.min(other.prec);
        let m = pow_big(self.p, prec);
        let prod = zmat_mul(&self.matrix, &other.matrix);
        let matrix = prod.iter().map(|r| r.iter().map(|x| mod_floor(x, &m)).collect()).collect();
        Ok(OrthoElement { p: self.p, prec, coeffs: self.coeffs.clone(), matrix })
    }

    /// Checks the defining congruences modulo `p^prec`.
    pub fn verify(&self) -> OrthoReport {
        let m = self.modulus();
        let integral = self.matrix.iter().flatten().all(|x| *x >= BigInt::zero() && *x < m);
        let b = lift::standard_gram_mod(&self.coeffs, &m);
        let kbk = zmat_mul(&zmat_mul(&transpose(&self.matrix), &b), &self.matrix);
        let preserves_form =
            kbk.iter().zip(&b).all(|(r, s)| r.iter().zip(s).all(|(x, y)| mod_floor(&(x - y), &m).is_zero()));
        let det_one = self.det_residue() == mod_floor(&BigInt::one(), &m);
        OrthoReport { integral, preserves_form, det_one }
    }
}

/// Whether `g` lies in `SL_n(Z_p) ∩ SO(q)` modulo `p^prec`, for `q` in standard form.
pub fn is_in_k(q: &QuadraticFormP, g: &PMat, prec: u32) -> Result<bool> {
    let coeffs = standard_coeffs(q).ok_or(Error::NotStandardForm)?;
    let p = q.prime().ok_or(Error::NotStandardForm)?;
    let mut matrix = Vec::with_capacity(g.len());
    for row in g {
        let mut r = Vec::with_capacity(row.len());
        for x in row {
            match x.residue(prec) {
                Ok(v) => r.push(v),
                Err(Error::Invalid(_)) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        matrix.push(r);
    }
    Ok(OrthoElement { p, prec, coeffs, matrix }.verify().ok())
}

/// `a_t = diag(p^t, 1, …, 1, p^{-t})`, or `diag(e^t, 1, …, 1, e^{-t})` at the real place.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowElement {
    pub place: Place,
    pub t: f64,
    pub n: usize,
}

impl FlowElement {
    /// First diagonal entry; the last one is its inverse.
    fn scale(&self) -> f64 {
        match self.place {
            Place::Inf => self.t.exp(),
            Place::P(p) => (p as f64).powi(self.t as i32),
        }
    }

    pub fn diag_f64(&self) -> Vec<f64> {
        let s = self.scale();
        let mut d = vec![1.0; self.n];
        d[0] = s;
        d[self.n - 1] = 1.0 / s;
        d
    }

    /// Exact diagonal at a finite place.
    pub fn diag_exact(&self) -> Option<Vec<BigRational>> {
        let Place::P(p) = self.place else { return None };
        let t = self.t as i64;
        let pt = BigRational::from_integer(pow_big(p, t.unsigned_abs() as u32));
        let (first, last) = if t >= 0 { (pt.clone(), pt.recip()) } else { (pt.recip(), pt) };
        let mut d = vec![BigRational::one(); self.n];
        d[0] = first;
        d[self.n - 1] = last;
        Some(d)
    }

    pub fn matrix_exact(&self) -> Option<QMat> {
        let d = self.diag_exact()?;
        Some(
            (0..self.n)
                .map(|i| (0..self.n).map(|j| if i == j { d[i].clone() } else { BigRational::zero() }).collect())
                .collect(),
        )
    }

    pub fn compose(&self, other: &FlowElement) -> Result<FlowElement> {
        if self.place != other.place || self.n != other.n {
            return Err(Error::Invalid("flows on different spaces".into()));
        }
        Ok(FlowElement { place: self.place, t: self.t + other.t, n: self.n })
    }

    pub fn inverse(&self) -> FlowElement {
        FlowElement { t: -self.t, ..self.clone() }
    }
}

fn is_real_standard(g: &[Vec<f64>]) -> bool {
    let n = g.len();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let want = if (i, j) == (0, n - 1) || (i, j) == (n - 1, 0) {
                Some(0.5)
            } else if i == j && i > 0 && i < n - 1 {
                None
            } else {
                Some(0.0)
            };
            match want {
                Some(w) => (g[i][j] - w).abs() < 1e-12,
                None => (g[i][i].abs() - 1.0).abs() < 1e-12,
            }
        })
    })
}

/// The flow `a_t` of a form in standard shape; `t` must be an integer at finite places.
pub fn flow(q: &QuadraticFormP, t: f64) -> Result<FlowElement> {
    let n = q.n();
    match q.place() {
        Place::Inf => {
            let g = q.gram_real().ok_or(Error::NotStandardForm)?;
            if n < 2 || !is_real_standard(g) {
                return Err(Error::NotStandardForm);
            }
        }
        Place::P(_) => {
            standard_coeffs(q).ok_or(Error::NotStandardForm)?;
            if t.fract() != 0.0 {
                return Err(Error::Invalid(format!("flow time {} must be an integer at a finite place", t)));
            }
        }
    }
    if !t.is_finite() {
        return Err(Error::Invalid("flow time must be finite".into()));
    }
    Ok(FlowElement { place: q.place(), t, n })
}

/// Exact check `aᵗ B a = B` for a finite-place flow.
pub fn flow_preserves(q: &QuadraticFormP, a: &FlowElement) -> Result<bool> {
    let coeffs = standard_coeffs(q).ok_or(Error::NotStandardForm)?;
    let m = a.matrix_exact().ok_or(Error::NotStandardForm)?;
    let b = standard_gram(&coeffs);
    Ok(linalg::congruent(&b, &m) == b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, to_q};

    fn std_form(p: u64, coeffs: &[i64]) -> QuadraticFormP {
        QuadraticFormP::from_rational(Place::P(p), standard_gram(coeffs)).unwrap()
    }

    #[test]
    fn flow_examples() {
        let f = std_form(5, &[1]);
        let a0 = flow(&f, 0.0).unwrap();
        assert_eq!(a0.matrix_exact().unwrap(), linalg::identity(3));
        let a1 = flow(&f, 1.0).unwrap();
        assert_eq!(a1.diag_exact().unwrap(), vec![q(5, 1), q(1, 1), q(1, 5)]);
        assert!(flow_preserves(&f, &a1).unwrap());
        let a2 = flow(&f, 2.0).unwrap();
        let a3 = flow(&f, 3.0).unwrap();
        assert_eq!(
            linalg::mat_mul(&a1.matrix_exact().unwrap(), &a2.matrix_exact().unwrap()),
            a3.matrix_exact().unwrap()
        );
        assert_eq!(a1.compose(&a2).unwrap(), a3);
        let not_std = QuadraticFormP::from_rational(Place::P(5), to_q(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]])).unwrap();
        assert_eq!(flow(&not_std, 1.0), Err(Error::NotStandardForm));
        assert!(flow(&f, 0.5).is_err());
    }

    #[test]
    fn real_flow() {
        let g = vec![vec![0.0, 0.0, 0.5], vec![0.0, -1.0, 0.0], vec![0.5, 0.0, 0.0]];
        let f = QuadraticFormP::real(g).unwrap();
        let a = flow(&f, 0.7).unwrap();
        let d = a.diag_f64();
        assert!((d[0] * d[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_identity_target() {
        let f = std_form(5, &[1, 5]);
        let mut e1 = vec![PadicNumber::zero(5); 4];
        e1[0] = PadicNumber::one(5, 30);
        let k = lift_isometry(&f, &e1, 20).unwrap();
        assert!(k.verify().ok());
        assert_eq!(k.apply(&e1)[0].residue(20).unwrap(), BigInt::one());
    }

    #[test]
    fn lift_rejects_bad_targets() {
        let f = std_form(5, &[1]);
        let v: Vec<PadicNumber> = [1, 1, 0].iter().map(|&x| PadicNumber::from_int(5, x, 30)).collect();
        assert_eq!(lift_isometry(&f, &v, 10), Err(Error::ValueMismatch));
        let g = std_form(5, &[5]);
        // q = x1 x3 + 5 x2² and q(e2) ≡ 0 mod 5, but e2 is not in the orbit of e1
        let w: Vec<PadicNumber> = [0, 1, 0].iter().map(|&x| PadicNumber::from_int(5, x, 30)).collect();
        assert_eq!(lift_isometry(&g, &w, 1), Err(Error::NotInOrbit));
        let not_std = QuadraticFormP::from_rational(Place::P(5), linalg::identity(3)).unwrap();
        assert_eq!(lift_isometry(&not_std, &w, 5), Err(Error::NotStandardForm));
    }

    #[test]
    fn lift_split_ternary_targets() {
        // every isotropic primitive vector mod 5^2 of x1 x3 + x2², lifted exactly
        let f = std_form(5, &[1]);
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                // (a², -ab... ) parametrisation: x1 = s², x2 = s t, x3 = -t²
                let v = [a * a, a * b, -b * b];
                if v.iter().all(|x| x % 5 == 0) {
                    continue;
                }
                let vp: Vec<PadicNumber> = v.iter().map(|&x| PadicNumber::from_int(5, x, 40)).collect();
                let k = lift_isometry(&f, &vp, 20).unwrap();
                assert!(k.verify().ok());
                let m = pow_big(5, 20);
                for i in 0..3 {
                    assert_eq!(k.matrix[i][0], mod_floor(&BigInt::from(v[i]), &m));
                }
            }
        }
    }
}
