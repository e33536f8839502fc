use super::{valuation, PadicNumber};
use crate::error::{Error, Result};
use crate::linalg::{self, combinations};
use num_rational::BigRational;

/// Norm of a p-adic wedge product, stored as its valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WedgeNorm {
    pub p: u64,
    /// `None` when the vectors are linearly dependent (to the known precision).
    pub valuation: Option<i64>,
}

impl WedgeNorm {
    pub fn value(&self) -> f64 {
        match self.valuation {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }
}

/// Leibniz determinant over p-adic numbers, keeping track of precision.
fn det_padic(m: &[Vec<PadicNumber>], p: u64) -> PadicNumber {
    let k = m.len();
    if k == 0 {
        return PadicNumber::one(p, super::DEFAULT_PRECISION);
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut acc = PadicNumber::zero(p);
    permutations(&mut perm, 0, &mut |perm, sign| {
        let mut term = m[0][perm[0]].clone();
        for (i, &c) in perm.iter().enumerate().skip(1) {
            term = &term * &m[i][c];
        }
        if sign < 0 {
            term = -term;
        }
        acc = &acc + &term;
    });
    acc
}

fn permutations(perm: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize], i8)) {
    fn rec(perm: &mut Vec<usize>, start: usize, sign: i8, f: &mut impl FnMut(&[usize], i8)) {
        if start == perm.len() {
            f(perm, sign);
            return;
        }
        for i in start..perm.len() {
            perm.swap(start, i);
            rec(perm, start + 1, if i == start { sign } else { -sign }, f);
            perm.swap(start, i);
        }
    }
    rec(perm, start, 1, f);
}

/// `max_J |a_J|_p` over the Plücker coordinates of `v_1 ∧ … ∧ v_i`.
///
/// Each vector has length `n`. Fails when some Plücker coordinate is only known to be
/// divisible by a smaller power of `p` than the apparent maximum.
pub fn wedge_norm_p(vectors: &[Vec<PadicNumber>]) -> Result<WedgeNorm> {
    let i = vectors.len();
    if i == 0 {
        return Err(Error::Dimension("empty wedge product".into()));
    }
    let p = vectors[0][0].p();
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) || i > n {
        return Err(Error::Dimension("vectors of unequal or excessive length".into()));
    }
    let mut best: Option<i64> = None;
    let mut unknown_floor: Option<i64> = None;
    for rows in combinations(n, i) {
        let minor: Vec<Vec<PadicNumber>> =
            rows.iter().map(|&r| vectors.iter().map(|v| v[r].clone()).collect()).collect();
        let d = det_padic(&minor, p);
        match d.valuation() {
            Some(v) => best = Some(best.map_or(v, |b| b.min(v))),
            None if d.is_exact_zero() => {}
            None => {
                let f = d.val_lower_bound();
                unknown_floor = Some(unknown_floor.map_or(f, |u| u.min(f)));
            }
        }
    }
    match (best, unknown_floor) {
        (Some(b), Some(u)) if u < b => Err(Error::PrecisionExhausted(format!(
            "Plücker coordinate known only modulo p^{} while the maximum has valuation {}",
            u, b
        ))),
        (None, Some(u)) => Err(Error::PrecisionExhausted(format!(
            "all Plücker coordinates vanish modulo p^{}",
            u
        ))),
        (b, _) => Ok(WedgeNorm { p, valuation: b }),
    }
}

/// Minimal valuation of the Plücker coordinates of rational vectors; `None` if dependent.
pub fn wedge_valuation_rational(vectors: &[Vec<BigRational>], p: u64) -> Option<i64> {
    let i = vectors.len();
    if i == 0 {
        return Some(0);
    }
    let n = vectors[0].len();
    combinations(n, i)
        .into_iter()
        .filter_map(|rows| {
            let minor: Vec<Vec<BigRational>> =
                rows.iter().map(|&r| vectors.iter().map(|v| v[r].clone()).collect()).collect();
            valuation(&linalg::det(&minor), p)
        })
        .min()
}

/// Squared Euclidean norm of `v_1 ∧ … ∧ v_i`, i.e. the Gram determinant.
pub fn wedge_norm_real_sq(vectors: &[Vec<BigRational>]) -> BigRational {
    let gram: Vec<Vec<BigRational>> = vectors
        .iter()
        .map(|a| vectors.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    linalg::det(&gram)
}

/// Exact determinant of a rational matrix.
pub fn det_rational(m: &[Vec<BigRational>]) -> BigRational {
    linalg::det(m)
}

/// Valuations `λ_1 ≤ … ≤ λ_n` of the diagonal in `g = k_1 d k_2`, `k_i ∈ GL_n(Z_p)`.
///
/// Computed by full-pivot elimination, always choosing an entry of minimal valuation.
pub fn cartan_valuations(g: &[Vec<PadicNumber>]) -> Result<Vec<i64>> {
    let n = g.len();
    if g.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("matrix must be square".into()));
    }
    let mut m = g.to_vec();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut piv: Option<(usize, usize, i64)> = None;
        let mut floor: Option<i64> = None;
        for (i, row) in m.iter().enumerate().skip(t) {
            for (j, x) in row.iter().enumerate().skip(t) {
                match x.valuation() {
                    Some(v) => {
                        if piv.map_or(true, |(_, _, b)| v < b) {
                            piv = Some((i, j, v));
                        }
                    }
                    None if x.is_exact_zero() => {}
                    None => floor = Some(floor.map_or(x.val_lower_bound(), |f: i64| f.min(x.val_lower_bound()))),
                }
            }
        }
        let (pi, pj, v) = match piv {
            None => return Err(Error::PrecisionExhausted("matrix is singular to known precision".into())),
            Some(x) => x,
        };
        if let Some(f) = floor {
            if f < v {
                return Err(Error::PrecisionExhausted(format!(
                    "pivot of valuation {} not certified against an entry known modulo p^{}",
                    v, f
                )));
            }
        }
        m.swap(t, pi);
        for r in m.iter_mut() {
            r.swap(t, pj);
        }
        let pinv = m[t][t].inv()?;
        for i in t + 1..n {
            if m[i][t].is_exact_zero() {
                continue;
            }
            let f = &m[i][t] * &pinv;
            for j in t..n {
                let s = &f * &m[t][j];
                m[i][j] = &m[i][j] - &s;
            }
        }
        // column clearing does not change the remaining block once column t is cleared
        out.push(v);
    }
    out.sort_unstable();
    Ok(out)
}
