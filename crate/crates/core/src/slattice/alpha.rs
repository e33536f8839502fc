use super::reduce::{fincke_pohst, lll};
use super::{project_to_real, SLattice};
use crate::error::{Error, Result};
use crate::linalg::{self, QMat};
use crate::padic::rational_to_f64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `α_i = 1 / min d(L)` over primitive sublattices of rank `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaValue {
    pub i: usize,
    pub value: f64,
    /// `min d(L)²`, exact.
    pub min_covolume_sq: BigRational,
    /// Basis (rows) of a minimising sublattice, in the lattice of the computation.
    pub witness: Vec<Vec<BigRational>>,
}

/// `γ_i^i` for Hermite's constants, `i ≤ 8`.
const HERMITE_POW: [f64; 9] = [1.0, 1.0, 4.0 / 3.0, 2.0, 4.0, 8.0, 64.0 / 3.0, 64.0, 256.0];

const VECTOR_BUDGET: usize = 20_000;

fn gram(rows: &[Vec<BigRational>]) -> QMat {
    rows.iter().map(|a| rows.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect()).collect()
}

fn to_f64(rows: &[Vec<BigRational>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect()
}

fn combine(coeffs: &[i64], rows: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = rows[0].len();
    (0..n)
        .map(|k| {
            coeffs
                .iter()
                .zip(rows)
                .filter(|(c, _)| **c != 0)
                .map(|(c, r)| BigRational::from_integer((*c).into()) * &r[k])
                .sum()
        })
        .collect()
}

/// `α_i` of the real lattice spanned by the rows of `basis`.
///
/// Minimal sublattices are searched among tuples of vectors up to the Minkowski radius
/// `γ_i^{i/2} d_best / λ_1^{i-1}`, pruned by `∏ |b_j| ≤ γ_i^{i/2} d_best`. Ranks above
/// `n/2` go through the dual lattice.
pub fn alpha_real(basis: &[Vec<BigRational>], i: usize) -> Result<AlphaValue> {
    let n = basis.len();
    if i > n {
        return Err(Error::Dimension(format!("rank {} exceeds dimension {}", i, n)));
    }
    let det = linalg::det(basis).abs();
    if det.is_zero() {
        return Err(Error::Degenerate);
    }
    if i == 0 {
        return Ok(AlphaValue { i, value: 1.0, min_covolume_sq: BigRational::one(), witness: vec![] });
    }
    if i == n {
        let d2 = &det * &det;
        return Ok(AlphaValue { i, value: 1.0 / rational_to_f64(&det), min_covolume_sq: d2, witness: basis.to_vec() });
    }
    if 2 * i > n {
        // d(L) = d(L^⊥ ∩ Λ*) · covol(Λ)
        let inv = linalg::inverse(basis).ok_or(Error::Degenerate)?;
        let dual = linalg::transpose(&inv);
        let a = alpha_real(&dual, n - i)?;
        let d2 = &a.min_covolume_sq * &det * &det;
        let witness = complement_witness(basis, &a.witness)?;
        return Ok(AlphaValue { i, value: 1.0 / rational_to_f64(&d2).sqrt(), min_covolume_sq: d2, witness });
    }
    let approx = to_f64(basis);
    let (_, u) = lll(&approx);
    let reduced: Vec<Vec<BigRational>> = u.iter().map(|c| combine(c, basis)).collect();
    let red_f = to_f64(&reduced);
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();

    // exact λ_1 from enumeration inside the shortest reduced vector
    let r0 = red_f.iter().map(|v| norm2(v)).fold(f64::INFINITY, f64::min);
    let mut lambda1_sq = r0;
    fincke_pohst(&red_f, r0 * (1.0 + 1e-9), true, VECTOR_BUDGET, |c| {
        let v: Vec<f64> = (0..n).map(|k| c.iter().zip(&red_f).map(|(a, r)| *a as f64 * r[k]).sum()).collect();
        lambda1_sq = lambda1_sq.min(norm2(&v));
    })?;

    let mut best_rows: Vec<Vec<BigRational>> = reduced[..i].to_vec();
    let mut best = linalg::det(&gram(&best_rows));
    let hp = HERMITE_POW[i.min(8)];
    let safety = if i <= 4 { 1.0 } else { 4.0 };
    let best_f = rational_to_f64(&best);
    let r2 = safety * hp * best_f / lambda1_sq.powi(i as i32 - 1) * (1.0 + 1e-9);

    let mut vecs: Vec<(f64, Vec<BigRational>)> = Vec::new();
    let res = fincke_pohst(&red_f, r2, true, VECTOR_BUDGET, |c| {
        let v = combine(c, &reduced);
        let nf = norm2(&to_f64(std::slice::from_ref(&v))[0]);
        vecs.push((nf, v));
    });
    if let Err(Error::BudgetExceeded { .. }) = res {
        return Err(Error::BudgetExceeded { lower_bound: 1.0 / best_f.sqrt() });
    }
    res?;
    vecs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // products of squared norms above γ_i^i · best cannot beat `best`
    let mut chosen: Vec<usize> = Vec::with_capacity(i);
    search(&vecs, i, 0, 1.0, &mut chosen, hp * best_f * (1.0 + 1e-9), &mut |idx| {
        let rows: Vec<Vec<BigRational>> = idx.iter().map(|&k| vecs[k].1.clone()).collect();
        let g = linalg::det(&gram(&rows));
        if !g.is_zero() && g < best {
            best = g;
            best_rows = rows;
        }
    });
    let value = 1.0 / rational_to_f64(&best).sqrt();
    Ok(AlphaValue { i, value, min_covolume_sq: best, witness: best_rows })
}

fn search(
    vecs: &[(f64, Vec<BigRational>)],
    i: usize,
    start: usize,
    prod: f64,
    chosen: &mut Vec<usize>,
    bound: f64,
    f: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == i {
        f(chosen);
        return;
    }
    let remaining = (i - chosen.len()) as i32;
    for k in start..vecs.len() {
        if prod * vecs[k].0.powi(remaining) > bound {
            break;
        }
        chosen.push(k);
        search(vecs, i, k + 1, prod * vecs[k].0, chosen, bound, f);
        chosen.pop();
    }
}

/// Basis of `(span W)^⊥ ∩ Λ` for `W` rows in the dual lattice.
fn complement_witness(basis: &[Vec<BigRational>], w: &[Vec<BigRational>]) -> Result<Vec<Vec<BigRational>>> {
    let n = basis.len();
    // coordinates of Λ-vectors x = c·B with w·x = 0 for all w: (w Bᵗ) c = 0
    let bt = linalg::transpose(basis);
    let m: QMat = w.iter().map(|row| (0..n).map(|j| row.iter().zip(&bt).map(|(a, r)| a * &r[j]).sum()).collect()).collect();
    let ker = linalg::kernel(&m, n);
    let entries: Vec<BigRational> = ker.iter().flatten().cloned().collect();
    let den = linalg::common_denominator(&entries);
    let zm: Vec<Vec<num_bigint::BigInt>> = (0..n)
        .map(|r| ker.iter().map(|v| (&v[r] * BigRational::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let sm = linalg::smith(&zm);
    let uinv = linalg::zinverse_unimodular(&sm.u).ok_or(Error::Degenerate)?;
    let k = ker.len();
    Ok((0..k)
        .map(|j| {
            let c: Vec<BigRational> = (0..n).map(|r| BigRational::from_integer(uinv[r][j].clone())).collect();
            (0..n).map(|col| c.iter().zip(basis).map(|(a, row)| a * &row[col]).sum()).collect()
        })
        .collect())
}

/// `α_i(Δ) = α_i(π(Δ))` for a unimodular rational S-lattice.
pub fn alpha(delta: &SLattice, i: usize) -> Result<AlphaValue> {
    let basis = project_to_real(delta)?;
    alpha_real(&basis, i)
}

/// `α_0, …, α_n`.
pub fn alpha_all(delta: &SLattice) -> Result<Vec<AlphaValue>> {
    let basis = project_to_real(delta)?;
    (0..=delta.n()).map(|i| alpha_real(&basis, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{q, qi};

    #[test]
    fn alpha_of_standard_lattice() {
        let z = SLattice::standard(&[3], 4).unwrap();
        for a in alpha_all(&z).unwrap() {
            assert_eq!(a.min_covolume_sq, qi(1));
        }
    }

    #[test]
    fn alpha_skewed() {
        let d = SLattice::from_rational(&[3], &[vec![q(1, 2), qi(0)], vec![qi(0), qi(2)]], 20).unwrap();
        let a1 = alpha(&d, 1).unwrap();
        assert_eq!(a1.min_covolume_sq, q(1, 4));
        assert!((a1.value - 2.0).abs() < 1e-12);
        assert_eq!(alpha(&d, 2).unwrap().min_covolume_sq, qi(1));
    }

    #[test]
    fn dual_route_matches_direct_in_dimension_three() {
        // rank 2 in dimension 3 goes through the dual; compare with a direct pair search
        let b = vec![vec![q(1, 3), qi(0), qi(0)], vec![qi(1), qi(3), qi(0)], vec![qi(0), qi(1), qi(1)]];
        let a2 = alpha_real(&b, 2).unwrap();
        let mut best: Option<BigRational> = None;
        let r = 3i64;
        let mut vs = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    if (x, y, z) != (0, 0, 0) {
                        vs.push(combine(&[x, y, z], &b));
                    }
                }
            }
        }
        for s in 0..vs.len() {
            for t in s + 1..vs.len() {
                let g = linalg::det(&gram(&[vs[s].clone(), vs[t].clone()]));
                if !g.is_zero() && best.as_ref().map_or(true, |bb| &g < bb) {
                    best = Some(g);
                }
            }
        }
        assert_eq!(a2.min_covolume_sq, best.unwrap());
        assert_eq!(linalg::det(&gram(&a2.witness)), a2.min_covolume_sq);
    }
}
