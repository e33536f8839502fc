//! Exact linear algebra over `Q` and `Z`: determinants, inverses, kernels and the
//! Smith normal form with its unimodular transforms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type QMat = Vec<Vec<BigRational>>;
pub type ZMat = Vec<Vec<BigInt>>;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_q(m: &[Vec<i64>]) -> QMat {
    m.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
}

pub fn identity(n: usize) -> QMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { qi(1) } else { qi(0) }).collect()).collect()
}

pub fn zidentity(n: usize) -> ZMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> QMat {
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|r| {
            (0..m)
                .map(|j| {
                    let mut s = BigRational::zero();
                    for (t, x) in r.iter().enumerate().take(k) {
                        if !x.is_zero() {
                            s += x * &b[t][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn zmat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> ZMat {
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|r| {
            (0..m)
                .map(|j| {
                    let mut s = BigInt::zero();
                    for (t, x) in r.iter().enumerate().take(k) {
                        s += x * &b[t][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `xᵗ B y`.
pub fn bilinear(b: &[Vec<BigRational>], x: &[BigRational], y: &[BigRational]) -> BigRational {
    let by = mat_vec(b, y);
    x.iter().zip(&by).map(|(a, c)| a * c).sum()
}

/// `gᵗ B g`.
pub fn congruent(b: &[Vec<BigRational>], g: &[Vec<BigRational>]) -> QMat {
    mat_mul(&mat_mul(&transpose(g), b), g)
}

/// Row echelon form in place; returns pivot columns and the determinant factor
/// (product of pivots times the sign of the row permutation).
fn echelon(m: &mut QMat) -> (Vec<usize>, BigRational) {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut factor = BigRational::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        if piv != r {
            m.swap(piv, r);
            factor = -factor;
        }
        let pv = m[r][c].clone();
        factor *= &pv;
        for i in r + 1..rows {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pv;
            for j in c..cols {
                let t = &f * &m[r][j];
                m[i][j] -= t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (pivots, factor)
}

pub fn det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    if n == 0 {
        return BigRational::one();
    }
    let mut a = m.to_vec();
    let (piv, f) = echelon(&mut a);
    if piv.len() < n {
        BigRational::zero()
    } else {
        f
    }
}

pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut a = m.to_vec();
    echelon(&mut a).0.len()
}

/// Inverse by Gauss–Jordan elimination; `None` when singular.
pub fn inverse(m: &[Vec<BigRational>]) -> Option<QMat> {
    let n = m.len();
    let mut a: QMat = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { qi(1) } else { qi(0) }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(piv, c);
        let pv = a[c][c].clone();
        for x in a[c].iter_mut() {
            *x /= &pv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &f * &a[c][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the right kernel `{x : M x = 0}`.
pub fn kernel(m: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let rows = m.len();
    let mut a = m.to_vec();
    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(piv, r);
        let pv = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x /= &pv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..ncols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut x = vec![qi(0); ncols];
        x[free] = qi(1);
        for (i, &pc) in pivots.iter().enumerate() {
            x[pc] = -a[i][free].clone();
        }
        out.push(x);
    }
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Columns of `m` as vectors.
pub fn columns<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    transpose(m)
}

/// Least common multiple of the denominators.
pub fn common_denominator(entries: &[BigRational]) -> BigInt {
    entries.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Smith normal form `U A V = D` with `U`, `V` unimodular and `D` diagonal with
/// non-negative entries, each dividing the next.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: ZMat,
    pub v: ZMat,
    pub d: Vec<BigInt>,
}

pub fn smith(a: &[Vec<BigInt>]) -> Smith {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.to_vec();
    let mut u = zidentity(rows);
    let mut v = zidentity(cols);
    let steps = rows.min(cols);
    for t in 0..steps {
        // find the nonzero entry of least absolute value in the lower-right block
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !m[i][j].is_zero()
                        && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                // remaining block is zero
                return finish_smith(m, u, v, steps);
            };
            m.swap(t, bi);
            u.swap(t, bi);
            for r in m.iter_mut() {
                r.swap(t, bj);
            }
            for r in v.iter_mut() {
                r.swap(t, bj);
            }
            let mut clean = true;
            // clear column t
            for i in t + 1..rows {
                if m[i][t].is_zero() {
                    continue;
                }
                let f = m[i][t].div_floor(&m[t][t]);
                for j in t..cols {
                    let x = &f * &m[t][j];
                    m[i][j] -= x;
                }
                for j in 0..rows {
                    let x = &f * &u[t][j];
                    u[i][j] -= x;
                }
                if !m[i][t].is_zero() {
                    clean = false;
                }
            }
            // clear row t
            for j in t + 1..cols {
                if m[t][j].is_zero() {
                    continue;
                }
                let f = m[t][j].div_floor(&m[t][t]);
                for i in t..rows {
                    let x = &f * &m[i][t];
                    m[i][j] -= x;
                }
                for i in 0..cols {
                    let x = &f * &v[i][t];
                    v[i][j] -= x;
                }
                if !m[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: pivot must divide every entry of the remaining block
            let mut fixed = true;
            'outer: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&m[i][j] % &m[t][t]).is_zero() {
                        // add row i to row t and redo
                        for c in t..cols {
                            let x = m[i][c].clone();
                            m[t][c] += x;
                        }
                        for c in 0..rows {
                            let x = u[i][c].clone();
                            u[t][c] += x;
                        }
                        fixed = false;
                        break 'outer;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if m[t][t].is_negative() {
            for c in t..cols {
                m[t][c] = -m[t][c].clone();
            }
            for c in 0..rows {
                u[t][c] = -u[t][c].clone();
            }
        }
    }
    finish_smith(m, u, v, steps)
}

fn finish_smith(m: ZMat, u: ZMat, v: ZMat, steps: usize) -> Smith {
    let d = (0..steps).map(|i| m[i][i].abs()).collect();
    Smith { u, v, d }
}

/// Inverse of a unimodular integer matrix.
pub fn zinverse_unimodular(a: &[Vec<BigInt>]) -> Option<ZMat> {
    let qm: QMat = a.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let inv = inverse(&qm)?;
    inv.into_iter()
        .map(|r| r.into_iter().map(|x| if x.is_integer() { Some(x.to_integer()) } else { None }).collect())
        .collect()
}
