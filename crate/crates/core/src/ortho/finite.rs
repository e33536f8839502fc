//! Linear algebra over `F_p` for the first step of Witt lifting.

use crate::error::{Error, Result};

pub type FMat = Vec<Vec<u64>>;

fn md(x: i128, p: u64) -> u64 {
    x.rem_euclid(p as i128) as u64
}

pub fn inv_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    // Fermat
    let mut r = 1u64;
    let mut b = a;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    Some(r)
}

pub fn fidentity(n: usize) -> FMat {
    (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect()
}

pub fn fmul(a: &FMat, b: &FMat, p: u64) -> FMat {
    let m = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| {
            (0..m)
                .map(|j| {
                    let s: u128 = r.iter().zip(b).map(|(x, row)| *x as u128 * row[j] as u128).sum();
                    (s % p as u128) as u64
                })
                .collect()
        })
        .collect()
}

pub fn fmat_vec(a: &FMat, v: &[u64], p: u64) -> Vec<u64> {
    a.iter()
        .map(|r| (r.iter().zip(v).map(|(x, y)| *x as u128 * *y as u128).sum::<u128>() % p as u128) as u64)
        .collect()
}

pub fn ftranspose(a: &FMat) -> FMat {
    crate::linalg::transpose(a)
}

/// `xᵗ B y` over `F_p`.
pub fn fbil(b: &FMat, x: &[u64], y: &[u64], p: u64) -> u64 {
    let by = fmat_vec(b, y, p);
    (x.iter().zip(&by).map(|(a, c)| *a as u128 * *c as u128).sum::<u128>() % p as u128) as u64
}

/// Inverse over `F_p`; `None` when singular.
pub fn finv(a: &FMat, p: u64) -> Option<FMat> {
    let n = a.len();
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<u64> = r.iter().map(|x| x % p).collect();
            row.extend((0..n).map(|j| u64::from(i == j)));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| m[i][c] != 0)?;
        m.swap(piv, c);
        let iv = inv_p(m[c][c], p)?;
        for x in m[c].iter_mut() {
            *x = ((*x as u128 * iv as u128) % p as u128) as u64;
        }
        for i in 0..n {
            if i != c && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..2 * n {
                    m[i][j] = md(m[i][j] as i128 - f as i128 * m[c][j] as i128, p);
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Reflection `x ↦ x - 2 B(x,w)/Q(w) w` as a matrix, `Q(w) = wᵗ B w ≠ 0`.
fn reflection(b: &FMat, w: &[u64], p: u64) -> FMat {
    let n = w.len();
    let qw = fbil(b, w, w, p);
    let c = (2 * inv_p(qw, p).expect("anisotropic")) % p;
    let bw = fmat_vec(b, w, p); // row vector wᵗB (B symmetric)
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let t = (c as u128 * w[i] as u128 % p as u128) * bw[j] as u128 % p as u128;
                    md(u64::from(i == j) as i128 - t as i128, p)
                })
                .collect()
        })
        .collect()
}

/// Isometry `X` of `(F_p^n, B)` with `X v1 = v2`, a product of at most two reflections
/// (three when an auxiliary vector is needed).
pub fn witt_finite(b: &FMat, v1: &[u64], v2: &[u64], p: u64) -> Result<FMat> {
    let n = v1.len();
    let q = |x: &[u64]| fbil(b, x, x, p);
    if v1.iter().all(|&x| x % p == 0) || v2.iter().all(|&x| x % p == 0) {
        return Err(Error::Invalid("Witt step needs nonzero vectors".into()));
    }
    if q(v1) != q(v2) {
        return Err(Error::NoIsometry);
    }
    if v1.iter().zip(v2).all(|(a, c)| a % p == c % p) {
        return Ok(fidentity(n));
    }
    let diff: Vec<u64> = v1.iter().zip(v2).map(|(a, c)| md(*a as i128 - *c as i128, p)).collect();
    if q(&diff) != 0 {
        return Ok(reflection(b, &diff, p));
    }
    if q(v1) != 0 {
        let sum: Vec<u64> = v1.iter().zip(v2).map(|(a, c)| (a + c) % p).collect();
        return Ok(fmul(&reflection(b, v2, p), &reflection(b, &sum, p), p));
    }
    // both isotropic and orthogonal: route through an auxiliary anisotropic w
    let total = (p as u128).pow(n as u32);
    for idx in 1..total {
        let mut t = idx;
        let w: Vec<u64> = (0..n)
            .map(|_| {
                let d = (t % p as u128) as u64;
                t /= p as u128;
                d
            })
            .collect();
        if q(&w) == 0 || fbil(b, v1, &w, p) == 0 || fbil(b, v2, &w, p) == 0 {
            continue;
        }
        let sw = reflection(b, &w, p);
        let v1p = fmat_vec(&sw, v1, p);
        let d: Vec<u64> = v1p.iter().zip(v2).map(|(a, c)| md(*a as i128 - *c as i128, p)).collect();
        return Ok(fmul(&reflection(b, &d, p), &sw, p));
    }
    Err(Error::NoIsometry)
}

/// Solution of `Xᵗ A + A X ≡ C (mod p)` with optional prescribed entries `X[i][j] = x`.
///
/// The system is solved by elimination over the `n²` unknowns; free unknowns are 0.
/// Returns `None` when the prescribed entries make the system inconsistent.
pub fn solve_sylvester_constrained(a: &FMat, c: &FMat, fixed: &[(usize, usize, u64)], p: u64) -> Option<FMat> {
    let n = a.len();
    let nv = n * n;
    let var = |i: usize, j: usize| i * n + j;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut r = vec![0u64; nv + 1];
            // (AX)_{ij} = Σ_k A_ik X_kj ; (XᵗA)_{ij} = Σ_k X_ki A_kj
            for k in 0..n {
                r[var(k, j)] = (r[var(k, j)] + a[i][k]) % p;
                r[var(k, i)] = (r[var(k, i)] + a[k][j]) % p;
            }
            r[nv] = c[i][j] % p;
            rows.push(r);
        }
    }
    for &(i, j, x) in fixed {
        let mut r = vec![0u64; nv + 1];
        r[var(i, j)] = 1;
        r[nv] = x % p;
        rows.push(r);
    }
    let sol = solve_linear(rows, nv, p)?;
    Some((0..n).map(|i| (0..n).map(|j| sol[var(i, j)]).collect()).collect())
}

/// Solution of `Xᵗ A + A X ≡ C (mod p)` for symmetric invertible `A` and symmetric `C`.
pub fn solve_symmetric_sylvester(a: &FMat, c: &FMat, p: u64) -> FMat {
    solve_sylvester_constrained(a, c, &[], p).expect("symmetric Sylvester system is consistent")
}

/// Rank of the map `X ↦ Xᵗ A + A X` restricted to the upper-triangular targets.
pub fn sylvester_rank(a: &FMat, p: u64) -> usize {
    let n = a.len();
    let zero = vec![vec![0u64; n]; n];
    let _ = &zero;
    let nv = n * n;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut r = vec![0u64; nv + 1];
            for k in 0..n {
                r[k * n + j] = (r[k * n + j] + a[i][k]) % p;
                r[k * n + i] = (r[k * n + i] + a[k][j]) % p;
            }
            rows.push(r);
        }
    }
    echelon(&mut rows, nv, p).len()
}

fn echelon(rows: &mut [Vec<u64>], nv: usize, p: u64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nv {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(piv, r);
        let iv = inv_p(rows[r][c], p).unwrap();
        for x in rows[r].iter_mut() {
            *x = ((*x as u128 * iv as u128) % p as u128) as u64;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for j in 0..=nv {
                    rows[i][j] = md(rows[i][j] as i128 - f as i128 * rows[r][j] as i128, p);
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

fn solve_linear(mut rows: Vec<Vec<u64>>, nv: usize, p: u64) -> Option<Vec<u64>> {
    let pivots = echelon(&mut rows, nv, p);
    // inconsistent rows: all-zero coefficients with nonzero rhs
    for r in rows.iter().skip(pivots.len()) {
        if r[nv] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; nv];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][nv];
    }
    Some(x)
}
