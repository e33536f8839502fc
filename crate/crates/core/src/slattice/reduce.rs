//! LLL reduction and Fincke–Pohst enumeration for real lattices given by row vectors.

use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LLL with `δ = 0.99`. Returns the reduced rows and the integer matrix `U` with
/// `reduced = U · basis`.
pub fn lll(basis: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<i64>>) {
    let k = basis.len();
    let mut b = basis.to_vec();
    let mut u: Vec<Vec<i64>> = (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
    if k == 0 {
        return (b, u);
    }
    let delta = 0.99;
    let gso = |b: &[Vec<f64>]| {
        let mut bs: Vec<Vec<f64>> = Vec::with_capacity(b.len());
        let mut mu = vec![vec![0.0; b.len()]; b.len()];
        let mut nrm = vec![0.0; b.len()];
        for i in 0..b.len() {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = if nrm[j] > 0.0 { dot(&b[i], &bs[j]) / nrm[j] } else { 0.0 };
                for (x, y) in v.iter_mut().zip(&bs[j]) {
                    *x -= mu[i][j] * y;
                }
            }
            nrm[i] = dot(&v, &v);
            bs.push(v);
        }
        (mu, nrm)
    };
    let (mut mu, mut nrm) = gso(&b);
    let mut i = 1;
    let mut guard = 0usize;
    while i < k {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..i).rev() {
            let r = mu[i][j].round();
            if r != 0.0 {
                let bj = b[j].clone();
                for (x, y) in b[i].iter_mut().zip(&bj) {
                    *x -= r * y;
                }
                let uj = u[j].clone();
                for (x, y) in u[i].iter_mut().zip(&uj) {
                    *x -= r as i64 * y;
                }
                let (m2, n2) = gso(&b);
                mu = m2;
                nrm = n2;
            }
        }
        if nrm[i] >= (delta - mu[i][i - 1] * mu[i][i - 1]) * nrm[i - 1] {
            i += 1;
        } else {
            b.swap(i, i - 1);
            u.swap(i, i - 1);
            let (m2, n2) = gso(&b);
            mu = m2;
            nrm = n2;
            i = i.max(2) - 1;
        }
    }
    (b, u)
}

/// Calls `f` on every integer vector `x ≠ 0` with `‖Σ x_i b_i‖² ≤ r2`, one of each `±x`
/// pair when `half` is set. Stops with `BudgetExceeded` after `budget` vectors.
pub fn fincke_pohst(
    basis: &[Vec<f64>],
    r2: f64,
    half: bool,
    budget: usize,
    mut f: impl FnMut(&[i64]),
) -> Result<usize> {
    let k = basis.len();
    if k == 0 {
        return Ok(0);
    }
    let g: Vec<Vec<f64>> = basis.iter().map(|a| basis.iter().map(|b| dot(a, b)).collect()).collect();
    // xᵗ G x = Σ_i q[i][i] (x_i + Σ_{j>i} q[i][j] x_j)²
    let mut q = g.clone();
    for i in 0..k {
        if q[i][i] <= 0.0 {
            return Err(Error::Degenerate);
        }
        for j in i + 1..k {
            let t = q[i][j];
            q[j][i] = t;
            q[i][j] = t / q[i][i];
        }
        for l in i + 1..k {
            for j in l..k {
                q[l][j] -= q[l][i] * q[i][j];
            }
        }
    }
    let mut x = vec![0i64; k];
    let mut count = 0usize;
    let mut err = None;
    rec(&q, k - 1, r2, &mut x, half, &mut |x| {
        if count >= budget {
            err = Some(());
            return false;
        }
        count += 1;
        f(x);
        true
    });
    if err.is_some() {
        return Err(Error::BudgetExceeded { lower_bound: count as f64 });
    }
    Ok(count)
}

fn rec(q: &[Vec<f64>], i: usize, rem: f64, x: &mut Vec<i64>, half: bool, f: &mut impl FnMut(&[i64]) -> bool) -> bool {
    let k = x.len();
    let c: f64 = -(i + 1..k).map(|j| q[i][j] * x[j] as f64).sum::<f64>();
    let w = (rem.max(0.0) / q[i][i]).sqrt() + 1e-9;
    let lo = (c - w).ceil() as i64;
    let hi = (c + w).floor() as i64;
    // with `half`, the first nonzero coordinate from the top must be positive
    let top_zero = half && x[i + 1..].iter().all(|&v| v == 0);
    let lo = if top_zero { lo.max(0) } else { lo };
    for v in lo..=hi {
        x[i] = v;
        let d = v as f64 - c;
        let r = rem - q[i][i] * d * d;
        if r < -1e-9 * (1.0 + rem.abs()) {
            continue;
        }
        if i == 0 {
            if x.iter().all(|&t| t == 0) {
                continue;
            }
            if !f(x) {
                x[i] = 0;
                return false;
            }
        } else if !rec(q, i - 1, r, x, half, f) {
            x[i] = 0;
            return false;
        }
    }
    x[i] = 0;
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lll_finds_short_basis() {
        let b = vec![vec![1.0, 0.0], vec![100.0, 1.0]];
        let (r, u) = lll(&b);
        assert!(r.iter().all(|v| dot(v, v) <= 1.0 + 1e-12));
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        assert_eq!(det.abs(), 1);
    }

    #[test]
    fn enumeration_counts_z2_disc() {
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        // points of Z² with x²+y² ≤ 5, excluding 0: 20
        assert_eq!(fincke_pohst(&b, 5.0, false, 1000, |_| {}).unwrap(), 20);
        assert_eq!(fincke_pohst(&b, 5.0, true, 1000, |_| {}).unwrap(), 10);
        assert!(fincke_pohst(&b, 5.0, false, 3, |_| {}).is_err());
    }
}
