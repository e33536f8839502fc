use super::{eval_pmat, pmat_congruent, split_blocks, residue_zero, PMat, Place, QuadraticFormP};
use crate::error::{Error, Result};
use crate::linalg;
use crate::padic::{legendre, pow_big, smallest_nonresidue, sqrt_padic, PadicNumber, DEFAULT_PRECISION};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Extra digits carried through eliminations.
const GUARD: u32 = 24;

pub(crate) fn pidentity(n: usize, p: u64, prec: u32) -> PMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { PadicNumber::one(p, prec) } else { PadicNumber::zero(p) })
                .collect()
        })
        .collect()
}

fn uncertain(x: &PadicNumber) -> bool {
    x.is_zero() && !x.is_exact_zero()
}

/// Symmetric elimination `gᵗ B g = diag(a)` of a p-adic Gram matrix.
pub(crate) fn diagonalize_pmat(b: &PMat, p: u64, prec: u32) -> Result<(Vec<PadicNumber>, PMat)> {
    let n = b.len();
    let mut m = b.clone();
    let mut g = pidentity(n, p, prec);
    for t in 0..n {
        let mut diag_best: Option<(usize, i64)> = None;
        let mut off_best: Option<(usize, usize, i64)> = None;
        let mut floor: Option<i64> = None;
        for i in t..n {
            for j in i..n {
                let x = &m[i][j];
                if uncertain(x) {
                    let f = x.val_lower_bound();
                    floor = Some(floor.map_or(f, |c: i64| c.min(f)));
                    continue;
                }
                let Some(v) = x.valuation() else { continue };
                if i == j {
                    if diag_best.map_or(true, |(_, b)| v < b) {
                        diag_best = Some((i, v));
                    }
                } else if off_best.map_or(true, |(_, _, b)| v < b) {
                    off_best = Some((i, j, v));
                }
            }
        }
        let best = match (diag_best, off_best) {
            (None, None) => {
                return Err(if floor.is_some() {
                    Error::PrecisionExhausted("Gram block vanishes to known precision".into())
                } else {
                    Error::Degenerate
                })
            }
            (Some((_, a)), Some((_, _, c))) => a.min(c),
            (Some((_, a)), None) => a,
            (None, Some((_, _, c))) => c,
        };
        if let Some(f) = floor {
            if f < best {
                return Err(Error::PrecisionExhausted(format!(
                    "pivot of valuation {} not certified against an entry known modulo p^{}",
                    best, f
                )));
            }
        }
        let piv = match (diag_best, off_best) {
            (Some((i, a)), _) if a == best => i,
            (_, Some((i, j, _))) => {
                // col_i += col_j and row_i += row_j gives a diagonal entry of valuation `best`
                for r in 0..n {
                    let x = m[r][j].clone();
                    m[r][i] = &m[r][i] + &x;
                }
                for c in 0..n {
                    let x = m[j][c].clone();
                    m[i][c] = &m[i][c] + &x;
                }
                for r in g.iter_mut() {
                    let x = r[j].clone();
                    r[i] = &r[i] + &x;
                }
                i
            }
            _ => unreachable!(),
        };
        m.swap(t, piv);
        for r in m.iter_mut() {
            r.swap(t, piv);
        }
        for r in g.iter_mut() {
            r.swap(t, piv);
        }
        let pinv = m[t][t].inv()?;
        for k in t + 1..n {
            if m[k][t].is_exact_zero() {
                continue;
            }
            let c = &m[k][t] * &pinv;
            for l in t + 1..n {
                let s = &c * &m[t][l];
                m[k][l] = &m[k][l] - &s;
            }
            for r in g.iter_mut() {
                let s = &c * &r[t];
                r[k] = &r[k] - &s;
            }
            m[k][t] = PadicNumber::zero(p);
        }
        for l in t + 1..n {
            m[t][l] = PadicNumber::zero(p);
        }
    }
    Ok(((0..n).map(|i| m[i][i].clone()).collect(), g))
}

/// Diagonalization `gᵗ B g = diag(a_1, …, a_n)` over `Q_p`.
pub fn diagonalize(q: &QuadraticFormP) -> Result<(Vec<PadicNumber>, PMat)> {
    let p = q.prime().ok_or_else(|| Error::Invalid("diagonalize needs a finite place".into()))?;
    let prec = DEFAULT_PRECISION + GUARD;
    let b = q.gram_padic_at(prec)?;
    diagonalize_pmat(&b, p, prec)
}

fn min_valuation(b: &PMat) -> Result<i64> {
    b.iter()
        .flatten()
        .filter_map(|x| x.valuation())
        .min()
        .ok_or_else(|| Error::PrecisionExhausted("Gram matrix vanishes to known precision".into()))
}

/// Primitive integral residues of `p^{-v} B` modulo `p^k`, with `v` the minimal valuation.
fn primitive_gram_residues(b: &PMat, k: u32) -> Result<(i64, Vec<Vec<BigInt>>)> {
    let v = min_valuation(b)?;
    let rows = b
        .iter()
        .map(|r| r.iter().map(|x| x.shift(-v).residue(k)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok((v, rows))
}

fn quad_mod(g: &[Vec<BigInt>], x: &[BigInt], m: &BigInt) -> BigInt {
    let mut s = BigInt::zero();
    for (i, r) in g.iter().enumerate() {
        for (j, b) in r.iter().enumerate() {
            s += b * &x[i] * &x[j];
        }
    }
    s.mod_floor(m)
}

fn grad_mod(g: &[Vec<BigInt>], x: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    g.iter().map(|r| r.iter().zip(x).map(|(b, y)| b * y).sum::<BigInt>().mod_floor(m)).collect()
}

/// Newton lift of a zero of `Σ g_ij x_i x_j` in the coordinate `i` (gradient unit there).
fn hensel_lift(g: &[Vec<BigInt>], x: &mut [BigInt], i: usize, m: &BigInt) {
    for _ in 0..200 {
        let f = quad_mod(g, x, m);
        if f.is_zero() {
            return;
        }
        let df = (BigInt::from(2) * grad_mod(g, x, m)[i].clone()).mod_floor(m);
        let inv = df.modinv(m).expect("unit derivative");
        x[i] = (&x[i] - f * inv).mod_floor(m);
    }
    panic!("Hensel iteration failed to converge");
}

/// A zero of `q` with `‖v‖_p = 1`, `q(v) ≡ 0 mod p^prec` (for the Gram matrix scaled to be
/// primitive integral).
///
/// Residue vectors are searched in lexicographic order (first coordinate varying fastest)
/// for a zero with a unit gradient. Forms without such a zero are handled through their
/// diagonal blocks; the zero found that way may have no unit partial derivative.
pub fn find_isotropic_vector(q: &QuadraticFormP, prec: u32) -> Result<Vec<PadicNumber>> {
    let p = q.prime().ok_or_else(|| Error::Invalid("isotropic search needs a finite place".into()))?;
    let n = q.n();
    let work = prec + GUARD;
    let b = q.gram_padic_at(work + GUARD)?;
    let (_, g) = primitive_gram_residues(&b, work)?;
    let m = pow_big(p, work);
    let pb = BigInt::from(p);
    let total = (p as u128).pow(n as u32);
    if total <= 5_000_000 {
        for idx in 1..total {
            let mut t = idx;
            let x: Vec<BigInt> = (0..n)
                .map(|_| {
                    let d = t % p as u128;
                    t /= p as u128;
                    BigInt::from(d as u64)
                })
                .collect();
            if !quad_mod(&g, &x, &pb).is_zero() {
                continue;
            }
            let gr = grad_mod(&g, &x, &pb);
            if let Some(i) = gr.iter().position(|c| !c.is_zero()) {
                let mut x = x;
                hensel_lift(&g, &mut x, i, &m);
                return Ok(x.iter().map(|c| PadicNumber::from_residue(p, c, work)).collect());
            }
        }
    }
    block_zero(q, &b, p, prec, work)
}

fn block_zero(q: &QuadraticFormP, b: &PMat, p: u64, prec: u32, work: u32) -> Result<Vec<PadicNumber>> {
    let n = q.n();
    let (diag, tr) = diagonalize_pmat(b, p, work + GUARD)?;
    let (b0, b1) = split_blocks(&diag);
    let parity: Vec<bool> = diag.iter().map(|a| a.valuation().unwrap().rem_euclid(2) == 1).collect();
    for (block, odd) in [(&b0, false), (&b1, true)] {
        let Some(z0) = residue_zero(block, p) else { continue };
        let idx: Vec<usize> = (0..n).filter(|&i| parity[i] == odd).collect();
        // lift the zero of the unit form Σ u_i z_i²
        let m = pow_big(p, work);
        let units: Vec<BigInt> = idx.iter().map(|&i| diag[i].residue_unit(work)).collect::<Result<_>>()?;
        let k = idx.len();
        let ug: Vec<Vec<BigInt>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { units[i].clone() } else { BigInt::zero() }).collect())
            .collect();
        let mut z: Vec<BigInt> = z0.iter().map(|&c| BigInt::from(c)).collect();
        let lead = z.iter().position(|c| !(c % BigInt::from(p)).is_zero()).unwrap();
        hensel_lift(&ug, &mut z, lead, &m);
        // y_i = p^{-floor(v_i/2)} z_i, x = tr y
        let mut y = vec![PadicNumber::zero(p); n];
        for (slot, &i) in idx.iter().enumerate() {
            let half = diag[i].valuation().unwrap().div_euclid(2);
            y[i] = PadicNumber::from_residue(p, &z[slot], work).shift(-half);
        }
        let x: Vec<PadicNumber> = (0..n)
            .map(|r| {
                let mut s = PadicNumber::zero(p);
                for c in 0..n {
                    s = &s + &(&tr[r][c] * &y[c]);
                }
                s
            })
            .collect();
        let v = x.iter().filter_map(|c| c.valuation()).min().ok_or(Error::Degenerate)?;
        let x: Vec<PadicNumber> = x.iter().map(|c| c.shift(-v)).collect();
        // verify against the primitive integral Gram
        let mv = min_valuation(b)?;
        let val = eval_pmat(b, &x, p).shift(-mv);
        let ok = match val.valuation() {
            Some(w) => w >= prec as i64,
            None => val.is_exact_zero() || val.val_lower_bound() >= prec as i64,
        };
        if !ok {
            return Err(Error::PrecisionExhausted("isotropic vector could not be certified".into()));
        }
        return Ok(x);
    }
    Err(Error::NotIsotropic)
}

/// The standard shape `x_1 x_n + a_2 x_2² + … + a_{n-1} x_{n-1}²` with `a_i ∈ {1, p, u, pu}`.
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub p: u64,
    /// `a_2, …, a_{n-1}` as integers.
    pub coeffs: Vec<i64>,
    /// Transition matrix: `gᵗ B g` is the standard Gram matrix.
    pub g: PMat,
    /// Set when no pair `j ≠ k` has `-a_j/a_k` a non-square.
    pub warning: bool,
}

impl StandardForm {
    pub fn n(&self) -> usize {
        self.coeffs.len() + 2
    }

    /// Exact Gram matrix of the standard form.
    pub fn gram(&self) -> linalg::QMat {
        standard_gram(&self.coeffs)
    }

    pub fn form(&self) -> Result<QuadraticFormP> {
        QuadraticFormP::from_rational(Place::P(self.p), self.gram())
    }
}

/// Gram matrix of `x_1 x_n + Σ a_i x_i²`.
pub fn standard_gram(coeffs: &[i64]) -> linalg::QMat {
    let n = coeffs.len() + 2;
    let mut g = vec![vec![linalg::qi(0); n]; n];
    g[0][n - 1] = linalg::q(1, 2);
    g[n - 1][0] = linalg::q(1, 2);
    for (i, &a) in coeffs.iter().enumerate() {
        g[i + 1][i + 1] = linalg::qi(a);
    }
    g
}

/// Whether `q` has exactly the standard Gram shape with canonical coefficients.
pub fn standard_coeffs(q: &QuadraticFormP) -> Option<Vec<i64>> {
    let p = q.prime()?;
    let e = q.exact()?;
    let n = q.n();
    if n < 3 {
        return None;
    }
    let u = smallest_nonresidue(p) as i64;
    let allowed = [1, p as i64, u, p as i64 * u];
    let mut coeffs = Vec::new();
    for i in 1..n - 1 {
        let a = &e[i][i];
        if !a.is_integer() {
            return None;
        }
        let a = a.to_integer().to_i64()?;
        if !allowed.contains(&a) {
            return None;
        }
        coeffs.push(a);
    }
    if standard_gram(&coeffs) != *e {
        return None;
    }
    Some(coeffs)
}

fn kernel_pmat(rows: &PMat, n: usize, p: u64, prec: u32) -> Result<PMat> {
    // reduced echelon with minimal-valuation pivots
    let mut a = rows.clone();
    let r = a.len();
    let mut pivots: Vec<usize> = Vec::new();
    for t in 0..r {
        let mut best: Option<(usize, i64)> = None;
        for c in 0..n {
            if pivots.contains(&c) {
                continue;
            }
            if let Some(v) = a[t][c].valuation() {
                if best.map_or(true, |(_, b)| v < b) {
                    best = Some((c, v));
                }
            }
        }
        let (c, _) = best.ok_or(Error::Degenerate)?;
        let inv = a[t][c].inv()?;
        for x in a[t].iter_mut() {
            *x = &*x * &inv;
        }
        for s in 0..r {
            if s != t && !a[s][c].is_exact_zero() {
                let f = a[s][c].clone();
                for k in 0..n {
                    let d = &f * &a[t][k];
                    a[s][k] = &a[s][k] - &d;
                }
            }
        }
        pivots.push(c);
    }
    let mut out = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut x = vec![PadicNumber::zero(p); n];
        x[free] = PadicNumber::one(p, prec);
        for (t, &pc) in pivots.iter().enumerate() {
            x[pc] = -&a[t][free];
        }
        out.push(x);
    }
    Ok(out)
}

fn mat_vec_p(b: &PMat, x: &[PadicNumber], p: u64) -> Vec<PadicNumber> {
    b.iter()
        .map(|r| {
            let mut s = PadicNumber::zero(p);
            for (c, y) in r.iter().zip(x) {
                if !c.is_exact_zero() && !y.is_exact_zero() {
                    s = &s + &(c * y);
                }
            }
            s
        })
        .collect()
}

fn dot_p(x: &[PadicNumber], y: &[PadicNumber], p: u64) -> PadicNumber {
    let mut s = PadicNumber::zero(p);
    for (a, b) in x.iter().zip(y) {
        if !a.is_exact_zero() && !b.is_exact_zero() {
            s = &s + &(a * b);
        }
    }
    s
}

/// Reduces an isotropic form (n ≥ 3) to standard shape, certified modulo `p^prec`.
pub fn to_standard(q: &QuadraticFormP, prec: u32) -> Result<StandardForm> {
    let p = q.prime().ok_or_else(|| Error::Invalid("standard form needs a finite place".into()))?;
    let n = q.n();
    if n < 3 {
        return Err(Error::Dimension("standard form needs n >= 3".into()));
    }
    if let Some(coeffs) = standard_coeffs(q) {
        let warning = pair_warning(&coeffs, p);
        return Ok(StandardForm { p, coeffs, g: pidentity(n, p, prec + GUARD), warning });
    }
    let work = prec + 2 * GUARD;
    let b = q.gram_padic_at(work + GUARD)?;
    let v = find_isotropic_vector(q, work)?;
    let bv = mat_vec_p(&b, &v, p);
    let (j, _) = bv
        .iter()
        .enumerate()
        .filter_map(|(i, x)| x.valuation().map(|w| (i, w)))
        .min_by_key(|&(_, w)| w)
        .ok_or(Error::Degenerate)?;
    // w' = e_j / (2 β(v, e_j)), f = w' - q(w') v
    let two = PadicNumber::from_int(p, 2, work + GUARD);
    let scale = (&two * &bv[j]).inv()?;
    let mut wp = vec![PadicNumber::zero(p); n];
    wp[j] = scale.clone();
    let qw = eval_pmat(&b, &wp, p);
    let f: Vec<PadicNumber> = (0..n).map(|i| &wp[i] - &(&qw * &v[i])).collect();
    let bf = mat_vec_p(&b, &f, p);
    let comp = kernel_pmat(&vec![bv, bf], n, p, work + GUARD)?;
    // Gram of the complement
    let k = comp.len();
    let c: PMat = (0..k)
        .map(|r| {
            let bc = mat_vec_p(&b, &comp[r], p);
            (0..k).map(|s| dot_p(&comp[s], &bc, p)).collect()
        })
        .collect();
    let (diag, h) = diagonalize_pmat(&c, p, work + GUARD)?;
    let u0 = smallest_nonresidue(p);
    let mut coeffs = Vec::with_capacity(k);
    let mut cols: Vec<Vec<PadicNumber>> = Vec::with_capacity(n);
    cols.push(v.clone());
    for (t, a) in diag.iter().enumerate() {
        let val = a.valuation().ok_or(Error::Degenerate)?;
        let half = val.div_euclid(2);
        let odd = val.rem_euclid(2);
        let r = if legendre(a.unit(), p) == 1 { 1 } else { u0 };
        let unit_part = a.shift(-val);
        let ratio = unit_part.checked_div(&PadicNumber::from_int(p, r as i64, work + GUARD))?;
        let s = sqrt_padic(&ratio, ratio.prec())?;
        let denom = (&s.shift(half)).inv()?;
        let w: Vec<PadicNumber> = (0..n)
            .map(|i| {
                let mut acc = PadicNumber::zero(p);
                for (l, cv) in comp.iter().enumerate() {
                    if !h[l][t].is_exact_zero() {
                        acc = &acc + &(&cv[i] * &h[l][t]);
                    }
                }
                &acc * &denom
            })
            .collect();
        cols.push(w);
        coeffs.push(if odd == 1 { p as i64 * r as i64 } else { r as i64 });
    }
    cols.push(f);
    let g: PMat = (0..n).map(|i| (0..n).map(|c| cols[c][i].clone()).collect()).collect();
    let sf = StandardForm { p, warning: pair_warning(&coeffs, p), coeffs, g };
    verify_standard(&b, &sf, prec)?;
    Ok(sf)
}

fn pair_warning(coeffs: &[i64], p: u64) -> bool {
    for j in 0..coeffs.len() {
        for k in 0..coeffs.len() {
            if j == k {
                continue;
            }
            let r = BigRational::new((-coeffs[j]).into(), coeffs[k].into());
            let x = PadicNumber::from_rational(p, &r, 4);
            if x.square_class() != Some((false, 1)) {
                return false;
            }
        }
    }
    true
}

/// Checks `gᵗ B g ≡ B_std` entrywise modulo `p^prec`.
pub(crate) fn verify_standard(b: &PMat, sf: &StandardForm, prec: u32) -> Result<()> {
    let p = sf.p;
    let got = pmat_congruent(b, &sf.g, p);
    let want = super::padic_matrix(&sf.gram(), p, prec + GUARD);
    for (rg, rw) in got.iter().zip(&want) {
        for (x, y) in rg.iter().zip(rw) {
            let d = x - y;
            let ok = match d.valuation() {
                Some(v) => v >= prec as i64,
                None => d.is_exact_zero() || d.val_lower_bound() >= prec as i64,
            };
            if !ok {
                return Err(Error::PrecisionExhausted(format!(
                    "standard form congruence fails modulo p^{}",
                    prec
                )));
            }
        }
    }
    Ok(())
}
