use super::residue::{max_modulus_exp, p_pow, to_integer, ClassProblem, Mode, Poly2};
use crate::error::{Error, Result};
use crate::padic::{inv_mod, pow_big, rational_mod, valuation, PadicNumber};
use crate::qform::{FiniteRegion, PadicInterval, QuadraticFormP};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `q = p^{-scale} P` with `P` a polynomial with coefficients in `Z_p`.
#[derive(Clone, Debug)]
pub struct IntegralForm {
    pub p: u64,
    pub n: usize,
    pub scale: i64,
    /// Upper-triangular polynomial coefficients of `P`.
    coeffs: Vec<Vec<PadicNumber>>,
    /// Modulus exponent available for residues of the coefficients.
    m: u32,
}

impl IntegralForm {
    pub fn new(q: &QuadraticFormP) -> Result<Self> {
        let p = q.prime().ok_or_else(|| Error::Invalid("expected a p-adic form".into()))?;
        let n = q.n();
        let native = max_modulus_exp(p);
        let g = q.gram_padic_at(native + 16)?;
        let two = PadicNumber::from_int(p, 2, native + 16);
        let mut coeffs = vec![vec![PadicNumber::zero(p); n]; n];
        let mut min_val = i64::MAX;
        for i in 0..n {
            for j in i..n {
                let c = if i == j { g[i][i].clone() } else { &g[i][j] * &two };
                if !c.is_zero() {
                    min_val = min_val.min(c.valuation().unwrap());
                }
                coeffs[i][j] = c;
            }
        }
        if min_val == i64::MAX {
            return Err(Error::Degenerate);
        }
        let scale = (-min_val).max(0);
        let mut m = native;
        for row in coeffs.iter_mut() {
            for c in row.iter_mut() {
                *c = c.shift(scale);
                if let Some(a) = c.abs_prec() {
                    m = m.min(a.max(0) as u32);
                }
            }
        }
        Ok(IntegralForm { p, n, scale, coeffs, m })
    }

    /// Exponent of the largest usable modulus.
    pub fn modulus_exp(&self) -> u32 {
        self.m
    }

    /// Upper-triangular coefficients of `P` reduced modulo `p^k`.
    pub fn coefficient_residues(&self, k: u32) -> Result<Vec<Vec<i128>>> {
        if k > self.m {
            return Err(Error::PrecisionExhausted(format!(
                "form known modulo p^{}, need p^{}",
                self.m, k
            )));
        }
        self.coeffs
            .iter()
            .map(|r| r.iter().map(|c| Ok(c.residue(k)?.try_into().expect("residue below p^m"))).collect())
            .collect()
    }

    /// `P(x) - t` modulo `p^m`.
    pub(crate) fn poly(&self, t: &BigInt) -> Result<Poly2> {
        let quad: Vec<Vec<BigInt>> = self
            .coeffs
            .iter()
            .map(|r| r.iter().map(|c| c.residue(self.m)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Poly2::new(self.p, self.m, &quad, &vec![BigInt::zero(); self.n], &(-t))
    }
}

/// Residue count `#Y_ℓ` and its normalisation `#Y_ℓ / p^{dℓ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueCount {
    pub p: u64,
    pub level: u32,
    pub dim: usize,
    pub count: BigInt,
    pub normalized: BigRational,
}

impl ResidueCount {
    pub fn value(&self) -> f64 {
        crate::padic::rational_to_f64(&self.normalized)
    }
}

/// Sets whose residue images can be counted.
#[derive(Clone, Debug)]
pub enum Variety {
    /// `Z_p^n`.
    Box { p: u64, n: usize },
    /// Primitive vectors `U_p^n`; the units of `Z_p` for `n = 1`.
    Primitive { p: u64, n: usize },
    /// `{x : q(x) = c}`, optionally restricted to primitive vectors with `ρ(x) = p^E`.
    Quadric { form: QuadraticFormP, value: BigRational, primitive: bool, region: Option<(FiniteRegion, i64)> },
    /// `Z_p v_1 ⊕ … ⊕ Z_p v_d` for independent vectors `v_i ∈ Q_p^n` (rational entries).
    Parallelepiped { p: u64, basis: Vec<Vec<BigRational>> },
}

impl Variety {
    pub fn prime(&self) -> Result<u64> {
        match self {
            Variety::Box { p, .. } | Variety::Primitive { p, .. } | Variety::Parallelepiped { p, .. } => Ok(*p),
            Variety::Quadric { form, .. } => form.prime().ok_or_else(|| Error::Invalid("expected a p-adic form".into())),
        }
    }
}

fn quadric_problem<'a>(
    form: &QuadraticFormP,
    value: &BigRational,
    primitive: bool,
    region: Option<&'a (FiniteRegion, i64)>,
) -> Result<Option<ClassProblem<'a>>> {
    let f = IntegralForm::new(form)?;
    let p = f.p;
    // P(x) = p^s c
    let target = value * p_pow(p, f.scale);
    if !target.is_zero() && valuation(&target, p).unwrap() < 0 {
        return Ok(None);
    }
    let t = rational_mod(&target, p, f.m)?;
    if let Some((r, _)) = region {
        r.validate(p, f.n)?;
    }
    Ok(Some(ClassProblem {
        p,
        n: f.n,
        poly: Some(f.poly(&t)?),
        congruence: None,
        primitive,
        region: region.map(|(r, e)| (r, *e)),
    }))
}

/// `#π_ℓ(Y)` by descent over residue classes, normalised by `p^{dℓ}`.
pub fn variety_volume(y: &Variety, d: usize, level: u32) -> Result<ResidueCount> {
    let p = y.prime()?;
    let count = match y {
        Variety::Box { n, .. } | Variety::Primitive { n, .. } => {
            let prob = ClassProblem {
                p,
                n: *n,
                poly: None,
                congruence: None,
                primitive: matches!(y, Variety::Primitive { .. }),
                region: None,
            };
            to_integer(&prob.tally(Mode::VarietyAt(level))?.to_rational(p))
        }
        Variety::Quadric { form, value, primitive, region } => match quadric_problem(form, value, *primitive, region.as_ref())? {
            None => BigInt::zero(),
            Some(prob) => to_integer(&prob.tally(Mode::VarietyAt(level))?.to_rational(p)),
        },
        Variety::Parallelepiped { basis, .. } => parallelepiped_count(p, basis, level)?,
    };
    let normalized = BigRational::from_integer(count.clone()) * p_pow(p, -((d as i64) * level as i64));
    Ok(ResidueCount { p, level, dim: d, count, normalized })
}

/// Serre volume `ν_{n-1}` of the primitive cone `{u ∈ U_p^n : q(u) = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitVolume {
    pub p: u64,
    pub value: BigRational,
    /// `c(K_p) = vol(K_p e_1) / (1 - 1/p)`.
    pub c_k: BigRational,
    /// Deepest level at which the descent still had to split a class.
    pub regular_level: u32,
}

pub fn orbit_volume(q: &QuadraticFormP) -> Result<OrbitVolume> {
    let prob = quadric_problem(q, &BigRational::zero(), true, None)?.expect("zero is integral");
    let t = prob.tally(Mode::Limit { leray: false })?;
    let value = t.to_rational(prob.p);
    if value.is_zero() {
        return Err(Error::NotIsotropic);
    }
    let p = prob.p;
    let c_k = &value / (BigRational::one() - p_pow(p, -1));
    Ok(OrbitVolume { p, value, c_k, regular_level: t.deepest })
}

/// Leray mass `lim #{u ∈ U_p^n : q(u) ≡ 0 mod p^k, ρ(u) = p^E} / p^{(n-1)k}` of the cone
/// of the integral model `P = p^s q`.
fn cone_leray(q: &QuadraticFormP, region: &FiniteRegion, e: i64) -> Result<BigRational> {
    let reg = (region.clone(), e);
    let prob = quadric_problem(q, &BigRational::zero(), true, Some(&reg))?.expect("zero is integral");
    Ok(prob.tally(Mode::Limit { leray: true })?.to_rational(prob.p))
}

/// The finite-place volume constant.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaP {
    pub p: u64,
    /// `λ_{q,Ω̂} = Σ_z p^{(n-2)z} · (mass of the cone where ρ = p^z)`, for `‖v‖ = ρ(v)`.
    pub hat: BigRational,
    /// `λ_{q,Ω} = λ_{q,Ω̂} / (1 - p^{2-n})`, for the full region `‖v‖ ≤ ρ(v)`.
    pub value: BigRational,
    /// Cone mass per value `p^E` of `ρ`.
    pub classes: Vec<(i64, BigRational)>,
}

impl LambdaP {
    pub fn value_f64(&self) -> f64 {
        crate::padic::rational_to_f64(&self.value)
    }
}

/// `λ_p` with `vol{v ∈ T_p Ω_p : q(v) ∈ a + p^b Z_p} ~ λ_p p^{-b} T_p^{n-2}`.
///
/// The z-sum runs over the exponents taken by `ρ_p`. The cone mass is the Leray
/// density `lim #{q ≡ 0 mod p^k}/p^{(n-1)k}`, which is the quantity that governs the
/// volume; it agrees with `vol(K·e_1)` when `q` is unimodular.
pub fn lambda_p(q: &QuadraticFormP, region: &FiniteRegion) -> Result<LambdaP> {
    let n = q.n() as i64;
    if n < 3 {
        return Err(Error::Dimension("volume constants need n ≥ 3".into()));
    }
    let f = IntegralForm::new(q)?;
    let p = f.p;
    region.validate(p, q.n())?;
    let mut hat = BigRational::zero();
    let mut classes = Vec::new();
    for e in region.exps() {
        let mass = cone_leray(q, region, e)?;
        hat += &mass * p_pow(p, (n - 2) * e);
        classes.push((e, mass));
    }
    hat *= p_pow(p, -f.scale);
    if hat.is_zero() {
        return Err(Error::NotIsotropic);
    }
    let value = &hat / (BigRational::one() - p_pow(p, 2 - n));
    Ok(LambdaP { p, hat, value, classes })
}

/// `vol{u ∈ U_p^n : ρ(u) = p^E}`.
fn region_class_volume(p: u64, n: usize, region: &FiniteRegion, e: i64) -> Result<BigRational> {
    let prob = ClassProblem { p, n, poly: None, congruence: None, primitive: true, region: Some((region, e)) };
    Ok(prob.tally(Mode::Limit { leray: false })?.to_rational(p))
}

/// `vol{v ∈ Q_p^n : ‖v‖ ≤ p^{n_p} ρ(v), q(v) ∈ I_p}`, exactly.
///
/// Writing `v = p^{-z} u` with `u` primitive, the shell `z` contributes
/// `p^{nz} vol{u : ρ(u) ≥ p^{z-n_p}, P(u) ∈ p^{2z+s} a + p^{2z+b+s} Z_p}`; shells with
/// `2z + b + s ≤ 0` form a geometric tail.
pub fn volume_p(q: &QuadraticFormP, interval: &PadicInterval, region: &FiniteRegion, n_p: i64) -> Result<BigRational> {
    let f = IntegralForm::new(q)?;
    let p = f.p;
    let n = f.n as i64;
    if interval.p != p {
        return Err(Error::Invalid(format!("interval at {} for a form at {}", interval.p, p)));
    }
    region.validate(p, f.n)?;
    let s = f.scale;
    let b = interval.b;
    let a = &interval.center;
    let zero_inside = interval.contains(&PadicNumber::zero(p));
    let z1 = Integer::div_floor(&(-(b + s)), &2);
    let rlevel = region.level().max(1) as i64;
    let mut total = BigRational::zero();
    for e in region.exps() {
        let zmax = n_p + e;
        let vol_e = region_class_volume(p, f.n, region, e)?;
        let mut zstart = z1 + 1;
        if zero_inside {
            let zstar = z1.min(zmax);
            total += &vol_e * p_pow(p, n * zstar) / (BigRational::one() - p_pow(p, -n));
        } else if let Some(va) = a.valuation() {
            zstart = zstart.max(Integer::div_ceil(&(-(s + va)), &2));
        }
        for z in zstart..=zmax {
            let k = 2 * z + b + s;
            debug_assert!(k >= 1);
            let shifted = a.shift(2 * z + s);
            if shifted.valuation().is_some_and(|v| v < 0) {
                continue;
            }
            let t = shifted.residue(k as u32)?;
            let kk = k.max(rlevel);
            if kk as u32 + 1 >= f.m {
                return Err(Error::PrecisionExhausted(format!("shell z = {} needs residues mod p^{}", z, kk)));
            }
            let reg = (region.clone(), e);
            let prob = ClassProblem {
                p,
                n: f.n,
                poly: Some(f.poly(&t)?),
                congruence: Some(k as u32),
                primitive: true,
                region: Some((&reg.0, reg.1)),
            };
            let count = prob.tally(Mode::CountAt(kk as u32))?.to_rational(p);
            total += count * p_pow(p, n * z - n * kk);
        }
    }
    Ok(total)
}

/// A product of balls `x_i ∈ c_i + p^{k_i} Z_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicBox {
    pub p: u64,
    pub balls: Vec<(BigRational, i64)>,
}

impl PadicBox {
    pub fn unit(p: u64, n: usize) -> Self {
        PadicBox { p, balls: vec![(BigRational::zero(), 0); n] }
    }

    fn ball_contains(&self, i: usize, x: &BigRational) -> bool {
        let (c, k) = &self.balls[i];
        let d = x - c;
        d.is_zero() || valuation(&d, self.p).unwrap() >= *k
    }

    pub fn contains(&self, x: &[BigRational]) -> bool {
        (0..self.balls.len()).all(|i| self.ball_contains(i, &x[i]))
    }
}

fn max_neg_val(xs: &[&BigRational], p: u64) -> i64 {
    xs.iter().filter(|x| !x.is_zero()).map(|x| -valuation(x, p).unwrap()).max().unwrap_or(0).max(0)
}

/// `J_f(p^{-r}, ζ) = p^{-r(n-2)} ∫ f(p^{-r}, x_2, …, x_{n-1}, x_n) dx_2⋯dx_{n-1}` with
/// `x_n = p^r(ζ - q(0, x_2, …, x_{n-1}, 0))`, for `f` the indicator of a box.
///
/// The integral is an exact residue count; `level` is a lower bound on the counting level.
pub fn j_kernel(q: &QuadraticFormP, f: &PadicBox, r: i64, zeta: &BigRational, level: u32) -> Result<BigRational> {
    let p = f.p;
    let n = q.n();
    if n < 3 || f.balls.len() != n {
        return Err(Error::Dimension("J_f needs n ≥ 3 and a box of matching dimension".into()));
    }
    let b = q.exact().ok_or_else(|| Error::Invalid("J_f needs an exact Gram matrix".into()))?;
    let first = p_pow(p, -r);
    if !f.ball_contains(0, &first) {
        return Ok(BigRational::zero());
    }
    let mid: Vec<usize> = (1..n - 1).collect();
    let d = mid.len();
    let (cn, kn) = &f.balls[n - 1];
    let gamma = zeta - cn * p_pow(p, -r);
    let mu = kn - r;
    // F(y) = q0(c + p^k y) - γ
    let c: Vec<&BigRational> = mid.iter().map(|&i| &f.balls[i].0).collect();
    let kx: Vec<i64> = mid.iter().map(|&i| f.balls[i].1).collect();
    let mut quad = vec![vec![BigRational::zero(); d]; d];
    let mut lin = vec![BigRational::zero(); d];
    let mut cst = -gamma;
    for (a, &i) in mid.iter().enumerate() {
        for (bb, &j) in mid.iter().enumerate() {
            let bij = &b[i][j];
            cst += bij * c[a] * c[bb];
            lin[a] += bij * c[bb] * BigRational::from_integer(2.into()) * p_pow(p, kx[a]);
            let coef = bij * p_pow(p, kx[a] + kx[bb]);
            match a.cmp(&bb) {
                std::cmp::Ordering::Equal => quad[a][a] += coef,
                std::cmp::Ordering::Less => quad[a][bb] += coef * BigRational::from_integer(2.into()),
                std::cmp::Ordering::Greater => {}
            }
        }
    }
    let mut all: Vec<&BigRational> = quad.iter().flatten().collect();
    all.extend(lin.iter());
    all.push(&cst);
    let sigma = max_neg_val(&all, p);
    let k = mu + sigma;
    let measure: BigRational = kx.iter().fold(p_pow(p, -r * d as i64), |acc, &e| acc * p_pow(p, -e));
    if k <= 0 {
        return Ok(measure);
    }
    let m = max_modulus_exp(p);
    let lvl = (k as u32).max(level);
    if lvl + 1 >= m {
        return Err(Error::PrecisionExhausted(format!("J_f needs residues mod p^{}", lvl)));
    }
    let scale = p_pow(p, sigma);
    let red = |x: &BigRational| rational_mod(&(x * &scale), p, m);
    let qz: Vec<Vec<BigInt>> = quad.iter().map(|r| r.iter().map(red).collect::<Result<_>>()).collect::<Result<_>>()?;
    let lz: Vec<BigInt> = lin.iter().map(red).collect::<Result<_>>()?;
    let poly = Poly2::new(p, m, &qz, &lz, &red(&cst)?)?;
    let prob = ClassProblem { p, n: d, poly: Some(poly), congruence: Some(k as u32), primitive: false, region: None };
    let count = prob.tally(Mode::CountAt(lvl))?.to_rational(p);
    Ok(measure * count * p_pow(p, -(d as i64) * lvl as i64))
}

/// Local Smith form over `Z/p^m`: returns `U` (rows) and the diagonal valuations.
fn local_smith(a: &mut [Vec<i128>], p: u64, m: u32) -> Result<(Vec<Vec<i128>>, Vec<u32>)> {
    let pm = (p as i128).pow(m);
    let n = a.len();
    let d = a[0].len();
    let val = |x: i128| -> u32 {
        let mut x = x.rem_euclid(pm);
        if x == 0 {
            return m;
        }
        let mut v = 0;
        while x % p as i128 == 0 {
            x /= p as i128;
            v += 1;
        }
        v
    };
    let mut u: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    let mut sv = Vec::with_capacity(d);
    for i in 0..d {
        let mut best = (m, i, i);
        for r in i..n {
            for c in i..d {
                let v = val(a[r][c]);
                if v < best.0 {
                    best = (v, r, c);
                }
            }
        }
        let (s, r, c) = best;
        if s >= m {
            return Err(Error::Degenerate);
        }
        a.swap(i, r);
        u.swap(i, r);
        for row in a.iter_mut() {
            row.swap(i, c);
        }
        let ps = (p as i128).pow(s);
        let unit = a[i][i] / ps;
        let inv: i128 = inv_mod(&BigInt::from(unit), &BigInt::from(pm)).unwrap().try_into().unwrap();
        for r2 in i + 1..n {
            let f = ((a[r2][i] / ps).rem_euclid(pm) * inv).rem_euclid(pm);
            if f == 0 {
                continue;
            }
            for c2 in 0..d {
                a[r2][c2] = (a[r2][c2] - f * a[i][c2]).rem_euclid(pm);
            }
            for c2 in 0..n {
                u[r2][c2] = (u[r2][c2] - f * u[i][c2]).rem_euclid(pm);
            }
        }
        for c2 in i + 1..d {
            let f = ((a[i][c2] / ps).rem_euclid(pm) * inv).rem_euclid(pm);
            for row in a.iter_mut() {
                row[c2] = (row[c2] - f * row[i]).rem_euclid(pm);
            }
        }
        sv.push(s);
    }
    Ok((u, sv))
}

/// `#π_ℓ(Z_p v_1 ⊕ … ⊕ Z_p v_d)` in `p^{-r}Z_p^n / p^ℓ Z_p^n`, by digit descent with a
/// Smith-form membership test.
fn parallelepiped_count(p: u64, basis: &[Vec<BigRational>], level: u32) -> Result<BigInt> {
    let d = basis.len();
    if d == 0 {
        return Ok(BigInt::one());
    }
    let n = basis[0].len();
    let entries: Vec<&BigRational> = basis.iter().flatten().collect();
    let r = max_neg_val(&entries, p) as u32;
    let m = max_modulus_exp(p);
    let top = level + r;
    let scale = p_pow(p, r as i64);
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|j| rational_mod(&(&basis[j][i] * &scale), p, m).map(|x| x.try_into().unwrap()))
                .collect::<Result<Vec<i128>>>()
        })
        .collect::<Result<_>>()?;
    let (u, sv) = local_smith(&mut a, p, m)?;
    let smax = *sv.iter().max().unwrap();
    if top.max(smax) + 1 >= m {
        return Err(Error::PrecisionExhausted(format!("parallelepiped count needs residues mod p^{}", top.max(smax))));
    }
    let pm = (p as i128).pow(m);
    let pi = p as i128;
    let member = |y: &[i128], l: u32| -> bool {
        (0..n).all(|i| {
            let w: i128 = (0..n).fold(0, |acc, j| (acc + u[i][j] * y[j]).rem_euclid(pm));
            let need = if i < d { sv[i].min(l) } else { l };
            w % pi.pow(need) == 0
        })
    };
    // descent over y = p^r x mod p^{l}, l = 0..=top
    let mut total = BigInt::zero();
    let mut stack: Vec<(Vec<i128>, u32)> = vec![(vec![0; n], 0)];
    while let Some((y, l)) = stack.pop() {
        if !member(&y, l) {
            continue;
        }
        if l >= smax || l == top {
            total += pow_big(p, d as u32 * (top - l.min(top)));
            continue;
        }
        let step = pi.pow(l);
        let mut digits = vec![0i128; n];
        for _ in 0..(p as usize).pow(n as u32) {
            stack.push((y.iter().zip(&digits).map(|(a, b)| a + b * step).collect(), l + 1));
            for c in digits.iter_mut() {
                *c += 1;
                if *c < pi {
                    break;
                }
                *c = 0;
            }
        }
    }
    Ok(total)
}
