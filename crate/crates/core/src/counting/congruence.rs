//! Root classes of univariate quadratic congruences `a x² + b x + c ≡ 0 mod p^k`.

/// `x ≡ r mod p^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RootClass {
    pub r: i64,
    pub j: u32,
}

fn val_mod(x: i128, p: i128, k: u32) -> u32 {
    if x == 0 {
        return k;
    }
    let mut v = 0;
    let mut y = x;
    while v < k && y % p == 0 {
        y /= p;
        v += 1;
    }
    v
}

pub(crate) fn inv_mod_i128(a: i128, m: i128) -> Option<i128> {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m))
}

/// Disjoint classes whose union is `{x : a x² + b x + c ≡ 0 mod p^k}`.
pub fn solve(p: u64, k: u32, a: i128, b: i128, c: i128) -> Vec<RootClass> {
    let pi = p as i128;
    let m = pi.pow(k);
    let (a, b, c) = (a.rem_euclid(m), b.rem_euclid(m), c.rem_euclid(m));
    let va = val_mod(a, pi, k);
    let mut out = Vec::new();
    let mut stack = vec![(0i128, 0u32, 1i128)];
    while let Some((r, j, pj)) = stack.pop() {
        let fr = ((a * r % m) * r + b * r + c).rem_euclid(m);
        let d = (2 * a * r + b).rem_euclid(m);
        let vf = val_mod(fr, pi, k);
        let reach = (val_mod(d, pi, k) + j).min(va + 2 * j).min(k);
        if vf < reach {
            continue;
        }
        if reach >= k {
            out.push(RootClass { r: r as i64, j });
            continue;
        }
        for t in (0..pi).rev() {
            stack.push((r + t * pj, j + 1, pj * pi));
        }
    }
    out.sort();
    out
}

/// Square roots modulo `p^k` of every residue, as root classes.
#[derive(Clone, Debug)]
pub struct SqrtTable {
    pub p: u64,
    pub k: u32,
    offsets: Vec<u32>,
    classes: Vec<RootClass>,
}

impl SqrtTable {
    pub fn new(p: u64, k: u32) -> Self {
        let m = (p as i64).pow(k);
        let mut offsets = Vec::with_capacity(m as usize + 1);
        let mut classes = Vec::new();
        for delta in 0..m {
            offsets.push(classes.len() as u32);
            classes.extend(solve(p, k, 1, 0, -(delta as i128)));
        }
        offsets.push(classes.len() as u32);
        SqrtTable { p, k, offsets, classes }
    }

    /// Classes of `y` with `y² ≡ delta mod p^k`, for `0 ≤ delta < p^k`.
    pub fn roots(&self, delta: i64) -> &[RootClass] {
        let i = delta as usize;
        &self.classes[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// `#{x ∈ [lo, hi] : x ≡ r mod m}`.
pub fn count_ap(lo: i128, hi: i128, r: i128, m: i128) -> u64 {
    if hi < lo {
        return 0;
    }
    let hi_n = (hi - r).div_euclid(m);
    let lo_n = (lo - 1 - r).div_euclid(m);
    (hi_n - lo_n) as u64
}
