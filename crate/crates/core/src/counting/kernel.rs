//! Slab enumeration: the prefix `w_1 … w_{n-1}` is iterated inside the ball, the last
//! coordinate is resolved by monotone pieces of a univariate quadratic intersected with
//! the congruence classes of every prime.

use super::congruence::{count_ap, inv_mod_i128, solve, RootClass};
use super::plan::{float_between, float_budget, EnumerationPlan, PrimeTest, RealTest, Tri};
use crate::exec;
use num_integer::{Integer, Roots};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub count: u64,
    pub undecided: u64,
    pub prefixes: u64,
}

impl std::ops::AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.count += o.count;
        self.undecided += o.undecided;
        self.prefixes += o.prefixes;
    }
}

/// Inclusive integer interval.
type Span = (i64, i64);

struct Scratch {
    per_prime: Vec<Vec<RootClass>>,
    combined: Vec<(i128, i128)>,
    next: Vec<(i128, i128)>,
    full: Vec<i64>,
}

pub(crate) fn run(plan: &EnumerationPlan) -> Tally {
    if plan.empty {
        return Tally::default();
    }
    if plan.n == 1 {
        let mut s = scratch(plan);
        return prefix(plan, &[], plan.radius_sq, &mut s);
    }
    let b = plan.box_bound;
    let slabs: Vec<i64> = (-b..=b).collect();
    let parts = exec::map(&slabs, |&w0| {
        let mut s = scratch(plan);
        let mut buf = vec![0i64; plan.n - 1];
        buf[0] = w0;
        let rem = plan.radius_sq - w0 as i128 * w0 as i128;
        let mut t = Tally::default();
        if rem >= 0 {
            nest(plan, 1, &mut buf, rem, &mut s, &mut t);
        }
        t
    });
    let mut total = Tally::default();
    for t in parts {
        total += t;
    }
    total
}

fn scratch(plan: &EnumerationPlan) -> Scratch {
    Scratch {
        per_prime: vec![Vec::new(); plan.primes.len()],
        combined: Vec::new(),
        next: Vec::new(),
        full: vec![0; plan.n],
    }
}

fn nest(plan: &EnumerationPlan, pos: usize, buf: &mut [i64], rem: i128, s: &mut Scratch, t: &mut Tally) {
    if pos == plan.n - 1 {
        *t += prefix(plan, buf, rem, s);
        return;
    }
    let b = rem.sqrt() as i64;
    for w in -b..=b {
        buf[pos] = w;
        nest(plan, pos + 1, buf, rem - w as i128 * w as i128, s, t);
    }
}

fn classes_for(pt: &PrimeTest, prefix: &[i64], out: &mut Vec<RootClass>) {
    out.clear();
    let m = pt.m;
    let l = prefix.len();
    let s = &pt.s;
    let r: Vec<i128> = prefix.iter().map(|&x| (x as i128).rem_euclid(m)).collect();
    let alpha = s[l][l];
    let mut beta = 0i128;
    let mut gamma = 0i128;
    for i in 0..l {
        beta = (beta + s[i][l] * r[i]) % m;
        gamma = (gamma + s[i][i] * (r[i] * r[i] % m)) % m;
        for j in i + 1..l {
            gamma = (gamma + s[i][j] * (r[i] * r[j] % m)) % m;
        }
    }
    gamma = (gamma - pt.t).rem_euclid(m);
    match &pt.sqrt {
        Some((table, inv2a)) => {
            let delta = (beta * beta - 4 * alpha % m * gamma).rem_euclid(m);
            for c in table.roots(delta as i64) {
                let pj = (pt.p as i128).pow(c.j);
                let x = ((c.r as i128 - beta) * (inv2a % pj)).rem_euclid(pj);
                out.push(RootClass { r: x as i64, j: c.j });
            }
        }
        None => out.extend(solve(pt.p, pt.k, alpha, beta, gamma)),
    }
}

fn prefix(plan: &EnumerationPlan, prefix: &[i64], rem: i128, s: &mut Scratch) -> Tally {
    let mut tally = Tally { prefixes: 1, ..Tally::default() };
    for pt in &plan.primes {
        if let Some(c) = &pt.compat {
            if !c.ok[c.index(prefix)] {
                return tally;
            }
        }
    }
    for (i, pt) in plan.primes.iter().enumerate() {
        classes_for(pt, prefix, &mut s.per_prime[i]);
        if s.per_prime[i].is_empty() {
            return tally;
        }
    }
    s.combined.clear();
    s.combined.push((0, 1));
    for (i, pt) in plan.primes.iter().enumerate() {
        s.next.clear();
        for &(r0, m0) in &s.combined {
            for c in &s.per_prime[i] {
                let m1 = (pt.p as i128).pow(c.j);
                let inv = inv_mod_i128(m0 % m1, m1).unwrap_or(0);
                let k = ((c.r as i128 - r0).rem_euclid(m1) * inv) % m1;
                s.next.push((r0 + m0 * k, m0 * m1));
            }
        }
        std::mem::swap(&mut s.combined, &mut s.next);
    }
    let xb = rem.sqrt() as i64;
    let (certain, possible) = real_spans(plan, prefix, xb);
    if plan.checks.is_empty() {
        for &(r, m) in &s.combined {
            let c: u64 = certain.iter().map(|&(a, b)| count_ap(a as i128, b as i128, r, m)).sum();
            let p: u64 = possible.iter().map(|&(a, b)| count_ap(a as i128, b as i128, r, m)).sum();
            tally.count += c;
            tally.undecided += p - c;
        }
        return tally;
    }
    let last = plan.n - 1;
    for (i, &o) in plan.order[..last].iter().enumerate() {
        s.full[o] = prefix[i];
    }
    for &(r, m) in &s.combined {
        for &(a, b) in &possible {
            let start = a as i128 + (r - a as i128).rem_euclid(m);
            let mut x = start;
            while x <= b as i128 {
                s.full[plan.order[last]] = x as i64;
                let sure = certain.iter().any(|&(c0, c1)| c0 as i128 <= x && x <= c1 as i128);
                match plan.vector_checks(&s.full) {
                    Tri::No => {}
                    Tri::Yes if sure => tally.count += 1,
                    _ => tally.undecided += 1,
                }
                x += m;
            }
        }
    }
    tally
}

/// Smallest `x ∈ [l, r]` with `pred(x)`, for `pred` monotone false → true; `r + 1` if none.
fn first_true(mut l: i64, r: i64, pred: impl Fn(i64) -> bool) -> i64 {
    let mut hi = r + 1;
    while l < hi {
        let mid = l + (hi - l) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            l = mid + 1;
        }
    }
    hi
}

/// Certain and possible spans of the last coordinate in `[-xb, xb]`.
fn real_spans(plan: &EnumerationPlan, prefix: &[i64], xb: i64) -> (Vec<Span>, Vec<Span>) {
    let l = prefix.len();
    match &plan.real {
        RealTest::Exact { g, lo, hi } => {
            let a = g[l][l];
            let mut b = 0i128;
            let mut c = 0i128;
            for i in 0..l {
                let wi = prefix[i] as i128;
                b += 2 * g[i][l] * wi;
                let mut row = 0i128;
                for j in 0..l {
                    row += g[i][j] * prefix[j] as i128;
                }
                c += row * wi;
            }
            let f = |x: i64| {
                let x = x as i128;
                (a * x + b) * x + c
            };
            let ge = |x: i64| if f(x) >= *lo { Tri::Yes } else { Tri::No };
            let le = |x: i64| if f(x) <= *hi { Tri::Yes } else { Tri::No };
            pieces(a.signum() as i32, b.signum() as i32, vertex_i128(a, b), xb, true, &ge, &le)
        }
        RealTest::Float { g, lo, hi } => {
            let n = plan.n;
            let a = g[l][l];
            let (mut b, mut babs, mut c, mut cabs) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..l {
                let wi = prefix[i] as f64;
                let t = 2.0 * g[i][l] * wi;
                b += t;
                babs += t.abs();
                for j in 0..l {
                    let t = g[i][j] * wi * prefix[j] as f64;
                    c += t;
                    cabs += t.abs();
                }
            }
            let ge = |x: i64| {
                let xf = x as f64;
                let v = (a * xf + b) * xf + c;
                let abs = a.abs() * xf * xf + babs * xf.abs() + cabs;
                float_between(v, float_budget(n, abs), *lo, f64::INFINITY)
            };
            let le = |x: i64| {
                let xf = x as f64;
                let v = (a * xf + b) * xf + c;
                let abs = a.abs() * xf * xf + babs * xf.abs() + cabs;
                float_between(v, float_budget(n, abs), f64::NEG_INFINITY, *hi)
            };
            let vertex = if a != 0.0 { (-b / (2.0 * a)).floor().clamp(-(xb as f64) - 1.0, xb as f64) as i64 } else { 0 };
            pieces(sign_f(a), sign_f(b), vertex, xb, false, &ge, &le)
        }
    }
}

fn sign_f(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn vertex_i128(a: i128, b: i128) -> i64 {
    if a == 0 {
        return 0;
    }
    Integer::div_floor(&-b, &(2 * a)).clamp(i64::MIN as i128 / 2, i64::MAX as i128 / 2) as i64
}

/// Splits `[-xb, xb]` into monotone pieces of `f` and resolves `lo ≤ f ≤ hi` on each.
/// An inexact vertex is isolated together with its right neighbour.
fn pieces(
    sa: i32,
    sb: i32,
    vertex: i64,
    xb: i64,
    exact: bool,
    ge: &dyn Fn(i64) -> Tri,
    le: &dyn Fn(i64) -> Tri,
) -> (Vec<Span>, Vec<Span>) {
    let mut certain = Vec::with_capacity(4);
    let mut possible = Vec::with_capacity(4);
    let mut run = |l: i64, r: i64, increasing: bool| {
        let (l, r) = (l.max(-xb), r.min(xb));
        if l > r {
            return;
        }
        let (c, p) = monotone(l, r, increasing, exact, ge, le);
        if c.0 <= c.1 {
            certain.push(c);
        }
        if p.0 <= p.1 {
            possible.push(p);
        }
    };
    if sa == 0 {
        run(-xb, xb, sb >= 0);
    } else if exact {
        // left of the vertex f decreases when a > 0
        run(-xb, vertex, sa < 0);
        run(vertex + 1, xb, sa > 0);
    } else {
        run(-xb, vertex - 1, sa < 0);
        run(vertex, vertex, true);
        run(vertex + 1, vertex + 1, true);
        run(vertex + 2, xb, sa > 0);
    }
    (certain, possible)
}

fn monotone(
    l: i64,
    r: i64,
    increasing: bool,
    exact: bool,
    ge: &dyn Fn(i64) -> Tri,
    le: &dyn Fn(i64) -> Tri,
) -> (Span, Span) {
    // increasing: ge runs No … Unknown … Yes and le runs Yes … Unknown … No
    let (rising, falling) = if increasing { (ge, le) } else { (le, ge) };
    let c0 = first_true(l, r, |x| rising(x) == Tri::Yes);
    let c1 = first_true(l, r, |x| falling(x) != Tri::Yes) - 1;
    if exact {
        return ((c0, c1), (c0, c1));
    }
    let p0 = first_true(l, r, |x| rising(x) != Tri::No);
    let p1 = first_true(l, r, |x| falling(x) == Tri::No) - 1;
    ((c0, c1), (p0, p1))
}
