use crate::error::{Error, Result};
use crate::exec;
use crate::qform::{QuadraticFormP, RealRegion};
use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// Monte Carlo settings for the sphere averages.
#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Independent streams; the standard error comes from their spread.
    pub batches: usize,
    /// Keep doubling the sample size while the relative standard error is above this;
    /// fail once 16 times the requested samples are not enough.
    pub max_rel_stderr: Option<f64>,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig { samples, seed, batches: 64, max_rel_stderr: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate { value, stderr: 0.0, samples: 0 }
    }
}

/// Coordinates `v = E (s u/√α, t w/√β)` adapted to an indefinite real form with Gram
/// eigenvalues `α_i > 0` and `-β_j < 0`, so that `q(v) = s² - t²`.
#[derive(Clone, Debug)]
pub struct Bispherical {
    pub k: usize,
    pub m: usize,
    /// Columns are eigenvectors, positive ones first.
    e: DMatrix<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pub sqrt_det: f64,
}

fn sphere_area(dim: usize) -> f64 {
    // |S^{d}| for d = dim - 1
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d - 2) as f64 * sphere_area(d - 2),
    }
}

impl Bispherical {
    pub fn new(q: &QuadraticFormP) -> Result<Self> {
        let g = q.gram_real().ok_or_else(|| Error::Invalid("expected the real place".into()))?;
        let n = g.len();
        let mat = DMatrix::from_fn(n, n, |i, j| g[i][j]);
        let eig = SymmetricEigen::new(mat);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let tol = 1e-12 * scale.max(1.0);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > tol {
                pos.push((l, i));
            } else if l < -tol {
                neg.push((-l, i));
            } else {
                return Err(Error::Degenerate);
            }
        }
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::Definite);
        }
        let order: Vec<usize> = pos.iter().chain(&neg).map(|x| x.1).collect();
        let e = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let alpha: Vec<f64> = pos.iter().map(|x| x.0).collect();
        let beta: Vec<f64> = neg.iter().map(|x| x.0).collect();
        let det: f64 = alpha.iter().chain(&beta).product();
        Ok(Bispherical { k: alpha.len(), m: beta.len(), e, alpha, beta, sqrt_det: det.sqrt() })
    }

    pub fn n(&self) -> usize {
        self.k + self.m
    }

    /// The vector with coordinates `(s, t, u, w)`.
    pub fn point(&self, s: f64, t: f64, u: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.n();
        let y: Vec<f64> = u
            .iter()
            .zip(&self.alpha)
            .map(|(x, a)| s * x / a.sqrt())
            .chain(w.iter().zip(&self.beta).map(|(x, b)| t * x / b.sqrt()))
            .collect();
        (0..n).map(|r| (0..n).map(|c| self.e[(r, c)] * y[c]).sum()).collect()
    }

    /// `(Σ u_i²/α_i, Σ w_j²/β_j)`.
    fn pq(&self, u: &[f64], w: &[f64]) -> (f64, f64) {
        (
            u.iter().zip(&self.alpha).map(|(x, a)| x * x / a).sum(),
            w.iter().zip(&self.beta).map(|(x, b)| x * x / b).sum(),
        )
    }

    /// Whether `P`, `Q` do not depend on the sphere point.
    fn isotropic(&self) -> bool {
        let flat = |v: &[f64]| v.iter().all(|x| (x - v[0]).abs() <= 1e-14 * v[0]);
        flat(&self.alpha) && flat(&self.beta)
    }

    fn constant(&self) -> f64 {
        sphere_area(self.k) * sphere_area(self.m) / self.sqrt_det
    }
}

fn gl(deg: usize) -> &'static GaussLegendre {
    static G8: OnceLock<GaussLegendre> = OnceLock::new();
    static G20: OnceLock<GaussLegendre> = OnceLock::new();
    let cell = if deg <= 8 { &G8 } else { &G20 };
    cell.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(if deg <= 8 { 8 } else { 20 }).unwrap()))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_0^h ch^a(η) sh^b(η) dη`.
fn ch_sh_integral(a: usize, b: usize, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h < 0.5 {
        return gl(20).integrate(0.0, h, |e| e.cosh().powi(a as i32) * e.sinh().powi(b as i32));
    }
    // (e^η + e^{-η})^a (e^η - e^{-η})^b / 2^{a+b}
    let mut total = 0.0;
    for i in 0..=a {
        for j in 0..=b {
            let c = binom(a, i) * binom(b, j) * if (b - j) % 2 == 1 { -1.0 } else { 1.0 };
            let pw = (2 * (i + j)) as i64 - (a + b) as i64;
            total += c * if pw == 0 { h } else { (pw as f64 * h).exp_m1() / pw as f64 };
        }
    }
    total / 2f64.powi((a + b) as i32)
}

/// The part of the region along one `(u, w)` slice.
struct Slice<'a> {
    b: &'a Bispherical,
    region: &'a RealRegion,
    t: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    p: f64,
    q: f64,
}

impl Slice<'_> {
    /// Point at `q = x`, hyperbolic angle `η`.
    fn point(&self, x: f64, eta: f64) -> Vec<f64> {
        let r = x.abs().sqrt();
        let (s, t) = if x >= 0.0 { (r * eta.cosh(), r * eta.sinh()) } else { (r * eta.sinh(), r * eta.cosh()) };
        self.b.point(s, t, &self.u, &self.w)
    }

    fn inside(&self, x: f64, eta: f64) -> bool {
        let v = self.point(x, eta);
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len == 0.0 {
            return true;
        }
        let dir: Vec<f64> = v.iter().map(|c| c / len).collect();
        len <= self.t * self.region.rho(&dir)
    }

    /// Largest `|x|` on the side `sign` reachable at `η = 0`.
    fn x_max(&self, sign: f64) -> f64 {
        match self.region {
            RealRegion::Ball(r) => (self.t * r).powi(2) / if sign > 0.0 { self.p } else { self.q },
            RealRegion::Radial { .. } => {
                let d = self.point(sign, 0.0);
                let len = d.iter().map(|c| c * c).sum::<f64>().sqrt();
                let dir: Vec<f64> = d.iter().map(|c| c / len).collect();
                (self.t * self.region.rho(&dir) / len).powi(2)
            }
        }
    }

    fn eta_max(&self, x: f64) -> f64 {
        if let RealRegion::Ball(r) = self.region {
            let tr2 = (self.t * r).powi(2);
            let ch2 = if x > 0.0 { (tr2 / x + self.q) / (self.p + self.q) } else { (tr2 / -x + self.p) / (self.p + self.q) };
            return if ch2 <= 1.0 { 0.0 } else { ch2.sqrt().acosh() };
        }
        if !self.inside(x, 0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.inside(x, hi) {
            hi *= 2.0;
            if hi > 700.0 {
                return hi;
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.inside(x, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `∫_0^{η_max} ½ |x|^{(n-2)/2} ch^{k-1} sh^{m-1} dη` (roles swapped for `x < 0`).
    fn density(&self, x: f64) -> f64 {
        let (k, m) = (self.b.k - 1, self.b.m - 1);
        let h = self.eta_max(x);
        let inner = if x > 0.0 { ch_sh_integral(k, m, h) } else { ch_sh_integral(m, k, h) };
        0.5 * x.abs().powf((self.b.n() as f64 - 2.0) / 2.0) * inner
    }

    /// `∫_{(lo, hi)} density`, for `0 ≤ lo < hi` on the side `sign`.
    fn side_integral(&self, sign: f64, lo: f64, hi: f64) -> f64 {
        let xm = self.x_max(sign);
        let hi = hi.min(xm);
        if hi <= lo {
            return 0.0;
        }
        // x = σ², panels graded toward σ = 0 and σ = √x_max
        let (s0, s1, sm) = (lo.sqrt(), hi.sqrt(), xm.sqrt());
        let mut cuts = vec![s0, s1];
        for i in 0..24 {
            let f = 0.5f64.powi(i + 1);
            cuts.push(sm * f);
            cuts.push(sm * (1.0 - f));
        }
        cuts.retain(|c| *c >= s0 && *c <= s1);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * sm);
        let g = gl(20);
        cuts.windows(2).map(|c| g.integrate(c[0], c[1], |s| 2.0 * s * self.density(sign * s * s))).sum()
    }

    fn volume(&self, a: f64, b: f64) -> f64 {
        let mut v = 0.0;
        if b > 0.0 {
            v += self.side_integral(1.0, a.max(0.0), b);
        }
        if a < 0.0 {
            v += self.side_integral(-1.0, (-b).max(0.0), -a);
        }
        v
    }

    /// `(ρ(ĉ)/|c|)^{n-2}` along the asymptotic direction `s = t`.
    fn asymptote(&self) -> f64 {
        let c = self.b.point(1.0, 1.0, &self.u, &self.w);
        let len = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dir: Vec<f64> = c.iter().map(|x| x / len).collect();
        (self.region.rho(&dir) / len).powi(self.b.n() as i32 - 2)
    }
}

fn sphere_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Sphere average of `f(u, w)`. A one-dimensional factor `S^0 = {±1}` is summed exactly.
fn sphere_average(b: &Bispherical, cfg: &McConfig, f: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync)) -> Result<McEstimate> {
    let eval = |u: &[f64], w: &[f64]| -> f64 {
        let us: Vec<Vec<f64>> = if b.k == 1 { vec![vec![1.0], vec![-1.0]] } else { vec![u.to_vec()] };
        let ws: Vec<Vec<f64>> = if b.m == 1 { vec![vec![1.0], vec![-1.0]] } else { vec![w.to_vec()] };
        let cnt = (us.len() * ws.len()) as f64;
        us.iter().flat_map(|u| ws.iter().map(move |w| (u, w))).map(|(u, w)| f(u, w)).sum::<f64>() / cnt
    };
    if b.k == 1 && b.m == 1 {
        return Ok(McEstimate { value: eval(&[1.0], &[1.0]), stderr: 0.0, samples: 4 });
    }
    if cfg.samples == 0 || cfg.batches == 0 {
        return Err(Error::Invalid("Monte Carlo needs a positive sample count".into()));
    }
    let batches = cfg.batches.min(cfg.samples).max(2.min(cfg.samples));
    let mut per = cfg.samples.div_ceil(batches);
    for _ in 0..5 {
        let ids: Vec<u64> = (0..batches as u64).collect();
        let means = exec::map(&ids, |&id| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(id);
            exec::kahan_sum((0..per).map(|_| {
                let u = sphere_point(&mut rng, b.k);
                let w = sphere_point(&mut rng, b.m);
                eval(&u, &w)
            })) / per as f64
        });
        let nb = means.len() as f64;
        let value = exec::kahan_sum(means.iter().copied()) / nb;
        let var = if nb > 1.0 { means.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (nb - 1.0) } else { 0.0 };
        let stderr = (var / nb).sqrt();
        let est = McEstimate { value, stderr, samples: per * batches };
        let good = cfg.max_rel_stderr.map_or(true, |r| stderr <= r * value.abs());
        if good {
            return Ok(est);
        }
        if per * batches >= 16 * cfg.samples {
            return Err(Error::PrecisionExhausted(format!(
                "relative standard error {:.3e} above the configured bound after {} samples",
                stderr / value.abs(),
                est.samples
            )));
        }
        per *= 2;
    }
    unreachable!()
}

fn slice<'a>(b: &'a Bispherical, region: &'a RealRegion, t: f64, u: &[f64], w: &[f64]) -> Slice<'a> {
    let (p, q) = b.pq(u, w);
    Slice { b, region, t, u: u.to_vec(), w: w.to_vec(), p, q }
}

fn first_axis(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

/// `vol{v ∈ R^n : |v| ≤ T ρ(v/|v|), a < q(v) < b}`.
pub fn volume_inf(q: &QuadraticFormP, a: f64, b: f64, region: &RealRegion, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    let bs = Bispherical::new(q)?;
    if b <= a {
        return Ok(McEstimate::exact(0.0));
    }
    let c = bs.constant();
    if bs.isotropic() && matches!(region, RealRegion::Ball(_)) {
        let s = slice(&bs, region, t, &first_axis(bs.k), &first_axis(bs.m));
        return Ok(McEstimate::exact(c * s.volume(a, b)));
    }
    let est = sphere_average(&bs, cfg, &|u, w| slice(&bs, region, t, u, w).volume(a, b))?;
    Ok(McEstimate { value: c * est.value, stderr: c * est.stderr, samples: est.samples })
}

/// `λ_∞ = lim vol{|v| ≤ Tρ, q(v) ∈ (a, b)} / ((b - a) T^{n-2})`, from the asymptotic
/// direction of each hyperbolic slice.
pub fn lambda_inf(q: &QuadraticFormP, region: &RealRegion, cfg: &McConfig) -> Result<McEstimate> {
    let bs = Bispherical::new(q)?;
    let n = bs.n();
    if n < 3 {
        return Err(Error::Dimension("volume constants need n ≥ 3".into()));
    }
    let c = bs.constant() / (2.0 * (n as f64 - 2.0));
    if bs.isotropic() && matches!(region, RealRegion::Ball(_)) {
        let s = slice(&bs, region, 1.0, &first_axis(bs.k), &first_axis(bs.m));
        return Ok(McEstimate::exact(c * s.asymptote()));
    }
    let est = sphere_average(&bs, cfg, &|u, w| slice(&bs, region, 1.0, u, w).asymptote())?;
    Ok(McEstimate { value: c * est.value, stderr: c * est.stderr, samples: est.samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> QuadraticFormP {
        let n = d.len();
        QuadraticFormP::real((0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect()).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn ch_sh_closed_form_matches_quadrature() {
        for (a, b) in [(0, 0), (1, 0), (0, 1), (2, 1), (1, 2), (3, 0)] {
            for h in [0.7, 2.0, 5.0] {
                let direct = gl(20).integrate(0.0, h, |e| e.cosh().powi(a) * e.sinh().powi(b));
                let closed = ch_sh_integral(a as usize, b as usize, h);
                assert!((direct - closed).abs() < 1e-9 * direct.abs().max(1.0), "{} {} {}", a, b, h);
            }
        }
    }

    #[test]
    fn lambda_known_values() {
        let cfg = McConfig::new(1000, 1);
        let l = lambda_inf(&diag(&[1.0, 1.0, 1.0, -1.0]), &RealRegion::Ball(1.0), &cfg).unwrap();
        assert!((l.value - PI).abs() < 1e-12);
        let l = lambda_inf(&diag(&[1.0, 1.0, -1.0, -1.0]), &RealRegion::Ball(1.0), &cfg).unwrap();
        assert!((l.value - PI * PI / 2.0).abs() < 1e-12);
        let l = lambda_inf(&diag(&[1.0, 1.0, -1.0]), &RealRegion::Ball(1.0), &cfg).unwrap();
        assert!((l.value - 2f64.sqrt() * PI).abs() < 1e-12);
    }

    #[test]
    fn definite_forms_are_rejected() {
        let cfg = McConfig::new(10, 1);
        assert!(matches!(lambda_inf(&diag(&[1.0, 2.0, 3.0]), &RealRegion::Ball(1.0), &cfg), Err(Error::Definite)));
    }
}
