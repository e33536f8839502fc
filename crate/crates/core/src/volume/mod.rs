//! Volumes on `Q_S^n`: p-adic residue counts, orbit volumes, the `J_f` kernel, the volume
//! constants `λ_p`, `λ_∞` and the volume `V_{I,q,Ω}(T)` of the dilated region.

mod padic;
mod real;
pub(crate) mod residue;

pub use padic::{
    j_kernel, lambda_p, orbit_volume, variety_volume, volume_p, IntegralForm, LambdaP, OrbitVolume, PadicBox,
    ResidueCount, Variety,
};
pub use real::{lambda_inf, volume_inf, Bispherical, McConfig, McEstimate};

use crate::error::{Error, Result};
use crate::padic::{rational_to_f64, PadicNumber};
use crate::qform::{PadicInterval, QuadraticFormS, Region, SInterval, STime};
use num_rational::BigRational;
use serde::Serialize;

/// `λ(q, Ω) = λ_∞ ∏_p λ_p`.
#[derive(Clone, Debug)]
pub struct LambdaConstants {
    pub finite: Vec<LambdaP>,
    pub inf: McEstimate,
    pub product: f64,
    pub product_stderr: f64,
}

impl LambdaConstants {
    /// `λ |I| ‖T‖^{n-2}`.
    pub fn prediction(&self, interval: &SInterval, t: &STime, n: usize) -> f64 {
        self.product * interval.measure() * t.norm().powi(n as i32 - 2)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaSummary {
    pub lambda_p: std::collections::BTreeMap<String, LambdaPSummary>,
    pub lambda_inf: EstimateSummary,
    pub product: f64,
    pub product_stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaPSummary {
    pub value: String,
    pub value_f64: f64,
    pub hat: String,
    pub classes: Vec<(i64, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateSummary {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl From<McEstimate> for EstimateSummary {
    fn from(e: McEstimate) -> Self {
        EstimateSummary { value: e.value, stderr: e.stderr, samples: e.samples }
    }
}

impl LambdaConstants {
    pub fn summary(&self) -> LambdaSummary {
        LambdaSummary {
            lambda_p: self
                .finite
                .iter()
                .map(|l| {
                    (
                        l.p.to_string(),
                        LambdaPSummary {
                            value: l.value.to_string(),
                            value_f64: l.value_f64(),
                            hat: l.hat.to_string(),
                            classes: l.classes.iter().map(|(e, m)| (*e, m.to_string())).collect(),
                        },
                    )
                })
                .collect(),
            lambda_inf: self.inf.into(),
            product: self.product,
            product_stderr: self.product_stderr,
        }
    }
}

pub fn lambda(q: &QuadraticFormS, region: &Region, cfg: &McConfig) -> Result<LambdaConstants> {
    let inf = lambda_inf(q.real(), &region.inf, cfg)?;
    let finite: Vec<LambdaP> = q.finite().iter().map(|f| lambda_p(f, &region.at(f.prime().unwrap()))).collect::<Result<_>>()?;
    let fp: f64 = finite.iter().map(|l| l.value_f64()).product();
    Ok(LambdaConstants { finite, inf, product: inf.value * fp, product_stderr: inf.stderr * fp })
}

/// `V_{I,q,Ω}(T)` as the product of the per-place volumes.
#[derive(Clone, Debug)]
pub struct VolumeReport {
    pub value: f64,
    pub stderr: f64,
    pub inf: McEstimate,
    /// Exact `vol{v ∈ T_p Ω_p : q_p(v) ∈ I_p}`.
    pub finite: Vec<(u64, BigRational)>,
}

fn unit_interval(p: u64) -> PadicInterval {
    PadicInterval { p, center: PadicNumber::zero(p), b: 0 }
}

#[allow(non_snake_case)]
pub fn volume_V(q: &QuadraticFormS, interval: &SInterval, region: &Region, t: &STime, cfg: &McConfig) -> Result<VolumeReport> {
    for f in &interval.finite {
        if q.finite().iter().all(|g| g.prime() != Some(f.p)) {
            return Err(Error::Invalid(format!("interval given at {} outside S", f.p)));
        }
    }
    let inf = if interval.is_empty_inf() {
        McEstimate::exact(0.0)
    } else {
        volume_inf(q.real(), interval.a_inf, interval.b_inf, &region.inf, t.t_inf, cfg)?
    };
    let mut finite = Vec::new();
    for f in q.finite() {
        let p = f.prime().unwrap();
        let ip = interval.at(p).cloned().unwrap_or_else(|| unit_interval(p));
        finite.push((p, volume_p(f, &ip, &region.at(p), t.exp(p))?));
    }
    let fp: f64 = finite.iter().map(|(_, v)| rational_to_f64(v)).product();
    Ok(VolumeReport { value: inf.value * fp, stderr: inf.stderr * fp, inf, finite })
}
