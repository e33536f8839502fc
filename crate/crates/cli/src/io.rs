//! JSON input formats and their conversion to library types.
//!
//! Rationals are `"num/den"` strings or JSON integers. p-adic literals are
//! `{"val": v, "digits": [d0, d1, …]}` with base-p little-endian digits; `"val": null`
//! is an exact zero.

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use sadic_core::linalg::QMat;
use sadic_core::padic::PadicNumber;
use sadic_core::qform::{
    FiniteRegion, PadicInterval, Place, QuadraticFormP, QuadraticFormS, RealRegion, Region, SInterval, STime,
};
use sadic_core::slattice::SLattice;
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const INPUT_PRECISION: u32 = 64;

/// A scalar as written in an input file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
    Padic { val: Option<i64>, digits: Vec<u64> },
}

impl Scalar {
    pub fn rational(&self) -> Result<BigRational> {
        match self {
            Scalar::Int(k) => Ok(BigRational::from_integer((*k).into())),
            Scalar::Text(s) => parse_rational(s),
            Scalar::Float(x) => bail!("expected an exact rational, got the float {}", x),
            Scalar::Padic { .. } => bail!("expected a rational, got a p-adic literal"),
        }
    }

    pub fn real(&self) -> Result<f64> {
        match self {
            Scalar::Float(x) => Ok(*x),
            _ => Ok(self.rational()?.to_f64().ok_or_else(|| anyhow!("value out of range"))?),
        }
    }

    pub fn padic(&self, p: u64, prec: u32) -> Result<PadicNumber> {
        match self {
            Scalar::Padic { val: None, .. } => Ok(PadicNumber::zero(p)),
            Scalar::Padic { val: Some(v), digits } => Ok(PadicNumber::from_digits(p, *v, digits)?),
            _ => Ok(PadicNumber::from_rational(p, &self.rational()?, prec)),
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, Scalar::Int(_) | Scalar::Text(_))
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().with_context(|| format!("bad rational {:?}", s))?;
    let d: BigInt = d.parse().with_context(|| format!("bad rational {:?}", s))?;
    if d.is_zero() {
        bail!("zero denominator in {:?}", s);
    }
    Ok(BigRational::new(n, d))
}

pub fn rational_json(x: &BigRational) -> Value {
    Value::String(x.to_string())
}

pub fn padic_json(x: &PadicNumber) -> Value {
    if x.is_exact_zero() {
        json!({"val": null, "digits": []})
    } else if x.is_zero() {
        json!({"val": x.val_lower_bound(), "digits": []})
    } else {
        json!({"val": x.val_lower_bound(), "digits": x.digits()})
    }
}

fn qmat(rows: &[Vec<Scalar>]) -> Result<QMat> {
    rows.iter().map(|r| r.iter().map(Scalar::rational).collect()).collect()
}

fn square(rows: &[Vec<Scalar>], n: usize) -> Result<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        bail!("gram matrix must be {}×{}", n, n);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlaceKey {
    Name(String),
    Prime(u64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceJson {
    p: PlaceKey,
    gram: Vec<Vec<Scalar>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FormJson {
    n: Option<usize>,
    places: Option<Vec<PlaceJson>>,
    /// Shorthand for one rational form at every place of `S`.
    gram: Option<Vec<Vec<Scalar>>>,
    #[serde(rename = "S")]
    s: Option<Vec<u64>>,
    irrational: Option<bool>,
}

/// Form JSON: `{"n", "places": [{"p": "inf" | prime, "gram"}]}` or `{"gram", "S"}`.
pub fn form_from_json(v: &Value) -> Result<QuadraticFormS> {
    let f: FormJson = serde_json::from_value(v.clone()).context("form schema")?;
    if let Some(gram) = &f.gram {
        let n = f.n.unwrap_or(gram.len());
        square(gram, n)?;
        let primes = f.s.clone().unwrap_or_default();
        return Ok(QuadraticFormS::rational(qmat(gram)?, &primes)?);
    }
    let places = f.places.as_ref().ok_or_else(|| anyhow!("form needs \"places\" or \"gram\""))?;
    let n = f.n.or_else(|| places.first().map(|p| p.gram.len())).ok_or_else(|| anyhow!("empty form"))?;
    let mut out = Vec::new();
    let mut float_real = false;
    for place in places {
        square(&place.gram, n)?;
        let form = match &place.p {
            PlaceKey::Name(s) if s == "inf" => {
                if place.gram.iter().flatten().all(Scalar::is_exact) {
                    QuadraticFormP::from_rational(Place::Inf, qmat(&place.gram)?)?
                } else {
                    float_real = true;
                    let g = place.gram.iter().map(|r| r.iter().map(Scalar::real).collect()).collect::<Result<_>>()?;
                    QuadraticFormP::real(g)?
                }
            }
            PlaceKey::Name(s) => bail!("unknown place {:?}", s),
            PlaceKey::Prime(p) => {
                if place.gram.iter().flatten().all(Scalar::is_exact) {
                    QuadraticFormP::from_rational(Place::P(*p), qmat(&place.gram)?)?
                } else {
                    let g = place
                        .gram
                        .iter()
                        .map(|r| r.iter().map(|x| x.padic(*p, INPUT_PRECISION)).collect())
                        .collect::<Result<_>>()?;
                    QuadraticFormP::padic(*p, g)?
                }
            }
        };
        out.push(form);
    }
    Ok(QuadraticFormS::new(out, f.irrational.unwrap_or(float_real))?)
}

/// Form at one prime of an S-form.
pub fn local_form(q: &QuadraticFormS, p: u64) -> Result<QuadraticFormP> {
    q.at(Place::P(p)).cloned().ok_or_else(|| anyhow!("the form has no component at p = {}", p))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteIntervalJson {
    p: u64,
    center: Scalar,
    b: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalJson {
    inf: [Scalar; 2],
    #[serde(default)]
    finite: Vec<FiniteIntervalJson>,
}

/// Interval JSON: `{"inf": [a, b], "finite": [{"p", "center", "b"}]}`; primes of `S` that
/// are not listed get `Z_p`.
pub fn interval_from_json(v: &Value, primes: &[u64]) -> Result<SInterval> {
    let i: IntervalJson = serde_json::from_value(v.clone()).context("interval schema")?;
    let mut finite = Vec::new();
    for f in &i.finite {
        if !primes.contains(&f.p) {
            bail!("interval given at p = {} outside S", f.p);
        }
        let prec = (f.b.max(0) as u32) + INPUT_PRECISION;
        finite.push(PadicInterval { p: f.p, center: f.center.padic(f.p, prec)?, b: f.b });
    }
    for &p in primes {
        if !finite.iter().any(|f| f.p == p) {
            finite.push(PadicInterval { p, center: PadicNumber::zero(p), b: 0 });
        }
    }
    Ok(SInterval::new(i.inf[0].real()?, i.inf[1].real()?, finite)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RealRegionJson {
    Ball(f64),
    /// `{x : max_i |x_i| ≤ r}`.
    Sup(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    residue: Vec<u64>,
    exp: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    level: u32,
    default: i64,
    #[serde(default)]
    entries: Vec<TableEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteRegionJson {
    p: u64,
    ball: Option<i64>,
    table: Option<TableJson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionJson {
    inf: Option<RealRegionJson>,
    #[serde(default)]
    finite: Vec<FiniteRegionJson>,
}

/// Region JSON: `{"inf": {"ball": r} | {"sup": r}, "finite": [{"p", "ball": e} |
/// {"p", "table": {"level", "default", "entries": [{"residue", "exp"}]}}]}`. Missing parts
/// are unit balls.
pub fn region_from_json(v: &Value, primes: &[u64], n: usize) -> Result<Region> {
    let r: RegionJson = serde_json::from_value(v.clone()).context("region schema")?;
    let inf = match r.inf {
        None => RealRegion::Ball(1.0),
        Some(RealRegionJson::Ball(x)) => RealRegion::Ball(x),
        Some(RealRegionJson::Sup(x)) => RealRegion::Radial {
            rho: Arc::new(move |d: &[f64]| x / d.iter().fold(0.0f64, |m, c| m.max(c.abs()))),
            max: x * (n as f64).sqrt(),
        },
    };
    let (RealRegion::Ball(x) | RealRegion::Radial { max: x, .. }) = &inf;
    if !(*x > 0.0 && x.is_finite()) {
        bail!("real region radius must be positive");
    }
    let mut finite = Vec::new();
    for f in r.finite {
        if !primes.contains(&f.p) {
            bail!("region given at p = {} outside S", f.p);
        }
        let fr = match (f.ball, f.table) {
            (Some(e), None) => FiniteRegion::Ball(e),
            (None, Some(t)) => FiniteRegion::Table {
                level: t.level,
                default: t.default,
                entries: t.entries.into_iter().map(|e| (e.residue, e.exp)).collect::<BTreeMap<_, _>>(),
            },
            _ => bail!("region at p = {} needs exactly one of \"ball\" and \"table\"", f.p),
        };
        fr.validate(f.p, n)?;
        finite.push((f.p, fr));
    }
    for &p in primes {
        if !finite.iter().any(|f| f.0 == p) {
            finite.push((p, FiniteRegion::Ball(0)));
        }
    }
    finite.sort_by_key(|f| f.0);
    Ok(Region { inf, finite })
}

/// `"inf=200,3=9,5=5"`: `T_∞` and `T_p`, each `T_p` a power of `p`.
pub fn parse_time(s: &str) -> Result<STime> {
    let mut t_inf = None;
    let mut exps = Vec::new();
    for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected key=value in {:?}", part))?;
        if k.trim() == "inf" {
            let x: f64 = v.trim().parse().with_context(|| format!("bad T_inf {:?}", v))?;
            t_inf = Some(x);
            continue;
        }
        let p: u64 = k.trim().parse().with_context(|| format!("bad prime {:?}", k))?;
        let tp = parse_rational(v)?;
        exps.push((p, power_of(&tp, p).ok_or_else(|| anyhow!("T_{} = {} is not a power of {}", p, tp, p))?));
    }
    let t_inf = t_inf.ok_or_else(|| anyhow!("missing inf=… in {:?}", s))?;
    Ok(STime::new(t_inf, exps)?)
}

fn power_of(x: &BigRational, p: u64) -> Option<i64> {
    let v = sadic_core::padic::valuation(x, p)?;
    let pb = BigRational::from_integer(BigInt::from(p));
    (pb.pow(v as i32) == *x).then_some(v)
}

pub fn time_label(t: &STime) -> String {
    let mut s = format!("inf={}", t.t_inf);
    for &(p, e) in &t.exps {
        s.push_str(&format!(",{}={}", p, BigRational::from_integer(BigInt::from(p)).pow(e as i32)));
    }
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeJson {
    #[serde(rename = "S")]
    s: Vec<u64>,
    basis: Vec<Vec<Scalar>>,
}

/// Lattice JSON: `{"S": [3, 5], "basis": [[rationals]]}`, basis vectors as rows.
pub fn lattice_from_json(v: &Value) -> Result<SLattice> {
    let l: LatticeJson = serde_json::from_value(v.clone()).context("lattice schema")?;
    Ok(SLattice::from_rational(&l.s, &qmat(&l.basis)?, INPUT_PRECISION)?)
}

/// A vector of p-adic literals or rationals, bare or under `"v"`.
pub fn vector_from_json(v: &Value, p: u64, prec: u32) -> Result<Vec<PadicNumber>> {
    let arr = match v {
        Value::Object(m) => m.get("v").cloned().ok_or_else(|| anyhow!("target needs \"v\""))?,
        other => other.clone(),
    };
    let xs: Vec<Scalar> = serde_json::from_value(arr).context("target vector schema")?;
    xs.iter().map(|x| x.padic(p, prec)).collect()
}
