use crate::io::{self, padic_json, rational_json, time_label};
use anyhow::{anyhow, bail, Context, Result};
use num_rational::BigRational;
use sadic_core::counting::{count, count_report, counterexample_row, growth_slopes, hyperbolic_transform, CountReport};
use sadic_core::ortho::lift_isometry;
use sadic_core::qform::{standard_coeffs, to_standard, QuadraticFormS, Region, SInterval, STime};
use sadic_core::slattice::{alpha, alpha_all, project_to_real, AlphaValue};
use sadic_core::volume::{lambda, volume_V, McConfig};
use serde::Deserialize;
use serde_json::{json, Value};
use std::fmt;
use std::path::{Path, PathBuf};

/// An error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub source: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for Failure {}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

pub fn fail(code: i32, e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(Failure { code, source: e.into() })
}

pub fn usage(e: impl Into<anyhow::Error>) -> anyhow::Error {
    fail(EXIT_USAGE, e)
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    e.downcast_ref::<Failure>().map_or(EXIT_COMPUTE, |f| f.code)
}

/// Bytes to write plus what goes into the manifest.
#[derive(Default)]
pub struct Run {
    pub output: Vec<u8>,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub metadata: Value,
}

impl Run {
    fn json(v: &Value) -> Self {
        let mut s = serde_json::to_string_pretty(v).expect("json output");
        s.push('\n');
        Run { output: s.into_bytes(), metadata: Value::Null, ..Default::default() }
    }
}

/// Tracks the files read by a command.
#[derive(Default)]
pub struct Inputs(pub Vec<PathBuf>);

impl Inputs {
    pub fn json(&mut self, path: &Path) -> Result<Value> {
        let text = std::fs::read_to_string(path).map_err(|e| fail(EXIT_IO, anyhow!("reading {}: {}", path.display(), e)))?;
        self.0.push(path.to_path_buf());
        serde_json::from_str(&text).map_err(|e| usage(anyhow!("{}: {}", path.display(), e)))
    }

    /// An inline JSON value, or a path to one relative to `base`.
    fn nested(&mut self, v: &Value, base: &Path) -> Result<Value> {
        match v {
            Value::String(s) => self.json(&base.join(s)),
            other => Ok(other.clone()),
        }
    }

    pub fn form(&mut self, path: &Path) -> Result<QuadraticFormS> {
        let v = self.json(path)?;
        io::form_from_json(&v).map_err(usage)
    }
}

fn region_or_default(inputs: &mut Inputs, path: Option<&Path>, primes: &[u64], n: usize) -> Result<Region> {
    match path {
        Some(p) => io::region_from_json(&inputs.json(p)?, primes, n).map_err(usage),
        None => Ok(Region::unit_balls(primes)),
    }
}

fn parse_time_for(s: &str, primes: &[u64]) -> Result<STime> {
    let t = io::parse_time(s).map_err(usage)?;
    let mut got: Vec<u64> = t.exps.iter().map(|e| e.0).collect();
    got.sort_unstable();
    let mut want = primes.to_vec();
    want.sort_unstable();
    if got != want {
        return Err(usage(anyhow!("T = {:?} must give T_p for exactly the primes {:?}", s, want)));
    }
    Ok(t)
}

fn compute<T>(r: sadic_core::Result<T>) -> Result<T> {
    r.map_err(|e| fail(EXIT_COMPUTE, e))
}

fn qmat_json(m: &[Vec<BigRational>]) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(rational_json).collect())).collect())
}

pub fn classify(form: &Path) -> Result<Run> {
    let mut inputs = Inputs::default();
    let q = inputs.form(form)?;
    let mut places = Vec::new();
    let (pos, neg) = compute(q.real().signature())?;
    places.push(json!({"place": "inf", "signature": [pos, neg], "isotropic": compute(q.real().is_isotropic())?}));
    for f in q.finite() {
        let inv = compute(f.invariants())?;
        let mut entry = json!({
            "place": f.prime(),
            "rank": inv.rank,
            "disc": inv.disc,
            "hasse": inv.hasse,
            "isotropic": compute(f.is_isotropic())?,
        });
        if q.n() == 4 {
            entry["split"] = json!(compute(f.is_split())?);
        }
        places.push(entry);
    }
    let v = json!({
        "n": q.n(),
        "S": q.primes(),
        "irrational": q.irrational,
        "isotropic": compute(q.is_isotropic())?,
        "exceptional": compute(q.is_exceptional())?,
        "places": places,
    });
    let mut run = Run::json(&v);
    run.inputs = inputs.0;
    Ok(run)
}

pub fn standardize(form: &Path, p: u64, prec: u32) -> Result<Run> {
    let mut inputs = Inputs::default();
    let q = inputs.form(form)?;
    let local = io::local_form(&q, p).map_err(usage)?;
    let s = compute(to_standard(&local, prec))?;
    let v = json!({
        "p": s.p,
        "prec": prec,
        "coeffs": s.coeffs,
        "gram": qmat_json(&s.gram()),
        "g": s.g.iter().map(|r| r.iter().map(padic_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "warning": s.warning,
    });
    let mut run = Run::json(&v);
    run.inputs = inputs.0;
    Ok(run)
}

/// The target is read in the coordinates of the standard form; a form that is not
/// already standard is standardized first and its transition matrix reported.
pub fn witt_lift(form: &Path, p: u64, target: &str, prec: u32) -> Result<Run> {
    let mut inputs = Inputs::default();
    let q = inputs.form(form)?;
    let local = io::local_form(&q, p).map_err(usage)?;
    let target_json = if target.trim_start().starts_with(['[', '{']) {
        serde_json::from_str(target).map_err(|e| usage(anyhow!("--target: {}", e)))?
    } else {
        inputs.json(Path::new(target))?
    };
    let v = io::vector_from_json(&target_json, p, prec).map_err(usage)?;
    let (std_form, transition) = match standard_coeffs(&local) {
        Some(_) => (local, None),
        None => {
            let s = compute(to_standard(&local, prec))?;
            (compute(s.form())?, Some(s.g))
        }
    };
    let k = compute(lift_isometry(&std_form, &v, prec))?;
    let report = k.verify();
    if !report.ok() {
        return Err(fail(EXIT_COMPUTE, anyhow!("lift failed verification: {:?}", report)));
    }
    let mut out = json!({
        "p": k.p,
        "prec": k.prec,
        "coeffs": k.coeffs,
        "matrix": k.matrix.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "verified": {"integral": report.integral, "preserves_form": report.preserves_form, "det_one": report.det_one},
    });
    if let Some(g) = transition {
        out["g"] = json!(g.iter().map(|r| r.iter().map(padic_json).collect::<Vec<_>>()).collect::<Vec<_>>());
    }
    let mut run = Run::json(&out);
    run.inputs = inputs.0;
    Ok(run)
}

fn alpha_json(a: &AlphaValue) -> Value {
    json!({
        "i": a.i,
        "value": a.value,
        "min_covolume_sq": rational_json(&a.min_covolume_sq),
        "witness": qmat_json(&a.witness),
    })
}

pub fn alpha_cmd(lattice: &Path, i: Option<usize>) -> Result<Run> {
    let mut inputs = Inputs::default();
    let v = inputs.json(lattice)?;
    let delta = io::lattice_from_json(&v).map_err(usage)?;
    let values = match i {
        Some(i) => vec![compute(alpha(&delta, i))?],
        None => compute(alpha_all(&delta))?,
    };
    let mut run = Run::json(&Value::Array(values.iter().map(alpha_json).collect()));
    run.inputs = inputs.0;
    Ok(run)
}

pub fn project(lattice: &Path) -> Result<Run> {
    let mut inputs = Inputs::default();
    let v = inputs.json(lattice)?;
    let delta = io::lattice_from_json(&v).map_err(usage)?;
    let basis = compute(project_to_real(&delta))?;
    let mut run = Run::json(&json!({"basis": qmat_json(&basis)}));
    run.inputs = inputs.0;
    Ok(run)
}

fn sample_count(x: f64) -> Result<usize> {
    if !(x >= 1.0 && x.is_finite() && x.fract() == 0.0) {
        return Err(usage(anyhow!("sample count must be a positive integer, got {}", x)));
    }
    Ok(x as usize)
}

fn mc_config(samples: f64, batches: Option<usize>, seed: u64) -> Result<McConfig> {
    let mut cfg = McConfig::new(sample_count(samples)?, seed);
    if let Some(b) = batches {
        if b < 2 {
            return Err(usage(anyhow!("at least two batches are needed for a standard error")));
        }
        cfg.batches = b;
    }
    Ok(cfg)
}

pub fn lambda_cmd(form: &Path, region: Option<&Path>, samples: f64, batches: Option<usize>, seed: u64) -> Result<Run> {
    let mut inputs = Inputs::default();
    let q = inputs.form(form)?;
    let region = region_or_default(&mut inputs, region, &q.primes(), q.n())?;
    let cfg = mc_config(samples, batches, seed)?;
    let lam = compute(lambda(&q, &region, &cfg))?;
    let mut run = Run::json(&serde_json::to_value(lam.summary())?);
    run.inputs = inputs.0;
    run.seed = Some(seed);
    Ok(run)
}

pub fn count_cmd(form: &Path, interval: &Path, region: Option<&Path>, t: &str) -> Result<Run> {
    let mut inputs = Inputs::default();
    let q = inputs.form(form)?;
    let primes = q.primes();
    let interval = io::interval_from_json(&inputs.json(interval)?, &primes).map_err(usage)?;
    let region = region_or_default(&mut inputs, region, &primes, q.n())?;
    let t = parse_time_for(t, &primes)?;
    let c = compute(count(&q, &interval, &region, &t))?;
    let v = json!({
        "T": time_label(&t),
        "count": c.count,
        "undecided": c.undecided,
        "prefixes": c.prefixes,
        "denominator": c.plan.denominator,
        "box_bound": c.plan.box_bound,
        "order": c.plan.order,
        "pruning": c.plan.pruning,
        "estimated_prefixes": c.plan.estimated_prefixes,
    });
    let mut run = Run::json(&v);
    run.inputs = inputs.0;
    Ok(run)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepJson {
    form: Value,
    interval: Value,
    #[serde(default)]
    region: Option<Value>,
    #[serde(rename = "T", default)]
    t: Vec<String>,
    samples: f64,
    #[serde(default)]
    batches: Option<usize>,
}

struct Sweep {
    q: QuadraticFormS,
    primes: Vec<u64>,
    interval: SInterval,
    region: Region,
    times: Vec<STime>,
    cfg: McConfig,
}

fn load_sweep(inputs: &mut Inputs, path: &Path, seed: u64) -> Result<Sweep> {
    let raw = inputs.json(path)?;
    let s: SweepJson = serde_json::from_value(raw).map_err(|e| usage(anyhow!("{}: {}", path.display(), e)))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let q = io::form_from_json(&inputs.nested(&s.form, base)?).map_err(usage)?;
    let primes = q.primes();
    let interval = io::interval_from_json(&inputs.nested(&s.interval, base)?, &primes).map_err(usage)?;
    let region = match &s.region {
        Some(r) => io::region_from_json(&inputs.nested(r, base)?, &primes, q.n()).map_err(usage)?,
        None => Region::unit_balls(&primes),
    };
    let times = s.t.iter().map(|t| parse_time_for(t, &primes)).collect::<Result<Vec<_>>>()?;
    let cfg = mc_config(s.samples, s.batches, seed)?;
    Ok(Sweep { q, primes, interval, region, times, cfg })
}

fn time_fields(t: &STime, primes: &[u64]) -> Vec<String> {
    let mut r = vec![t.t_inf.to_string()];
    r.extend(primes.iter().map(|&p| format!("{}", (p as f64).powi(t.exp(p) as i32))));
    r
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Necessary).from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow!("{}", e))?)
}

fn error_row(t: &STime, primes: &[u64], width: usize, e: &sadic_core::Error) -> Vec<String> {
    let mut r = time_fields(t, primes);
    r.resize(width - 1, String::new());
    r.push(e.to_string());
    r
}

pub fn asymptotics(sweep: &Path, seed: u64, timing: bool) -> Result<Run> {
    let mut inputs = Inputs::default();
    let s = load_sweep(&mut inputs, sweep, seed)?;
    let mut header = CountReport::csv_header(&s.primes);
    header.push("error".into());
    let mut rows = Vec::new();
    let mut metadata = json!({"S": s.primes, "samples": s.cfg.samples, "batches": s.cfg.batches});
    if !s.times.is_empty() {
        let lam = compute(lambda(&s.q, &s.region, &s.cfg))?;
        metadata["lambda"] = serde_json::to_value(lam.summary())?;
        for t in &s.times {
            rows.push(match count_report(&s.q, &s.interval, &s.region, t, &lam, &s.cfg) {
                Ok(r) => {
                    let mut rec = r.csv_record(&s.primes, timing);
                    rec.push(String::new());
                    rec
                }
                Err(e) => error_row(t, &s.primes, header.len(), &e),
            });
        }
    }
    Ok(Run { output: csv_bytes(header, rows)?, inputs: inputs.0, seed: Some(seed), metadata })
}

pub fn volume_sweep(sweep: &Path, seed: u64) -> Result<Run> {
    let mut inputs = Inputs::default();
    let s = load_sweep(&mut inputs, sweep, seed)?;
    let mut header = time_fields_header(&s.primes);
    header.extend(["V", "V_stderr", "lambda_pred", "ratio", "error"].map(String::from));
    let mut rows = Vec::new();
    let mut metadata = json!({"S": s.primes, "samples": s.cfg.samples, "batches": s.cfg.batches});
    if !s.times.is_empty() {
        let lam = compute(lambda(&s.q, &s.region, &s.cfg))?;
        metadata["lambda"] = serde_json::to_value(lam.summary())?;
        for t in &s.times {
            rows.push(match volume_V(&s.q, &s.interval, &s.region, t, &s.cfg) {
                Ok(v) => {
                    let pred = lam.prediction(&s.interval, t, s.q.n());
                    let mut rec = time_fields(t, &s.primes);
                    rec.extend([v.value.to_string(), v.stderr.to_string(), pred.to_string(), (v.value / pred).to_string()]);
                    rec.push(String::new());
                    rec
                }
                Err(e) => error_row(t, &s.primes, header.len(), &e),
            });
        }
    }
    Ok(Run { output: csv_bytes(header, rows)?, inputs: inputs.0, seed: Some(seed), metadata })
}

fn time_fields_header(primes: &[u64]) -> Vec<String> {
    let mut h = vec!["T_inf".to_string()];
    h.extend(primes.iter().map(|p| format!("T_{}", p)));
    h
}

fn parse_unit(s: &str) -> Result<(u64, i64)> {
    let (p, u) = s.split_once('=').ok_or_else(|| usage(anyhow!("--unit expects p=u, got {:?}", s)))?;
    let p = p.trim().parse().map_err(|e| usage(anyhow!("--unit {:?}: {}", s, e)))?;
    let u = u.trim().parse().map_err(|e| usage(anyhow!("--unit {:?}: {}", s, e)))?;
    Ok((p, u))
}

pub fn counterexample(alpha_s: &str, epsilon: f64, ts: &[String], units: &[String]) -> Result<Run> {
    let alpha = io::parse_rational(alpha_s).map_err(usage)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        bail!(usage(anyhow!("--epsilon must lie in (0, 1)")));
    }
    let units = units.iter().map(|u| parse_unit(u)).collect::<Result<Vec<_>>>()?;
    let times = ts.iter().map(|t| io::parse_time(t).map_err(usage)).collect::<Result<Vec<_>>>()?;
    let mut primes: Vec<u64> = times.first().map(|t| t.exps.iter().map(|e| e.0).collect()).unwrap_or_default();
    primes.sort_unstable();
    let times = ts.iter().map(|t| parse_time_for(t, &primes)).collect::<Result<Vec<_>>>()?;
    for &(p, _) in &units {
        if !primes.contains(&p) {
            return Err(usage(anyhow!("--unit given at p = {} outside S", p)));
        }
    }
    let mut header = time_fields_header(&primes);
    header.extend(["norm", "target", "beta_inf"].map(String::from));
    header.extend(primes.iter().map(|p| format!("beta_{}", p)));
    header.extend(
        ["constructed", "failed_conditions", "floor", "missed", "N", "undecided", "floor_exceeds", "N_exceeds", "error"]
            .map(String::from),
    );
    let mut ok_rows = Vec::new();
    let mut rows = Vec::new();
    for t in &times {
        match counterexample_row(&alpha, epsilon, t, &units) {
            Ok(r) => {
                let mut rec = time_fields(t, &primes);
                rec.extend([r.norm.to_string(), r.target.to_string(), r.beta_inf.to_string()]);
                for &p in &primes {
                    rec.push(r.beta_p.iter().find(|b| b.0 == p).map(|b| b.1.clone()).unwrap_or_default());
                }
                rec.extend([
                    r.constructed.to_string(),
                    r.failed_conditions.to_string(),
                    r.floor.to_string(),
                    r.missed.to_string(),
                    r.n.to_string(),
                    r.undecided.to_string(),
                    r.floor_exceeds.to_string(),
                    r.n_exceeds.to_string(),
                    String::new(),
                ]);
                rows.push(rec);
                ok_rows.push(r);
            }
            Err(e) => rows.push(error_row(t, &primes, header.len(), &e)),
        }
    }
    let (slope_n, slope_floor) = growth_slopes(&ok_rows, epsilon);
    let transform: Vec<Vec<String>> =
        hyperbolic_transform(&alpha).iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    let metadata = json!({
        "alpha": alpha.to_string(),
        "epsilon": epsilon,
        "S": primes,
        "units": units,
        "transform": transform,
        "slope_n": slope_n,
        "slope_floor": slope_floor,
    });
    Ok(Run { output: csv_bytes(header, rows)?, inputs: Vec::new(), seed: None, metadata })
}

pub fn read_manifest(path: &Path) -> Result<crate::manifest::Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(EXIT_IO, anyhow!("reading {}: {}", path.display(), e)))?;
    serde_json::from_str(&text).with_context(|| format!("manifest {}", path.display())).map_err(usage)
}
