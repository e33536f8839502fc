use crate::error::{Error, Result};
use crate::padic::{check_odd_prime, PadicNumber};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Dilation parameter: a positive real at ∞ and `T_p = p^{n_p}` at each finite place.
#[derive(Clone, Debug, PartialEq)]
pub struct STime {
    pub t_inf: f64,
    /// `(p, n_p)` sorted by `p`.
    pub exps: Vec<(u64, i64)>,
}

impl STime {
    pub fn new(t_inf: f64, mut exps: Vec<(u64, i64)>) -> Result<Self> {
        if !(t_inf > 0.0 && t_inf.is_finite()) {
            return Err(Error::Invalid(format!("T_inf must be positive, got {}", t_inf)));
        }
        for &(p, _) in &exps {
            check_odd_prime(p)?;
        }
        exps.sort();
        Ok(STime { t_inf, exps })
    }

    /// Exponent `n_p` with `T_p = p^{n_p}`; zero for primes not listed.
    pub fn exp(&self, p: u64) -> i64 {
        self.exps.iter().find(|e| e.0 == p).map_or(0, |e| e.1)
    }

    pub fn t_p(&self, p: u64) -> f64 {
        (p as f64).powi(self.exp(p) as i32)
    }

    /// `‖T‖ = T_∞ ∏ T_p`.
    pub fn norm(&self) -> f64 {
        self.exps.iter().fold(self.t_inf, |acc, &(p, e)| acc * (p as f64).powi(e as i32))
    }

    /// Componentwise `self ⪰ other`.
    pub fn dominates(&self, other: &STime) -> bool {
        self.t_inf >= other.t_inf
            && other.exps.iter().all(|&(p, e)| self.exp(p) >= e)
            && self.exps.iter().all(|&(p, e)| e >= other.exp(p))
    }
}

impl fmt::Display for STime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inf={}", self.t_inf)?;
        for &(p, e) in &self.exps {
            write!(f, ",{}={}", p, (p as i128).pow(e.max(0) as u32))?;
        }
        Ok(())
    }
}

/// `I_p = a_p + p^{b_p} Z_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicInterval {
    pub p: u64,
    pub center: PadicNumber,
    pub b: i64,
}

impl PadicInterval {
    pub fn contains(&self, x: &PadicNumber) -> bool {
        let d = x - &self.center;
        match d.valuation() {
            Some(v) => v >= self.b,
            None => d.is_exact_zero() || d.val_lower_bound() >= self.b,
        }
    }
}

/// The target set of form values: an open real interval and p-adic balls.
#[derive(Clone, Debug, PartialEq)]
pub struct SInterval {
    pub a_inf: f64,
    pub b_inf: f64,
    pub finite: Vec<PadicInterval>,
}

impl SInterval {
    pub fn new(a_inf: f64, b_inf: f64, mut finite: Vec<PadicInterval>) -> Result<Self> {
        if !(a_inf.is_finite() && b_inf.is_finite()) {
            return Err(Error::Invalid("real interval endpoints must be finite".into()));
        }
        for f in &finite {
            check_odd_prime(f.p)?;
        }
        finite.sort_by_key(|f| f.p);
        Ok(SInterval { a_inf, b_inf, finite })
    }

    /// `(a, b)` at ∞ and `Z_p` at each listed prime.
    pub fn integral(a_inf: f64, b_inf: f64, primes: &[u64]) -> Result<Self> {
        let finite = primes
            .iter()
            .map(|&p| PadicInterval { p, center: PadicNumber::zero(p), b: 0 })
            .collect();
        Self::new(a_inf, b_inf, finite)
    }

    pub fn at(&self, p: u64) -> Option<&PadicInterval> {
        self.finite.iter().find(|f| f.p == p)
    }

    pub fn is_empty_inf(&self) -> bool {
        self.b_inf <= self.a_inf
    }

    /// `|I| = (b_∞ - a_∞) ∏ p^{-b_p}`.
    pub fn measure(&self) -> f64 {
        let len = (self.b_inf - self.a_inf).max(0.0);
        self.finite.iter().fold(len, |acc, f| acc * (f.p as f64).powi(-(f.b as i32)))
    }
}

/// Radial function at the real place.
#[derive(Clone)]
pub enum RealRegion {
    /// Euclidean ball of the given radius.
    Ball(f64),
    /// `ρ(x/|x|)` with a known upper bound.
    Radial { rho: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, max: f64 },
}

impl RealRegion {
    pub fn rho(&self, dir: &[f64]) -> f64 {
        match self {
            RealRegion::Ball(r) => *r,
            RealRegion::Radial { rho, .. } => rho(dir),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            RealRegion::Ball(r) => *r,
            RealRegion::Radial { max, .. } => *max,
        }
    }
}

impl fmt::Debug for RealRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealRegion::Ball(r) => write!(f, "Ball({})", r),
            RealRegion::Radial { max, .. } => write!(f, "Radial(max = {})", max),
        }
    }
}

/// Radial function at a finite place, valued in `p^Z`.
#[derive(Clone, Debug, PartialEq)]
pub enum FiniteRegion {
    /// Constant `ρ = p^e`.
    Ball(i64),
    /// `ρ = p^{e(x mod p^level)}` on primitive vectors, `default` where not listed.
    Table { level: u32, default: i64, entries: BTreeMap<Vec<u64>, i64> },
}

impl FiniteRegion {
    /// Exponent `e` with `ρ(x) = p^e` for a primitive residue vector.
    pub fn exp_at(&self, x: &[u64]) -> i64 {
        match self {
            FiniteRegion::Ball(e) => *e,
            FiniteRegion::Table { default, entries, .. } => entries.get(x).copied().unwrap_or(*default),
        }
    }

    pub fn level(&self) -> u32 {
        match self {
            FiniteRegion::Ball(_) => 0,
            FiniteRegion::Table { level, .. } => *level,
        }
    }

    /// All exponents taken by `ρ`.
    pub fn exps(&self) -> Vec<i64> {
        let mut v = match self {
            FiniteRegion::Ball(e) => vec![*e],
            FiniteRegion::Table { default, entries, .. } => {
                let mut v: Vec<i64> = entries.values().copied().collect();
                v.push(*default);
                v
            }
        };
        v.sort();
        v.dedup();
        v
    }

    pub fn max_exp(&self) -> i64 {
        *self.exps().last().unwrap()
    }

    /// Checks `ρ(ux) = ρ(x)` for units `u`, and that keys are primitive residues.
    pub fn validate(&self, p: u64, n: usize) -> Result<()> {
        let FiniteRegion::Table { level, entries, .. } = self else {
            return Ok(());
        };
        if *level == 0 {
            return Err(Error::Invalid("table level must be positive".into()));
        }
        let m = (p as u128).pow(*level) as u64;
        for (x, &e) in entries {
            if x.len() != n || x.iter().any(|&c| c >= m) {
                return Err(Error::Invalid(format!("region key {:?} out of range", x)));
            }
            if x.iter().all(|&c| c % p == 0) {
                return Err(Error::Invalid(format!("region key {:?} is not primitive", x)));
            }
            for u in (1..m).filter(|u| u % p != 0) {
                let y: Vec<u64> = x.iter().map(|&c| ((c as u128 * u as u128) % m as u128) as u64).collect();
                if self.exp_at(&y) != e {
                    return Err(Error::Invalid(format!(
                        "region is not invariant under units: {:?} vs {:?}",
                        x, y
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `Ω = ∏_p Ω_p`, each described by its radial function.
#[derive(Clone, Debug)]
pub struct Region {
    pub inf: RealRegion,
    pub finite: Vec<(u64, FiniteRegion)>,
}

impl Region {
    /// Unit balls at every place.
    pub fn unit_balls(primes: &[u64]) -> Self {
        Region { inf: RealRegion::Ball(1.0), finite: primes.iter().map(|&p| (p, FiniteRegion::Ball(0))).collect() }
    }

    pub fn at(&self, p: u64) -> FiniteRegion {
        self.finite.iter().find(|f| f.0 == p).map_or(FiniteRegion::Ball(0), |f| f.1.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_norm_and_order() {
        let t = STime::new(10.0, vec![(5, 1), (3, 2)]).unwrap();
        assert!((t.norm() - 450.0).abs() < 1e-9);
        let s = STime::new(5.0, vec![(3, 1), (5, 1)]).unwrap();
        assert!(t.dominates(&s));
        assert!(!s.dominates(&t));
        assert!(STime::new(1.0, vec![(2, 1)]).is_err());
    }

    #[test]
    fn interval_measure() {
        let i = SInterval::new(
            -0.5,
            0.5,
            vec![PadicInterval { p: 5, center: PadicNumber::from_int(5, 1, 20), b: 2 }],
        )
        .unwrap();
        assert!((i.measure() - 1.0 / 25.0).abs() < 1e-15);
        assert!(i.finite[0].contains(&PadicNumber::from_int(5, 26, 20)));
        assert!(!i.finite[0].contains(&PadicNumber::from_int(5, 6, 20)));
    }

    #[test]
    fn table_region_must_be_unit_invariant() {
        let mut entries = BTreeMap::new();
        entries.insert(vec![1, 0], 1);
        let r = FiniteRegion::Table { level: 1, default: 0, entries: entries.clone() };
        assert!(r.validate(3, 2).is_err());
        entries.insert(vec![2, 0], 1);
        let r = FiniteRegion::Table { level: 1, default: 0, entries };
        r.validate(3, 2).unwrap();
        assert_eq!(r.exps(), vec![0, 1]);
    }
}
