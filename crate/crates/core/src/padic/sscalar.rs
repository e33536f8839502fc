use super::{rational_to_f64, PadicNumber};
use num_rational::BigRational;
use num_traits::Zero;

/// An element of `Q_S`: one real component and one p-adic component per finite place.
#[derive(Clone, Debug, PartialEq)]
pub struct SScalar {
    pub real: f64,
    pub padic: Vec<PadicNumber>,
    /// Set when every component is the image of this rational.
    pub exact: Option<BigRational>,
}

impl SScalar {
    /// Diagonal embedding of a rational number.
    pub fn from_rational(x: &BigRational, primes: &[u64], prec: u32) -> Self {
        SScalar {
            real: rational_to_f64(x),
            padic: primes.iter().map(|&p| PadicNumber::from_rational(p, x, prec)).collect(),
            exact: Some(x.clone()),
        }
    }

    pub fn primes(&self) -> Vec<u64> {
        self.padic.iter().map(|x| x.p()).collect()
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(x) => x.is_zero(),
            None => self.real == 0.0 && self.padic.iter().all(|x| x.is_zero()),
        }
    }

    /// Product of absolute values over all places.
    pub fn norm(&self) -> f64 {
        self.real.abs() * self.padic.iter().map(|x| x.norm()).product::<f64>()
    }
}

/// A vector in `Q_S^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SVector {
    pub entries: Vec<SScalar>,
}

impl SVector {
    pub fn from_rationals(xs: &[BigRational], primes: &[u64], prec: u32) -> Self {
        SVector { entries: xs.iter().map(|x| SScalar::from_rational(x, primes, prec)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Rational coordinates if the vector is exact.
    pub fn exact(&self) -> Option<Vec<BigRational>> {
        self.entries.iter().map(|e| e.exact.clone()).collect()
    }

    /// Euclidean norm of the real component.
    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().map(|e| e.real * e.real).sum::<f64>().sqrt()
    }

    /// Max norm of the component at the `k`-th finite place.
    pub fn norm_p(&self, k: usize) -> f64 {
        self.entries.iter().map(|e| e.padic[k].norm()).fold(0.0, f64::max)
    }

    /// `‖v‖ = ∏_p ‖v_p‖_p`.
    pub fn norm(&self) -> f64 {
        let places = self.entries.first().map_or(0, |e| e.padic.len());
        (0..places).map(|k| self.norm_p(k)).product::<f64>() * self.norm_inf()
    }

    /// `p^{-v}` scaling that makes the `k`-th p-adic component primitive, i.e. `‖x‖_p^∘`.
    pub fn primitive_scale_valuation(&self, k: usize) -> Option<i64> {
        self.entries.iter().filter_map(|e| e.padic[k].valuation()).min()
    }
}
