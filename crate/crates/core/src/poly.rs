//! Laurent polynomials in the similarity variable η.
//!
//! Every stage, auxiliary function and assembled solution in the solver is a
//! finite sum `Σ c_k η^k` with integer exponents. Auxiliary functions may carry
//! a single `1/η` pole; stage solutions are always plain polynomials.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PolyError;

/// Lowest exponent accepted from external data and auxiliary shapes.
pub const MIN_EXPONENT: i32 = -1;

/// Finite-support Laurent polynomial with `f64` coefficients.
///
/// The term map never stores an exact zero; the zero polynomial has no terms.
#[derive(Clone, Default, PartialEq)]
pub struct LaurentPoly {
    terms: BTreeMap<i32, f64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(exponent: i32, coefficient: f64) -> Self {
        let mut p = Self::zero();
        p.accumulate(exponent, coefficient);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    ///
    /// Rejects exponents below [`MIN_EXPONENT`] and non-finite coefficients.
    pub fn from_terms<I>(terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (i32, f64)>,
    {
        let mut p = Self::zero();
        for (e, c) in terms {
            if e < MIN_EXPONENT {
                return Err(PolyError::PoleTooDeep { exponent: e });
            }
            if !c.is_finite() {
                return Err(PolyError::NonFiniteCoefficient { exponent: e });
            }
            p.accumulate(e, c);
        }
        Ok(p)
    }

    /// Dense coefficients `c_0 + c_1 η + ...`.
    pub fn from_coefficients(coefficients: &[f64]) -> Self {
        let mut p = Self::zero();
        for (k, &c) in coefficients.iter().enumerate() {
            p.accumulate(k as i32, c);
        }
        p
    }

    fn accumulate(&mut self, exponent: i32, coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        let slot = self.terms.entry(exponent).or_insert(0.0);
        *slot += coefficient;
        if *slot == 0.0 {
            self.terms.remove(&exponent);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponent: i32) -> f64 {
        self.terms.get(&exponent).copied().unwrap_or(0.0)
    }

    /// Terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn degree(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    /// True when no negative exponent is present.
    pub fn is_polynomial(&self) -> bool {
        self.min_exponent().is_none_or(|e| e >= 0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut p = Self::zero();
        for (e, c) in self.terms() {
            p.accumulate(e, c * factor);
        }
        p
    }

    pub fn differentiate(&self) -> Self {
        let mut p = Self::zero();
        for (e, c) in self.terms() {
            if e != 0 {
                p.accumulate(e - 1, c * f64::from(e));
            }
        }
        p
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |p, _| p.differentiate())
    }

    /// Term-wise antiderivative with zero constant of integration.
    pub fn antiderivative(&self) -> Result<Self, PolyError> {
        if self.terms.contains_key(&-1) {
            return Err(PolyError::NonPolynomialAntiderivative);
        }
        let mut p = Self::zero();
        for (e, c) in self.terms() {
            p.accumulate(e + 1, c / f64::from(e + 1));
        }
        Ok(p)
    }

    /// Repeated antiderivative, each pass with zero constant.
    pub fn nth_antiderivative(&self, order: usize) -> Result<Self, PolyError> {
        (0..order).try_fold(self.clone(), |p, _| p.antiderivative())
    }

    /// Evaluates at `eta`; the non-negative and negative exponent parts are
    /// each summed with Horner's scheme (in η and 1/η respectively).
    pub fn evaluate(&self, eta: f64) -> Result<f64, PolyError> {
        let min = match self.min_exponent() {
            None => return Ok(0.0),
            Some(m) => m,
        };
        if min < 0 && eta == 0.0 {
            return Err(PolyError::EvalAtPole);
        }
        let degree = self.degree().unwrap_or(0);

        let mut upper = 0.0;
        if degree >= 0 {
            for e in (0..=degree).rev() {
                upper = upper * eta + self.coefficient(e);
            }
        }
        let mut lower = 0.0;
        if min < 0 {
            let inv = 1.0 / eta;
            for e in min..0 {
                lower = (lower + self.coefficient(e)) * inv;
            }
        }
        Ok(upper + lower)
    }

    /// Evaluation for callers that have already checked there is no pole
    /// at `eta` (e.g. pure polynomials).
    pub fn eval(&self, eta: f64) -> f64 {
        self.evaluate(eta)
            .expect("evaluated a Laurent polynomial at its pole")
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly({self})")
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let sign = if c < 0.0 { '-' } else { '+' };
            if i == 0 {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match e {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}·η", c.abs())?,
                _ => write!(f, "{}·η^{e}", c.abs())?,
            }
        }
        Ok(())
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut p = self.clone();
        for (e, c) in rhs.terms() {
            p.accumulate(e, c);
        }
        p
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut p = self.clone();
        for (e, c) in rhs.terms() {
            p.accumulate(e, -c);
        }
        p
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut sums: BTreeMap<i32, f64> = BTreeMap::new();
        for (a, x) in self.terms() {
            for (b, y) in rhs.terms() {
                *sums.entry(a + b).or_insert(0.0) += x * y;
            }
        }
        let mut p = LaurentPoly::zero();
        for (e, c) in sums {
            p.accumulate(e, c);
        }
        p
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$m(rhs)
            }
        }
        impl $tr<LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                self.$m(&rhs)
            }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct TermList {
    terms: Vec<(i32, f64)>,
}

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TermList {
            terms: self.terms().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = TermList::deserialize(deserializer)?;
        LaurentPoly::from_terms(list.terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[(i32, f64)]) -> LaurentPoly {
        LaurentPoly::from_terms(coeffs.iter().copied()).unwrap()
    }

    #[test]
    fn additive_inverse_cancels_to_empty_support() {
        let a = p(&[(0, 1.0), (2, -1.0)]);
        let b = p(&[(2, 1.0), (0, -1.0)]);
        let sum = &a + &b;
        assert!(sum.is_zero());
        assert_eq!(sum.len(), 0);
        assert_eq!(&a + &LaurentPoly::zero(), a);
    }

    #[test]
    fn sum_of_stage_and_seed() {
        let stage = p(&[(5, 2.0), (4, -10.0), (2, 8.0)]);
        let seed = p(&[(0, 1.0), (2, -1.0)]);
        let sum = &stage + &seed;
        assert_eq!(sum, p(&[(5, 2.0), (4, -10.0), (2, 7.0), (0, 1.0)]));
        for eta in [0.05, 0.23, 0.5, 0.71, 0.99] {
            let direct = stage.eval(eta) + seed.eval(eta);
            assert!((sum.eval(eta) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn products() {
        let inv = LaurentPoly::monomial(-1, 1.0);
        assert_eq!(&inv * &LaurentPoly::monomial(2, 1.0), LaurentPoly::monomial(1, 1.0));

        let f0 = p(&[(0, 1.0), (2, -1.0)]);
        assert_eq!(&f0 * &f0, p(&[(0, 1.0), (2, -2.0), (4, 1.0)]));

        let prod = &LaurentPoly::monomial(1, -2.0) * &LaurentPoly::monomial(5, 2.0);
        assert_eq!(prod, LaurentPoly::monomial(6, -4.0));
        for eta in [0.3, 0.7] {
            assert!((prod.eval(eta) - (-2.0 * eta) * (2.0 * eta.powi(5))).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives() {
        let f0 = p(&[(0, 1.0), (2, -1.0)]);
        assert_eq!(f0.differentiate(), LaurentPoly::monomial(1, -2.0));
        assert!(LaurentPoly::constant(3.5).differentiate().is_zero());

        // first velocity stage with A = B = C1 = 1
        let f1 = p(&[(5, 2.0), (4, -10.0), (2, 8.0)]);
        assert_eq!(f1.differentiate(), p(&[(4, 10.0), (3, -40.0), (1, 16.0)]));
    }

    #[test]
    fn triple_antiderivative_of_first_stage_forcing() {
        // 60·C1·(2Aη² − 2(A+B)η) with A = B = C1 = 1
        let forcing = p(&[(2, 120.0), (1, -240.0)]);
        let u = forcing.nth_antiderivative(3).unwrap();
        assert_eq!(u, p(&[(5, 2.0), (4, -10.0)]));
        assert!(LaurentPoly::zero().antiderivative().unwrap().is_zero());
        assert_eq!(
            LaurentPoly::monomial(-1, 1.0).antiderivative(),
            Err(PolyError::NonPolynomialAntiderivative)
        );
    }

    #[test]
    fn evaluation_at_walls_and_pole() {
        let f0 = p(&[(0, 1.0), (2, -1.0)]);
        assert_eq!(f0.evaluate(0.0).unwrap(), 1.0);
        assert_eq!(f0.evaluate(1.0).unwrap(), 0.0);
        let pole = p(&[(-1, 2.0), (1, 1.0)]);
        assert_eq!(pole.evaluate(0.0), Err(PolyError::EvalAtPole));
        assert!((pole.evaluate(0.5).unwrap() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_deep_poles_and_non_finite() {
        assert!(matches!(
            LaurentPoly::from_terms([(-2, 1.0)]),
            Err(PolyError::PoleTooDeep { exponent: -2 })
        ));
        assert!(LaurentPoly::from_terms([(1, f64::NAN)]).is_err());
    }

    #[test]
    fn json_shape() {
        let f = p(&[(2, -1.0), (0, 1.0)]);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"terms":[[0,1.0],[2,-1.0]]}"#);
        let back: LaurentPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<LaurentPoly>(r#"{"terms":[[-3,1.0]]}"#).is_err());
    }
}
