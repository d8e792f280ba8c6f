//! Dense univariate polynomials with coefficients in `Q(beta)`.

use crate::error::{Error, Result};
use crate::field::{rat_int, BetaParams, QuadNum, Rational};

/// Hard degree limit; anything above signals runaway growth.
pub const MAX_DEGREE: usize = 64;

/// Coefficients in ascending degree order, with no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial {
    coeffs: Vec<QuadNum>,
    params: BetaParams,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<QuadNum>, params: BetaParams) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.params() == params));
        while coeffs.last().is_some_and(QuadNum::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs, params }
    }

    pub fn zero(params: BetaParams) -> Self {
        Polynomial {
            coeffs: Vec::new(),
            params,
        }
    }

    pub fn constant(c: QuadNum) -> Self {
        let params = c.params();
        Polynomial::new(vec![c], params)
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: QuadNum, c1: QuadNum) -> Self {
        let params = c0.params();
        Polynomial::new(vec![c0, c1], params)
    }

    pub fn from_rationals(coeffs: &[Rational], params: BetaParams) -> Self {
        Polynomial::new(
            coeffs
                .iter()
                .map(|c| QuadNum::from_rational(c.clone(), params))
                .collect(),
            params,
        )
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn coeffs(&self) -> &[QuadNum] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> QuadNum {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| QuadNum::zero(self.params))
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(QuadNum::is_rational)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| match (self.coeffs.get(i), other.coeffs.get(i)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        Polynomial::new(coeffs, self.params)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(&QuadNum::from_int(-1, self.params)))
    }

    pub fn scale(&self, c: &QuadNum) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.params);
        }
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect(), self.params)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.is_zero() || other.is_zero() {
            return Ok(Polynomial::zero(self.params));
        }
        let deg = self.coeffs.len() + other.coeffs.len() - 2;
        if deg > MAX_DEGREE {
            return Err(Error::DegreeCap(deg));
        }
        let mut out = vec![QuadNum::zero(self.params); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Ok(Polynomial::new(out, self.params))
    }

    /// `x -> p(scale*x + shift)`.
    pub fn compose_affine(&self, scale: &QuadNum, shift: &QuadNum) -> Polynomial {
        let mut acc = Polynomial::zero(self.params);
        let lin = Polynomial::linear(shift.clone(), scale.clone());
        for c in self.coeffs.iter().rev() {
            acc = acc
                .mul(&lin)
                .expect("composition with an affine map keeps the degree")
                .add(&Polynomial::constant(c.clone()));
        }
        acc
    }

    pub fn eval(&self, x: &QuadNum) -> QuadNum {
        let mut acc = QuadNum::zero(self.params);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(QuadNum::to_f64).collect()
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.scale(&rat_int(i as i64)))
            .collect();
        Polynomial::new(coeffs, self.params)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(QuadNum::zero(self.params));
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.scale(&Rational::new(1.into(), (i as i64 + 1).into())));
        }
        Polynomial::new(coeffs, self.params)
    }

    /// Exact `int_a^b p`.
    pub fn integrate(&self, a: &QuadNum, b: &QuadNum) -> QuadNum {
        let anti = self.antiderivative();
        &anti.eval(b) - &anti.eval(a)
    }
}

/// Horner evaluation of an `f64` coefficient list.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
