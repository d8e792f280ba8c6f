//! Smooth test functions with analytic derivatives, and the built-in catalog.

use std::fmt;
use std::str::FromStr;

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::error::{Error, Result};
use crate::field::{rat_int, BetaParams};
use crate::piecewise::PiecewisePoly;
use crate::poly::{horner, Polynomial};

/// A real function on `[0, 1]` with derivatives of every order.
pub trait Smooth: Send + Sync {
    fn derivative(&self, order: usize, x: f64) -> f64;

    fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        integrate(&|x| self.value(x), a, b, 1e-13)
    }

    /// Sampled `sup |F^(order)|` over `[a, b]`.
    fn derivative_sup(&self, order: usize, a: f64, b: f64) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|i| a + (b - a) * i as f64 / n as f64)
            .map(|x| self.derivative(order, x).abs())
            .fold(0.0, f64::max)
    }
}

/// Multiprecision evaluation for functions whose iterates must be resolved
/// far below `f64` round-off.
pub trait SmoothMp: Smooth {
    fn derivative_mp(&self, order: usize, x: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat;

    fn integral_mp(&self, a: &BigFloat, b: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat;

    fn value_mp(&self, x: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        self.derivative_mp(0, x, prec, cc)
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

/// `scale * exp(x)`.
#[derive(Clone, Copy, Debug)]
pub struct Exp {
    pub scale: f64,
}

impl Smooth for Exp {
    fn derivative(&self, _order: usize, x: f64) -> f64 {
        self.scale * x.exp()
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.scale * (b.exp() - a.exp())
    }

    fn derivative_sup(&self, _order: usize, a: f64, b: f64) -> f64 {
        (self.scale * a.exp()).abs().max((self.scale * b.exp()).abs())
    }
}

/// `scale * sin(x)`.
#[derive(Clone, Copy, Debug)]
pub struct Sin {
    pub scale: f64,
}

impl Smooth for Sin {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.scale
            * match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.scale * (a.cos() - b.cos())
    }
}

impl SmoothMp for Exp {
    fn derivative_mp(&self, _order: usize, x: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        BigFloat::from_f64(self.scale, prec).mul(&x.exp(prec, RM, cc), prec, RM)
    }

    fn integral_mp(&self, a: &BigFloat, b: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        let d = b.exp(prec, RM, cc).sub(&a.exp(prec, RM, cc), prec, RM);
        BigFloat::from_f64(self.scale, prec).mul(&d, prec, RM)
    }
}

impl SmoothMp for Sin {
    fn derivative_mp(&self, order: usize, x: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        let v = match order % 4 {
            0 => x.sin(prec, RM, cc),
            1 => x.cos(prec, RM, cc),
            2 => x.sin(prec, RM, cc).neg(),
            _ => x.cos(prec, RM, cc).neg(),
        };
        BigFloat::from_f64(self.scale, prec).mul(&v, prec, RM)
    }

    fn integral_mp(&self, a: &BigFloat, b: &BigFloat, prec: usize, cc: &mut Consts) -> BigFloat {
        let d = a.cos(prec, RM, cc).sub(&b.cos(prec, RM, cc), prec, RM);
        BigFloat::from_f64(self.scale, prec).mul(&d, prec, RM)
    }
}

/// Polynomial with `f64` coefficients, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFn {
    coeffs: Vec<f64>,
}

impl PolyFn {
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolyFn { coeffs }
    }

    pub fn from_polynomial(p: &Polynomial) -> Self {
        PolyFn::new(p.coeffs_f64())
    }

    fn derived(&self, order: usize) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..order {
            if c.is_empty() {
                break;
            }
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, v)| i as f64 * v)
                .collect();
        }
        c
    }
}

impl Smooth for PolyFn {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        horner(&self.derived(order), x)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let anti: Vec<f64> = std::iter::once(0.0)
            .chain(
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c / (i as f64 + 1.0)),
            )
            .collect();
        horner(&anti, b) - horner(&anti, a)
    }
}

fn horner_mp(coeffs: &[f64], x: &BigFloat, prec: usize) -> BigFloat {
    coeffs.iter().rev().fold(BigFloat::from_f64(0.0, prec), |acc, c| {
        acc.mul(x, prec, RM).add(&BigFloat::from_f64(*c, prec), prec, RM)
    })
}

impl SmoothMp for PolyFn {
    fn derivative_mp(&self, order: usize, x: &BigFloat, prec: usize, _cc: &mut Consts) -> BigFloat {
        horner_mp(&self.derived(order), x, prec)
    }

    fn integral_mp(&self, a: &BigFloat, b: &BigFloat, prec: usize, _cc: &mut Consts) -> BigFloat {
        let anti: Vec<f64> = std::iter::once(0.0)
            .chain(self.coeffs.iter().enumerate().map(|(i, c)| c / (i as f64 + 1.0)))
            .collect();
        horner_mp(&anti, b, prec).sub(&horner_mp(&anti, a, prec), prec, RM)
    }
}

/// Wraps a closure `(order, x) -> F^(order)(x)`.
pub struct FromFn<D>(pub D);

impl<D> Smooth for FromFn<D>
where
    D: Fn(usize, f64) -> f64 + Send + Sync,
{
    fn derivative(&self, order: usize, x: f64) -> f64 {
        (self.0)(order, x)
    }
}

/// Double-exponential quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// Built-in test functions shared by the CLI and the acceptance suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// The indicator of `[0, 1]`.
    Psi1,
    /// `4(x - 1/2)`.
    Psi3,
    /// `2x`.
    Linear,
    /// `3x^2`.
    Quadratic,
    /// `exp(x)/(e - 1)`.
    ExpNormalized,
    /// `sin(x)/(1 - cos 1)`.
    SinNormalized,
    /// `sin(x)`.
    Sin,
}

impl Builtin {
    pub const ALL: [Builtin; 7] = [
        Builtin::Psi1,
        Builtin::Psi3,
        Builtin::Linear,
        Builtin::Quadratic,
        Builtin::ExpNormalized,
        Builtin::SinNormalized,
        Builtin::Sin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Psi1 => "psi1",
            Builtin::Psi3 => "psi3",
            Builtin::Linear => "linear",
            Builtin::Quadratic => "quadratic",
            Builtin::ExpNormalized => "exp-normalized",
            Builtin::SinNormalized => "sin-normalized",
            Builtin::Sin => "sin",
        }
    }

    pub fn smooth(&self) -> Box<dyn SmoothMp> {
        match self {
            Builtin::Psi1 => Box::new(PolyFn::new(vec![1.0])),
            Builtin::Psi3 => Box::new(PolyFn::new(vec![-2.0, 4.0])),
            Builtin::Linear => Box::new(PolyFn::new(vec![0.0, 2.0])),
            Builtin::Quadratic => Box::new(PolyFn::new(vec![0.0, 0.0, 3.0])),
            Builtin::ExpNormalized => Box::new(Exp {
                scale: 1.0 / (std::f64::consts::E - 1.0),
            }),
            Builtin::SinNormalized => Box::new(Sin {
                scale: 1.0 / (1.0 - 1f64.cos()),
            }),
            Builtin::Sin => Box::new(Sin { scale: 1.0 }),
        }
    }

    /// Exact piecewise form, for the polynomial members of the catalog.
    pub fn exact(&self, params: BetaParams) -> Option<PiecewisePoly> {
        let coeffs: &[i64] = match self {
            Builtin::Psi1 => &[1],
            Builtin::Psi3 => &[-2, 4],
            Builtin::Linear => &[0, 2],
            Builtin::Quadratic => &[0, 0, 3],
            _ => return None,
        };
        let c: Vec<_> = coeffs.iter().map(|&v| rat_int(v)).collect();
        Some(PiecewisePoly::from_poly(Polynomial::from_rationals(&c, params)))
    }

    pub fn exact_or_err(&self, params: BetaParams) -> Result<PiecewisePoly> {
        self.exact(params).ok_or_else(|| {
            Error::InvalidArgument(format!("{} has no exact piecewise form", self.name()))
        })
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown function {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_forms() {
        let v = integrate(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn normalized_builtins_integrate_to_one() {
        for b in [
            Builtin::Psi1,
            Builtin::Linear,
            Builtin::Quadratic,
            Builtin::ExpNormalized,
            Builtin::SinNormalized,
        ] {
            let f = b.smooth();
            assert!((f.integral(0.0, 1.0) - 1.0).abs() < 1e-14, "{b}");
        }
    }

    #[test]
    fn derivatives() {
        let s = Sin { scale: 1.0 };
        assert_eq!(s.derivative(2, 0.3), -(0.3f64).sin());
        let p = PolyFn::new(vec![0.0, 0.0, 3.0]);
        assert_eq!(p.derivative(1, 0.5), 3.0);
        assert_eq!(p.derivative(3, 0.5), 0.0);
    }

    #[test]
    fn catalog_names_roundtrip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!("cosh".parse::<Builtin>().is_err());
    }
}
