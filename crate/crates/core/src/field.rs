//! Exact arithmetic in the real quadratic field `Q(beta)`, where `beta` is the
//! positive root of `beta^2 = a0*beta + a1`.
//!
//! Every element is stored as `p + q*beta` with `p, q` reduced rationals. Because
//! `beta` is irrational for every admissible `(a0, a1)` the pair `(p, q)` is unique,
//! so structural equality is numerical equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision reduced fraction.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The integers `(a0, a1)` defining `beta^2 = a0*beta + a1`, with `a0 >= a1 >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BetaParams {
    a0: u32,
    a1: u32,
}

impl BetaParams {
    pub fn new(a0: i64, a1: i64) -> Result<Self> {
        if a1 < 1 || a0 < a1 || a0 > u32::MAX as i64 {
            return Err(Error::InvalidParams { a0, a1 });
        }
        Ok(BetaParams {
            a0: a0 as u32,
            a1: a1 as u32,
        })
    }

    /// The golden-ratio case `a0 = a1 = 1`.
    pub fn golden() -> Self {
        BetaParams { a0: 1, a1: 1 }
    }

    pub fn a0(&self) -> u32 {
        self.a0
    }

    pub fn a1(&self) -> u32 {
        self.a1
    }

    /// Discriminant `a0^2 + 4 a1`; never a perfect square for admissible parameters.
    pub fn discriminant(&self) -> BigInt {
        let a0 = BigInt::from(self.a0);
        &a0 * &a0 + BigInt::from(4u32) * BigInt::from(self.a1)
    }

    pub fn beta_f64(&self) -> f64 {
        let a0 = self.a0 as f64;
        (a0 + (a0 * a0 + 4.0 * self.a1 as f64).sqrt()) / 2.0
    }

    /// Every admissible pair with `a0 <= max_a0`.
    pub fn all_up_to(max_a0: u32) -> Vec<BetaParams> {
        let mut out = Vec::new();
        for a0 in 1..=max_a0 {
            for a1 in 1..=a0 {
                out.push(BetaParams { a0, a1 });
            }
        }
        out
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a0={}, a1={})", self.a0, self.a1)
    }
}

/// An element `p + q*beta` of `Q(beta)`.
///
/// Operator impls panic on mixed parameters or division by zero; the `checked_*`
/// methods report those as errors instead.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadNum {
    p: Rational,
    q: Rational,
    params: BetaParams,
}

impl QuadNum {
    pub fn new(p: Rational, q: Rational, params: BetaParams) -> Self {
        QuadNum { p, q, params }
    }

    pub fn from_rational(p: Rational, params: BetaParams) -> Self {
        QuadNum::new(p, Rational::zero(), params)
    }

    pub fn from_int(n: i64, params: BetaParams) -> Self {
        QuadNum::from_rational(rat_int(n), params)
    }

    pub fn from_ratio(n: i64, d: i64, params: BetaParams) -> Self {
        QuadNum::from_rational(rat(n, d), params)
    }

    pub fn zero(params: BetaParams) -> Self {
        QuadNum::from_rational(Rational::zero(), params)
    }

    pub fn one(params: BetaParams) -> Self {
        QuadNum::from_rational(Rational::one(), params)
    }

    pub fn beta(params: BetaParams) -> Self {
        QuadNum::new(Rational::zero(), Rational::one(), params)
    }

    /// `1/beta = (beta - a0)/a1`.
    pub fn beta_inv(params: BetaParams) -> Self {
        let a1 = rat_int(params.a1 as i64);
        QuadNum::new(
            -rat_int(params.a0 as i64) / &a1,
            Rational::one() / a1,
            params,
        )
    }

    /// `beta^n` for any integer `n`.
    pub fn beta_pow(params: BetaParams, n: i64) -> Self {
        if n >= 0 {
            QuadNum::beta(params).pow(n as u64)
        } else {
            QuadNum::beta_inv(params).pow((-n) as u64)
        }
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.p)
    }

    fn check(&self, other: &QuadNum) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamsMismatch(self.params, other.params));
        }
        Ok(())
    }

    pub fn checked_add(&self, rhs: &QuadNum) -> Result<QuadNum> {
        self.check(rhs)?;
        Ok(QuadNum::new(&self.p + &rhs.p, &self.q + &rhs.q, self.params))
    }

    pub fn checked_sub(&self, rhs: &QuadNum) -> Result<QuadNum> {
        self.check(rhs)?;
        Ok(QuadNum::new(&self.p - &rhs.p, &self.q - &rhs.q, self.params))
    }

    pub fn checked_mul(&self, rhs: &QuadNum) -> Result<QuadNum> {
        self.check(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub fn checked_div(&self, rhs: &QuadNum) -> Result<QuadNum> {
        self.check(rhs)?;
        let inv = rhs.checked_recip()?;
        Ok(self.mul_unchecked(&inv))
    }

    fn mul_unchecked(&self, rhs: &QuadNum) -> QuadNum {
        // (p1 + q1 b)(p2 + q2 b) with b^2 = a0 b + a1
        if self.q.is_zero() {
            return QuadNum::new(&self.p * &rhs.p, &self.p * &rhs.q, self.params);
        }
        if rhs.q.is_zero() {
            return QuadNum::new(&self.p * &rhs.p, &self.q * &rhs.p, self.params);
        }
        let qq = &self.q * &rhs.q;
        let a0 = rat_int(self.params.a0 as i64);
        let a1 = rat_int(self.params.a1 as i64);
        let p = &self.p * &rhs.p + &qq * a1;
        let q = &self.p * &rhs.q + &self.q * &rhs.p + qq * a0;
        QuadNum::new(p, q, self.params)
    }

    /// Field norm `(p + q b)(p + q b')`, where `b' = a0 - b` is the conjugate.
    pub fn norm(&self) -> Rational {
        let a0 = rat_int(self.params.a0 as i64);
        let a1 = rat_int(self.params.a1 as i64);
        &self.p * &self.p + a0 * &self.p * &self.q - a1 * &self.q * &self.q
    }

    /// Conjugate `p + q b'` written back in the `(1, b)` basis: `(p + q a0) - q b`.
    pub fn conjugate(&self) -> QuadNum {
        let a0 = rat_int(self.params.a0 as i64);
        QuadNum::new(&self.p + &self.q * a0, -self.q.clone(), self.params)
    }

    pub fn checked_recip(&self) -> Result<QuadNum> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.q.is_zero() {
            return Ok(QuadNum::from_rational(self.p.recip(), self.params));
        }
        let n = self.norm();
        let c = self.conjugate();
        Ok(QuadNum::new(c.p / &n, c.q / n, self.params))
    }

    pub fn recip(&self) -> QuadNum {
        self.checked_recip().expect("reciprocal of zero")
    }

    pub fn pow(&self, mut n: u64) -> QuadNum {
        let mut base = self.clone();
        let mut acc = QuadNum::one(self.params);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    pub fn powi(&self, n: i64) -> QuadNum {
        if n >= 0 {
            self.pow(n as u64)
        } else {
            self.recip().pow((-n) as u64)
        }
    }

    pub fn scale(&self, r: &Rational) -> QuadNum {
        QuadNum::new(&self.p * r, &self.q * r, self.params)
    }

    pub fn abs(&self) -> QuadNum {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Exact sign of `p + q*beta`.
    ///
    /// Writing `2(p + q beta) = u + v sqrt(D)` with `u = 2p + a0 q`, `v = q`, opposite
    /// signs of `u` and `v` are resolved by comparing `u^2` against `v^2 D`.
    pub fn signum(&self) -> i32 {
        let sp = sign_of(&self.q);
        let a0 = rat_int(self.params.a0 as i64);
        let u = &self.p * rat_int(2) + &self.q * a0;
        let su = sign_of(&u);
        if sp == 0 {
            return sign_of(&self.p);
        }
        if su == 0 || su == sp {
            return sp;
        }
        let d = Rational::from_integer(self.params.discriminant());
        let lhs = &u * &u;
        let rhs = &self.q * &self.q * d;
        match lhs.cmp(&rhs) {
            Ordering::Greater => su,
            Ordering::Less => sp,
            Ordering::Equal => unreachable!("discriminant is never a perfect square"),
        }
    }

    /// Exact comparison. Panics on mismatched parameters.
    pub fn cmp_exact(&self, other: &QuadNum) -> Ordering {
        assert_eq!(self.params, other.params, "comparing across fields");
        if self.q == other.q {
            return self.p.cmp(&other.p);
        }
        (self - other).signum().cmp(&0)
    }

    /// The unique integer `m` with `m <= x < m + 1`.
    pub fn floor(&self) -> BigInt {
        if self.q.is_zero() {
            return self.p.floor().to_integer();
        }
        // x = (u + t)/2 with t = q sqrt(D); bracket t between consecutive integers
        let a0 = rat_int(self.params.a0 as i64);
        let u = &self.p * rat_int(2) + &self.q * a0;
        let r = &self.q * &self.q * Rational::from_integer(self.params.discriminant());
        let s = r.floor().to_integer().sqrt();
        let lower = if self.q.is_positive() {
            (u + Rational::from_integer(s)) / rat_int(2)
        } else {
            (u - Rational::from_integer(s) - Rational::one()) / rat_int(2)
        };
        let m0 = lower.floor().to_integer();
        let next = QuadNum::from_rational(Rational::from_integer(&m0 + 1), self.params);
        if (self - &next).signum() >= 0 {
            m0 + 1
        } else {
            m0
        }
    }

    /// Fractional part `x - floor(x)`, in `[0, 1)`.
    pub fn fract(&self) -> QuadNum {
        let m = self.floor();
        self - &QuadNum::from_rational(Rational::from_integer(m), self.params)
    }

    /// Accurate `f64` approximation. Cancellation between `p` and `q beta` is avoided
    /// by dividing the exact norm by the conjugate when the signs differ.
    pub fn to_f64(&self) -> f64 {
        let beta = self.params.beta_f64();
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        if self.q.is_zero() {
            return p;
        }
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        let sp = sign_of(&self.p);
        if sp == 0 || sp == sign_of(&self.q) {
            return p + q * beta;
        }
        let conj_beta = -(self.params.a1 as f64) / beta;
        let n = self.norm().to_f64().unwrap_or(f64::NAN);
        n / (p + q * conj_beta)
    }

    /// Decimal expansion with `digits` fractional digits, correctly rounded
    /// (ties to even, which can only occur for rational values).
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = Rational::from_integer(BigInt::from(10u32).pow(digits as u32));
        let y = self.scale(&scale);
        let m = y.floor();
        let frac = &y - &QuadNum::from_rational(Rational::from_integer(m.clone()), self.params);
        let half = QuadNum::from_ratio(1, 2, self.params);
        let rounded = match (&frac - &half).signum() {
            1 => m + 1,
            -1 => m,
            _ => {
                if m.is_even() {
                    m
                } else {
                    m + 1
                }
            }
        };
        format_scaled(&rounded, digits)
    }

    /// Parse the `p/q+r/s*beta` notation produced by `Display`.
    pub fn parse(s: &str, params: BetaParams) -> Result<QuadNum> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || Error::Parse(format!("malformed field element {s:?}"));
        if compact.is_empty() {
            return Err(err());
        }
        let Some(body) = compact.strip_suffix("*beta").or_else(|| {
            compact
                .strip_suffix("beta")
                .filter(|b| b.is_empty() || b.ends_with(['+', '-']))
        }) else {
            return Ok(QuadNum::from_rational(parse_rational(&compact).ok_or_else(err)?, params));
        };
        let split = body
            .char_indices()
            .skip(1)
            .filter(|(_, c)| *c == '+' || *c == '-')
            .map(|(i, _)| i)
            .last();
        let (rat_part, beta_part) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("", body),
        };
        let p = if rat_part.is_empty() {
            Rational::zero()
        } else {
            parse_rational(rat_part).ok_or_else(err)?
        };
        let q = match beta_part {
            "" | "+" => Rational::one(),
            "-" => -Rational::one(),
            other => parse_rational(other).ok_or_else(err)?,
        };
        Ok(QuadNum::new(p, q, params))
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.strip_prefix('+').unwrap_or(s);
    s.parse::<Rational>().ok()
}

fn sign_of(r: &Rational) -> i32 {
    match r.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

fn format_scaled(n: &BigInt, digits: usize) -> String {
    let neg = n.is_negative();
    let mut s = n.abs().to_string();
    if s.len() <= digits {
        s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
    }
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            return f.write_str(&fmt_rational(&self.p));
        }
        let q = if self.q.is_one() {
            String::new()
        } else if self.q == -Rational::one() {
            "-".to_string()
        } else {
            format!("{}*", fmt_rational(&self.q))
        };
        if self.p.is_zero() {
            write!(f, "{q}beta")
        } else if self.q.is_positive() {
            write!(f, "{}+{q}beta", fmt_rational(&self.p))
        } else {
            write!(f, "{}{q}beta", fmt_rational(&self.p))
        }
    }
}

impl fmt::Debug for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} [~{:.6}]", self.to_f64())
    }
}

impl PartialOrd for QuadNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.params == other.params).then(|| self.cmp_exact(other))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&QuadNum> for &QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &QuadNum) -> QuadNum {
                match self.$checked(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{e}"),
                }
            }
        }
        impl $trait<QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &QuadNum) -> QuadNum {
                (&self).$method(rhs)
            }
        }
        impl $trait<QuadNum> for &QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::new(-self.p.clone(), -self.q.clone(), self.params)
    }
}

impl Neg for QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::new(-self.p, -self.q, self.params)
    }
}
