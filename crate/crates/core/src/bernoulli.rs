//! Bernoulli polynomials, the Euler-Bernoulli expansion on an interval, and the
//! complete expansion of integer-base iterates.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{rat, rat_int, BetaParams, QuadNum, Rational};
use crate::functions::{integrate, Smooth, SmoothMp};
use crate::poly::{horner, Polynomial, MAX_DEGREE};
use crate::transfer::{integer_transfer_power, DEFAULT_NODE_BUDGET};

/// `B_0, ..., B_max` with exact rational coefficients (ascending degree).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernoulliTable {
    max_degree: usize,
    polys: Vec<Vec<Rational>>,
}

impl BernoulliTable {
    /// Builds the table from `B_n' = n B_{n-1}` and `int_0^1 B_n = 0`.
    pub fn new(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "Bernoulli degree {max_degree} exceeds {MAX_DEGREE}"
            )));
        }
        let mut polys = vec![vec![rat_int(1)]];
        for n in 1..=max_degree {
            let prev = &polys[n - 1];
            // n * antiderivative of B_{n-1}, then fix the constant
            let mut next = vec![Rational::zero()];
            for (i, c) in prev.iter().enumerate() {
                next.push(c * rat(n as i64, i as i64 + 1));
            }
            let mean: Rational = next
                .iter()
                .enumerate()
                .map(|(i, c)| c * rat(1, i as i64 + 1))
                .sum();
            next[0] = -mean;
            polys.push(next);
        }
        Ok(BernoulliTable { max_degree, polys })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn coeffs(&self, n: usize) -> &[Rational] {
        &self.polys[n]
    }

    pub fn coeffs_f64(&self, n: usize) -> Vec<f64> {
        self.polys[n]
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn polynomial(&self, n: usize, params: BetaParams) -> Polynomial {
        Polynomial::from_rationals(&self.polys[n], params)
    }
}

/// `B_n` as a polynomial over `Q(beta)`.
pub fn bernoulli_poly(n: usize, params: BetaParams) -> Result<Polynomial> {
    Ok(BernoulliTable::new(n)?.polynomial(n, params))
}

/// Exact rational coefficients of `B_n`.
pub fn bernoulli_coeffs(n: usize) -> Result<Vec<Rational>> {
    let mut t = BernoulliTable::new(n)?;
    Ok(t.polys.swap_remove(n))
}

/// `B_n(x - floor(x))`.
pub fn periodized_eval(n: usize, x: f64) -> Result<f64> {
    let t = BernoulliTable::new(n)?;
    Ok(horner(&t.coeffs_f64(n), x - x.floor()))
}

/// `max |B_n|` on `[0, 1]`, sampled on a fine grid plus the endpoints.
pub fn bernoulli_sup(n: usize) -> Result<f64> {
    let t = BernoulliTable::new(n)?;
    let c = t.coeffs_f64(n);
    Ok((0..=20_000)
        .map(|i| horner(&c, i as f64 / 20_000.0).abs())
        .fold(0.0, f64::max))
}

/// Numeric `||B_n||_{L^1([0,1])}` by adaptive quadrature (tolerance `1e-12`).
pub fn bernoulli_l1_norm(n: usize) -> Result<f64> {
    let t = BernoulliTable::new(n)?;
    let c = t.coeffs_f64(n);
    // split at sign changes so each panel is smooth
    let grid = 4096;
    let mut cuts = vec![0.0];
    for i in 0..grid {
        let (a, b) = (i as f64 / grid as f64, (i + 1) as f64 / grid as f64);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fb == 0.0 && i + 1 < grid {
            cuts.push(b);
        } else if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if horner(&c, mid).signum() == fa.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.push(1.0);
    let tol = 1e-12 / cuts.len() as f64;
    Ok(cuts
        .windows(2)
        .map(|w| integrate(&|x| horner(&c, x).abs(), w[0], w[1], tol))
        .sum())
}

/// Coefficients of the rescaled Euler-Bernoulli expansion of `F` on `[a, b]`:
/// `F(y) ~ mean + sum_s (b-a)^{s-1} jump_s B_s((y-a)/(b-a)) / s!`.
#[derive(Clone, Debug)]
pub struct EBExpansion {
    pub mean: f64,
    /// `F^{(s-1)}(b) - F^{(s-1)}(a)` for `s = 1..=n`.
    pub jump_coeffs: Vec<f64>,
    pub a: QuadNum,
    pub b: QuadNum,
    pub n: usize,
    bernoulli: Vec<Vec<f64>>,
}

impl EBExpansion {
    pub fn interval_f64(&self) -> (f64, f64) {
        (self.a.to_f64(), self.b.to_f64())
    }

    /// Finite sum, without the integral remainder. Defined on `[a, b]`.
    pub fn reconstruct(&self, y: f64) -> f64 {
        let (a, b) = self.interval_f64();
        let h = b - a;
        let t = ((y - a) / h).clamp(0.0, 1.0);
        let mut acc = self.mean;
        let mut hpow = 1.0;
        let mut fact = 1.0;
        for s in 1..=self.n {
            fact *= s as f64;
            acc += hpow * self.jump_coeffs[s - 1] * horner(&self.bernoulli[s], t) / fact;
            hpow *= h;
        }
        acc
    }

    /// `(b-a)^N sup|F^(N)| max|B_N| / N!`.
    pub fn error_bound(&self, f: &dyn Smooth) -> Result<f64> {
        let (a, b) = self.interval_f64();
        let fact: f64 = (1..=self.n).map(|i| i as f64).product();
        Ok((b - a).powi(self.n as i32) * f.derivative_sup(self.n, a, b) * bernoulli_sup(self.n)?
            / fact)
    }
}

pub fn eb_expand(f: &dyn Smooth, a: &QuadNum, b: &QuadNum, n: usize) -> Result<EBExpansion> {
    if a >= b {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("expansion order must be >= 1".into()));
    }
    let table = BernoulliTable::new(n)?;
    let (af, bf) = (a.to_f64(), b.to_f64());
    Ok(EBExpansion {
        mean: f.integral(af, bf) / (bf - af),
        jump_coeffs: (1..=n)
            .map(|s| f.derivative(s - 1, bf) - f.derivative(s - 1, af))
            .collect(),
        a: a.clone(),
        b: b.clone(),
        n,
        bernoulli: (0..=n).map(|s| table.coeffs_f64(s)).collect(),
    })
}

/// Grid sup of `|Q^k F - int F - sum_{j<=N} q^{-jk} (F^{(j-1)}(1) - F^{(j-1)}(0)) B_j / j!|`
/// on `grid` equispaced points of `[0, 1]`, with `Q^k F` from the uniform preimage tree.
pub fn integer_base_expansion_residual(
    f: &dyn Smooth,
    q: u32,
    k: usize,
    n: usize,
    grid: usize,
) -> Result<f64> {
    if q < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!("need q >= 2 and k >= 1 (q={q}, k={k})")));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let table = BernoulliTable::new(n)?;
    let mean = f.integral(0.0, 1.0);
    let mut terms = Vec::with_capacity(n);
    let mut fact = 1.0;
    for j in 1..=n {
        fact *= j as f64;
        let jump = f.derivative(j - 1, 1.0) - f.derivative(j - 1, 0.0);
        let decay = (q as f64).powi(-((j * k) as i32));
        terms.push((decay * jump / fact, table.coeffs_f64(j)));
    }
    let residuals = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / (grid - 1) as f64;
            let qk = integer_transfer_power(&|y| f.value(y), q, k, x, DEFAULT_NODE_BUDGET)?;
            let model: f64 = mean + terms.iter().map(|(c, b)| c * horner(b, x)).sum::<f64>();
            Ok((qk - model).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Default working precision (bits) of the multiprecision residual.
pub const DEFAULT_MP_PRECISION: usize = 160;

const RM: RoundingMode = RoundingMode::ToEven;

fn rational_mp(r: &Rational, prec: usize, cc: &mut Consts) -> BigFloat {
    let n = BigFloat::parse(&r.numer().to_string(), Radix::Dec, prec, RM, cc);
    let d = BigFloat::parse(&r.denom().to_string(), Radix::Dec, prec, RM, cc);
    n.div(&d, prec, RM)
}

fn mp_to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN)
}

/// Same residual as [`integer_base_expansion_residual`], with every leaf value,
/// the mean and the derivative jumps carried at `prec` bits. Needed once the
/// residual drops below `f64` round-off (around `1e-15`).
pub fn integer_base_expansion_residual_mp(
    f: &dyn SmoothMp,
    q: u32,
    k: usize,
    n: usize,
    grid: usize,
    prec: usize,
) -> Result<f64> {
    if q < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!("need q >= 2 and k >= 1 (q={q}, k={k})")));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let leaves = (q as u64)
        .checked_pow(k as u32)
        .filter(|&l| l <= DEFAULT_NODE_BUDGET)
        .ok_or_else(|| Error::Budget(format!("{q}^{k} leaves exceed the node budget")))?;
    let table = BernoulliTable::new(n)?;
    let mut cc = Consts::new().map_err(|e| Error::InvalidArgument(format!("{e:?}")))?;
    let zero = BigFloat::from_f64(0.0, prec);
    let one = BigFloat::from_f64(1.0, prec);
    let mean = f.integral_mp(&zero, &one, prec, &mut cc);
    let qk = BigFloat::from_f64(leaves as f64, prec);
    let mut terms = Vec::with_capacity(n);
    let mut fact = 1.0;
    for j in 1..=n {
        fact *= j as f64;
        let jump = f
            .derivative_mp(j - 1, &one, prec, &mut cc)
            .sub(&f.derivative_mp(j - 1, &zero, prec, &mut cc), prec, RM);
        let decay = qk.powi(j, prec, RM).reciprocal(prec, RM);
        let c = jump.mul(&decay, prec, RM).div(&BigFloat::from_f64(fact, prec), prec, RM);
        let b: Vec<BigFloat> = table
            .coeffs(j)
            .iter()
            .map(|r| rational_mp(r, prec, &mut cc))
            .collect();
        terms.push((c, b));
    }
    let residuals = (0..grid)
        .into_par_iter()
        .map_init(
            || Consts::new().expect("constant cache"),
            |cc, i| {
                let x = BigFloat::from_f64(i as f64, prec)
                    .div(&BigFloat::from_f64((grid - 1) as f64, prec), prec, RM);
                let mut sum = zero.clone();
                for m in 0..leaves {
                    let y = x
                        .add(&BigFloat::from_f64(m as f64, prec), prec, RM)
                        .div(&qk, prec, RM);
                    sum = sum.add(&f.value_mp(&y, prec, cc), prec, RM);
                }
                let mut r = sum.div(&qk, prec, RM).sub(&mean, prec, RM);
                for (c, b) in &terms {
                    let bx = b
                        .iter()
                        .rev()
                        .fold(zero.clone(), |acc, bi| acc.mul(&x, prec, RM).add(bi, prec, RM));
                    r = r.sub(&c.mul(&bx, prec, RM), prec, RM);
                }
                mp_to_f64(&r, cc).abs()
            },
        )
        .collect::<Vec<f64>>();
    Ok(residuals.into_iter().fold(0.0, f64::max))
}
