//! The beta-map, its transfer and Koopman operators, and the integer-base operator.
//!
//! `(P f)(x) = (1/beta) * sum_{j=0}^{a0} f((x + j)/beta)` for `f` supported on
//! `[0, 1]`. The last branch `j = a0` only contributes while `(x + a0)/beta <= 1`,
//! i.e. `x <= a1/beta`; the zero extension in `compose_affine` enforces that.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{rat, BetaParams, QuadNum, Rational};
use crate::piecewise::PiecewisePoly;

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// `P f`, exact.
pub fn apply_transfer(f: &PiecewisePoly) -> Result<PiecewisePoly> {
    let params = f.params();
    let binv = QuadNum::beta_inv(params);
    let terms = (0..=params.a0() as i64)
        .map(|j| f.compose_affine(&binv, &binv.scale(&Rational::from_integer(j.into()))))
        .collect::<Result<Vec<_>>>()?;
    let live: Vec<(QuadNum, &PiecewisePoly)> = terms
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| (binv.clone(), t))
        .collect();
    if live.is_empty() {
        return Ok(PiecewisePoly::zero(params));
    }
    PiecewisePoly::combine(&live)
}

/// `P^k f`, exact.
pub fn apply_transfer_iterate(f: &PiecewisePoly, k: usize) -> Result<PiecewisePoly> {
    let mut g = f.clone();
    for _ in 0..k {
        g = apply_transfer(&g)?;
    }
    Ok(g)
}

/// Iterates `P^0 f, P^1 f, ..., P^k f`, failing once a result exceeds `max_pieces`.
pub fn transfer_orbit(f: &PiecewisePoly, k: usize, max_pieces: usize) -> Result<Vec<PiecewisePoly>> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(f.clone());
    for step in 1..=k {
        let next = apply_transfer(out.last().unwrap())?;
        if next.piece_count() > max_pieces {
            return Err(Error::Budget(format!(
                "P^{step} f has {} pieces (limit {max_pieces})",
                next.piece_count()
            )));
        }
        out.push(next);
    }
    Ok(out)
}

/// Koopman operator `g -> g o T_beta`.
pub fn apply_koopman(g: &PiecewisePoly) -> Result<PiecewisePoly> {
    let params = g.params();
    let beta = QuadNum::beta(params);
    let terms = (0..=params.a0() as i64)
        .map(|j| g.compose_affine(&beta, &QuadNum::from_int(-j, params)))
        .collect::<Result<Vec<_>>>()?;
    let one = QuadNum::one(params);
    let refs: Vec<(QuadNum, &PiecewisePoly)> = terms.iter().map(|t| (one.clone(), t)).collect();
    PiecewisePoly::combine(&refs)
}

/// Integer-base operator `(Q f)(x) = (1/q) sum_{j<q} f((x + j)/q)`; `f` must be
/// rational throughout.
pub fn apply_integer_transfer(f: &PiecewisePoly, q: u32) -> Result<PiecewisePoly> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("integer base {q} < 2")));
    }
    if let Some(c) = f
        .breakpoints()
        .iter()
        .chain(f.pieces().iter().flat_map(|p| p.coeffs()))
        .find(|c| !c.is_rational())
    {
        return Err(Error::NonRational(c.to_string()));
    }
    let params = f.params();
    let inv = QuadNum::from_ratio(1, q as i64, params);
    let terms = (0..q as i64)
        .map(|j| f.compose_affine(&inv, &QuadNum::from_ratio(j, q as i64, params)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(QuadNum, &PiecewisePoly)> = terms.iter().map(|t| (inv.clone(), t)).collect();
    PiecewisePoly::combine(&refs)
}

/// `Q^k f`, exact.
pub fn apply_integer_transfer_iterate(f: &PiecewisePoly, q: u32, k: usize) -> Result<PiecewisePoly> {
    let mut g = f.clone();
    for _ in 0..k {
        g = apply_integer_transfer(&g, q)?;
    }
    Ok(g)
}

/// `T_beta(x) = beta x - floor(beta x)` together with the digit `floor(beta x)`.
pub fn beta_map(x: &QuadNum) -> (u32, QuadNum) {
    let bx = &QuadNum::beta(x.params()) * x;
    let d = bx.floor();
    let digit: u32 = d.try_into().expect("digit of a point in [0,1) is small");
    (digit, &bx - &QuadNum::from_int(digit as i64, x.params()))
}

/// Greedy digits `x_k = floor(beta T^{k-1} x)` and the exact orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyDigits {
    pub x0: QuadNum,
    pub digits: Vec<u32>,
    /// `orbit[i] = T^i x0`, length `digits.len() + 1`.
    pub orbit: Vec<QuadNum>,
}

impl GreedyDigits {
    /// `sum_{i<=n} x_i beta^{-i}` over the first `n` digits.
    pub fn partial_sum(&self, n: usize) -> QuadNum {
        let params = self.x0.params();
        let binv = QuadNum::beta_inv(params);
        let mut weight = binv.clone();
        let mut acc = QuadNum::zero(params);
        for &d in &self.digits[..n] {
            acc = &acc + &weight.scale(&Rational::from_integer(d.into()));
            weight = &weight * &binv;
        }
        acc
    }
}

pub fn greedy_expand(x: &QuadNum, k: usize) -> Result<GreedyDigits> {
    let params = x.params();
    if x.signum() < 0 || x >= &QuadNum::one(params) {
        return Err(Error::OutOfDomain(x.to_string()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one digit".into()));
    }
    let mut digits = Vec::with_capacity(k);
    let mut orbit = Vec::with_capacity(k + 1);
    orbit.push(x.clone());
    for _ in 0..k {
        let (d, next) = beta_map(orbit.last().unwrap());
        digits.push(d);
        orbit.push(next);
    }
    Ok(GreedyDigits {
        x0: x.clone(),
        digits,
        orbit,
    })
}

/// Floating evaluation of `P^k F` by walking the tree of inverse branches.
///
/// Below `x < 1` the tree follows right limits (branch `a0` needs `y < a1/beta`);
/// at `x = 1` it follows left limits (`y <= a1/beta`), matching the exact engine.
#[derive(Clone, Debug)]
pub struct PointwiseEngine {
    params: BetaParams,
    beta: f64,
    inv_beta: f64,
    cut: f64,
    node_budget: u64,
}

impl PointwiseEngine {
    pub fn new(params: BetaParams) -> Self {
        let beta = params.beta_f64();
        PointwiseEngine {
            params,
            beta,
            inv_beta: 1.0 / beta,
            cut: params.a1() as f64 / beta,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn transfer_power<F>(&self, f: &F, k: usize, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64 + ?Sized,
    {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        const EPS: f64 = 1e-13;
        let left_limit = x == 1.0;
        let admits_last = |y: f64| {
            if left_limit {
                y <= self.cut + EPS
            } else {
                y < self.cut - EPS
            }
        };
        let a0 = self.params.a0();
        let mut nodes: u64 = 0;
        let mut sum = Neumaier::default();
        let mut stack = vec![(x, 0usize)];
        while let Some((y, depth)) = stack.pop() {
            nodes += 1;
            if nodes > self.node_budget {
                return Err(Error::Budget(format!(
                    "preimage tree exceeds {} nodes",
                    self.node_budget
                )));
            }
            if depth == k {
                sum.add(f(y));
                continue;
            }
            for j in 0..a0 {
                stack.push(((y + j as f64) * self.inv_beta, depth + 1));
            }
            if admits_last(y) {
                stack.push(((y + a0 as f64) * self.inv_beta, depth + 1));
            }
        }
        Ok(sum.total() * self.inv_beta.powi(k as i32))
    }

    /// `P^k F` on every point of `xs`, in parallel.
    pub fn transfer_power_grid<F>(&self, f: &F, k: usize, xs: &[f64]) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> f64 + Sync + ?Sized,
    {
        xs.par_iter().map(|&x| self.transfer_power(f, k, x)).collect()
    }
}

/// `Q^k F` at `x`: the mean of `F((x + m)/q^k)` over all `m < q^k`.
pub fn integer_transfer_power<F>(f: &F, q: u32, k: usize, x: f64, node_budget: u64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if q < 2 {
        return Err(Error::InvalidArgument(format!("integer base {q} < 2")));
    }
    let leaves = (q as u64)
        .checked_pow(k as u32)
        .filter(|n| *n <= node_budget)
        .ok_or_else(|| Error::Budget(format!("{q}^{k} leaves exceed the node budget")))?;
    let scale = (q as f64).powi(k as i32);
    let mut sum = Neumaier::default();
    for m in 0..leaves {
        sum.add(f((x + m as f64) / scale));
    }
    Ok(sum.total() / leaves as f64)
}

/// Compensated summation.
#[derive(Default, Clone, Copy, Debug)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Grid `i/(n-1)`, `i = 0..n`, as exact rationals.
pub fn rational_grid(n: usize, params: BetaParams) -> Vec<QuadNum> {
    let d = (n.max(2) - 1) as i64;
    (0..=d).map(|i| QuadNum::from_rational(rat(i, d), params)).collect()
}
