//! The two-term expansion of `P^k F`, the rate exponent `epsilon`, the partition
//! expansion of a smooth `F`, and log-slope fitting of residual series.

use rayon::prelude::*;
use serde::Serialize;

use crate::bernoulli::eb_expand;
use crate::error::{Error, Result};
use crate::field::{rat, BetaParams, QuadNum};
use crate::functions::Smooth;
use crate::partition::refine_to_level;
use crate::piecewise::{PiecewisePoly, SupNorm, DEFAULT_SUP_SAMPLES};
use crate::spectral::make_u_tilde;
use crate::transfer::{transfer_orbit, PointwiseEngine};

/// Entries skipped at the start of every fit.
pub const FIT_SKIP: usize = 5;

/// Entries below this fraction of the first one are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Default piece budget of the exact engine.
pub const DEFAULT_MAX_PIECES: usize = 1_000_000;

/// Least-squares slope of `ln v` against `k`, skipping the first `skip` entries,
/// zeros, non-finite values, and values below `NOISE_FLOOR` times the first entry.
pub fn fit_log_slope(ks: &[usize], values: &[f64], skip: usize) -> Option<f64> {
    let initial = *values.first()?;
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .skip(skip)
        .filter(|(_, &v)| v.is_finite() && v > 0.0 && v >= NOISE_FLOOR * initial)
        .map(|(&k, &v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `N`, the rate exponent `epsilon` and the lower bound on `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremParams {
    pub n: u32,
    pub epsilon: f64,
    pub n_min_bound: f64,
}

/// `3 ln(beta^2/a1) / ln(beta/a1)`; `N` must exceed it.
pub fn n_threshold(params: BetaParams) -> f64 {
    let b = params.beta_f64();
    let a1 = params.a1() as f64;
    3.0 * (b * b / a1).ln() / (b / a1).ln()
}

/// `epsilon = min{3/N, (ln(beta/a1) - (3/N) ln(beta^2/a1)) / ln beta}`.
pub fn epsilon_of(params: BetaParams, n: u32) -> Result<TheoremParams> {
    let threshold = n_threshold(params);
    // the threshold is an exact integer (6) when a1 = 1
    if (n as f64) <= threshold + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "N = {n} must exceed {threshold:.6} for {params}"
        )));
    }
    let b = params.beta_f64();
    let a1 = params.a1() as f64;
    let nf = n as f64;
    let second = ((b / a1).ln() - (3.0 / nf) * (b * b / a1).ln()) / b.ln();
    Ok(TheoremParams {
        n,
        epsilon: (3.0 / nf).min(second),
        n_min_bound: threshold,
    })
}

/// Which leading terms are subtracted from `P^k F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// `u1 int F`.
    OneTerm,
    /// `u1 int F + beta^-k u3 (F(1) - F(0))/4`.
    TwoTerm,
}

/// Residual sup norms per `k`, with `beta^-k` as reference scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub params: BetaParams,
    pub expansion: Expansion,
    pub ks: Vec<usize>,
    pub residual_lower: Vec<f64>,
    pub residual_upper: Vec<f64>,
    pub beta_power_bound: Vec<f64>,
    pub fitted_slope: Option<f64>,
}

impl ResidualSeries {
    fn new(params: BetaParams, expansion: Expansion, ks: Vec<usize>, brackets: Vec<SupNorm>) -> Self {
        let b = params.beta_f64();
        let residual_lower: Vec<f64> = brackets.iter().map(|s| s.lower).collect();
        let residual_upper: Vec<f64> = brackets.iter().map(|s| s.upper).collect();
        let beta_power_bound = ks.iter().map(|&k| b.powi(-(k as i32))).collect();
        let fitted_slope = fit_log_slope(&ks, &residual_upper, FIT_SKIP);
        ResidualSeries {
            params,
            expansion,
            ks,
            residual_lower,
            residual_upper,
            beta_power_bound,
            fitted_slope,
        }
    }

    /// `residual_upper / beta^-k`.
    pub fn ratios(&self) -> Vec<f64> {
        self.residual_upper
            .iter()
            .zip(&self.beta_power_bound)
            .map(|(r, b)| r / b)
            .collect()
    }

    /// Slope fitted over `k_lo <= k <= k_hi` only (noise floor still applies).
    pub fn slope_in(&self, k_lo: usize, k_hi: usize) -> Option<f64> {
        let (ks, vs): (Vec<usize>, Vec<f64>) = self
            .ks
            .iter()
            .zip(&self.residual_upper)
            .filter(|(&k, _)| k >= k_lo && k <= k_hi)
            .map(|(&k, &v)| (k, v))
            .unzip();
        let floor = NOISE_FLOOR * self.residual_upper.first().copied().unwrap_or(0.0);
        let kept: (Vec<usize>, Vec<f64>) = ks.into_iter().zip(vs).filter(|(_, v)| *v >= floor).unzip();
        fit_log_slope(&kept.0, &kept.1, 0)
    }
}

/// Exact-engine residuals for `k = 1..=k_max`, with certified sup-norm brackets.
/// `F(0)` and `F(1)` are the one-sided limits of the end pieces.
pub fn residual_exact(
    f: &PiecewisePoly,
    k_max: usize,
    expansion: Expansion,
    max_pieces: usize,
) -> Result<ResidualSeries> {
    let params = f.params();
    let [u1, _, u3] = make_u_tilde(params)?;
    let mean = f.integrate();
    let jump = (&f.value_at_one() - &f.value_at_zero()).scale(&rat(1, 4));
    let base = u1.scale(&mean);
    let orbit = transfer_orbit(f, k_max, max_pieces)?;
    let brackets = orbit[1..]
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut r = g.sub(&base)?;
            if expansion == Expansion::TwoTerm {
                let c = &jump * &QuadNum::beta_pow(params, -(i as i64 + 1));
                r = r.sub(&u3.scale(&c))?;
            }
            r.sup_norm_estimate(DEFAULT_SUP_SAMPLES)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualSeries::new(params, expansion, (1..=k_max).collect(), brackets))
}

pub fn two_term_residual_exact(f: &PiecewisePoly, k_max: usize) -> Result<ResidualSeries> {
    residual_exact(f, k_max, Expansion::TwoTerm, DEFAULT_MAX_PIECES)
}

/// Grid-sup residuals for `k = 1..=k_max` from the preimage-tree engine;
/// lower and upper coincide.
pub fn residual_numeric(
    f: &dyn Smooth,
    params: BetaParams,
    k_max: usize,
    grid: usize,
    expansion: Expansion,
) -> Result<ResidualSeries> {
    if grid < 101 {
        return Err(Error::InvalidArgument(format!("grid must have at least 101 points, got {grid}")));
    }
    let [u1, _, u3] = make_u_tilde(params)?;
    let mean = f.integral(0.0, 1.0);
    let jump = (f.value(1.0) - f.value(0.0)) / 4.0;
    let xs: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let u1v: Vec<f64> = xs.iter().map(|&x| u1.eval_f64(x)).collect();
    let u3v: Vec<f64> = xs.iter().map(|&x| u3.eval_f64(x)).collect();
    let engine = PointwiseEngine::new(params);
    let beta = params.beta_f64();
    let value = |x: f64| f.value(x);
    let mut brackets = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let pk = engine.transfer_power_grid(&value, k, &xs)?;
        let c = jump * beta.powi(-(k as i32));
        let sup = pk
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut r = v - u1v[i] * mean;
                if expansion == Expansion::TwoTerm {
                    r -= c * u3v[i];
                }
                r.abs()
            })
            .fold(0.0, f64::max);
        brackets.push(SupNorm {
            lower: sup,
            upper: sup,
        });
    }
    Ok(ResidualSeries::new(params, expansion, (1..=k_max).collect(), brackets))
}

pub fn two_term_residual_numeric(
    f: &dyn Smooth,
    params: BetaParams,
    k_max: usize,
    grid: usize,
) -> Result<ResidualSeries> {
    residual_numeric(f, params, k_max, grid, Expansion::TwoTerm)
}

/// Partition expansion of `F` at level `M` and order `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionExpansionReport {
    pub m: u32,
    pub n: usize,
    /// Grid sup of `|F - expansion|`.
    pub error: f64,
    /// `beta^{-MN} sup|F^(N)|`.
    pub bound_scale: f64,
    /// `error / bound_scale`.
    pub constant: f64,
}

/// Rebuilds `F` gap by gap from its mean and the jumps of `F, ..., F^(N-1)`
/// weighted by Bernoulli blocks, and reports the grid sup error.
pub fn partition_expansion(
    f: &dyn Smooth,
    params: BetaParams,
    m: u32,
    n: usize,
    grid: usize,
) -> Result<PartitionExpansionReport> {
    if m == 0 || m > 8 {
        return Err(Error::InvalidArgument(format!("level M must be in 1..=8, got {m}")));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let partition = refine_to_level(params, m)?;
    let expansions = partition
        .points
        .windows(2)
        .map(|w| eb_expand(f, &w[0].value, &w[1].value, n))
        .collect::<Result<Vec<_>>>()?;
    let lefts: Vec<f64> = partition.points.iter().map(|p| p.value.to_f64()).collect();
    let error = (0..grid)
        .map(|i| {
            let y = i as f64 / (grid - 1) as f64;
            let idx = lefts
                .partition_point(|&t| t <= y)
                .saturating_sub(1)
                .min(expansions.len() - 1);
            (f.value(y) - expansions[idx].reconstruct(y)).abs()
        })
        .fold(0.0, f64::max);
    let bound_scale =
        params.beta_f64().powi(-((m as usize * n) as i32)) * f.derivative_sup(n, 0.0, 1.0);
    Ok(PartitionExpansionReport {
        m,
        n,
        error,
        bound_scale,
        constant: if bound_scale > 0.0 { error / bound_scale } else { 0.0 },
    })
}

/// The three error scales of the decomposition at `(M, k, N)`, in units of `ln beta`
/// (each term is `beta^{-exponent}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorExponents {
    /// `(a1/beta^2)^{k-M}`.
    pub contraction: f64,
    /// `beta^{-k-M}`.
    pub subleading: f64,
    /// `beta^{k-MN}`.
    pub truncation: f64,
}

impl ErrorExponents {
    pub fn new(params: BetaParams, m: u32, k: usize, n: u32) -> Self {
        let b = params.beta_f64();
        let a1 = params.a1() as f64;
        let (m, k, n) = (m as f64, k as f64, n as f64);
        ErrorExponents {
            contraction: (k - m) * (b * b / a1).ln() / b.ln(),
            subleading: k + m,
            truncation: m * n - k,
        }
    }

    pub fn min(&self) -> f64 {
        self.contraction.min(self.subleading).min(self.truncation)
    }
}

/// `M = floor(3k/N)` and the decay exponent it buys: the largest of the three
/// error terms is `beta^{-(1 + effective_epsilon) k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionBudget {
    pub m: u32,
    pub exponents: ErrorExponents,
    pub effective_epsilon: f64,
}

pub fn decomposition_budget(params: BetaParams, n: u32, k: usize) -> DecompositionBudget {
    let m = (3 * k as u32) / n;
    let exponents = ErrorExponents::new(params, m, k, n);
    DecompositionBudget {
        m,
        exponents,
        effective_epsilon: exponents.min() / k as f64 - 1.0,
    }
}

/// Largest admissible order-of-magnitude constant.
pub const MAX_CONSTANT: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub m: u32,
    pub k: usize,
    pub n: u32,
    pub residual: SupNorm,
    pub exponents: ErrorExponents,
    /// `max_{j <= N} sup |F^(j)|` (certified upper bounds).
    pub cn_norm: f64,
    /// `residual / (cn_norm * largest error term)`.
    pub constant: f64,
    pub passed: bool,
}

/// Exact two-term residual at a single `k`, compared with the error terms of the
/// decomposition at level `M` and order `N`.
pub fn decomposition_check(f: &PiecewisePoly, m: u32, k: usize, n: u32) -> Result<DecompositionReport> {
    if k <= m as usize + 1 {
        return Err(Error::InvalidArgument(format!("need k > M + 1 (k = {k}, M = {m})")));
    }
    let params = f.params();
    let series = residual_exact(f, k, Expansion::TwoTerm, DEFAULT_MAX_PIECES)?;
    let residual = SupNorm {
        lower: *series.residual_lower.last().unwrap(),
        upper: *series.residual_upper.last().unwrap(),
    };
    let mut cn_norm = 0.0f64;
    let mut d = f.clone();
    for _ in 0..=n {
        cn_norm = cn_norm.max(d.sup_norm_estimate(DEFAULT_SUP_SAMPLES)?.upper);
        d = d.derivative();
    }
    let exponents = ErrorExponents::new(params, m, k, n);
    let scale = params.beta_f64().powf(-exponents.min()) * cn_norm;
    let constant = if residual.upper == 0.0 { 0.0 } else { residual.upper / scale };
    Ok(DecompositionReport {
        m,
        k,
        n,
        residual,
        exponents,
        cn_norm,
        constant,
        passed: constant < MAX_CONSTANT,
    })
}
