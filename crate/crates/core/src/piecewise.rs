//! Piecewise polynomials on `[0, 1]` with breakpoints and coefficients in `Q(beta)`.
//!
//! Pieces live on open intervals; functions are identified almost everywhere. Point
//! evaluation uses the right limit at interior breakpoints and the left limit at 1.
//! Every constructor and operation returns the canonical form, in which no two
//! adjacent pieces carry the same polynomial.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BetaParams, QuadNum};
use crate::poly::{horner, Polynomial};

pub const DEFAULT_SUP_SAMPLES: usize = 32;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PiecewisePoly {
    breakpoints: Vec<QuadNum>,
    pieces: Vec<Polynomial>,
}

/// Certified bracket `lower <= ||f||_inf <= upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub lower: f64,
    pub upper: f64,
}

impl PiecewisePoly {
    pub fn new(breakpoints: Vec<QuadNum>, pieces: Vec<Polynomial>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != pieces.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints for {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        let params = breakpoints[0].params();
        if breakpoints.iter().any(|b| b.params() != params) {
            return Err(Error::InvalidArgument("mixed parameters in breakpoints".into()));
        }
        if let Some(p) = pieces.iter().find(|p| p.params() != params) {
            return Err(Error::ParamsMismatch(params, p.params()));
        }
        if !breakpoints[0].is_zero() || breakpoints.last() != Some(&QuadNum::one(params)) {
            return Err(Error::InvalidArgument(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints
            .windows(2)
            .any(|w| w[0].cmp_exact(&w[1]) != Ordering::Less)
        {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self::canonical(breakpoints, pieces))
    }

    /// Build without validation; callers guarantee strictly increasing breakpoints.
    fn canonical(breakpoints: Vec<QuadNum>, pieces: Vec<Polynomial>) -> Self {
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut out: Vec<Polynomial> = Vec::with_capacity(pieces.len());
        let mut iter = breakpoints.into_iter();
        bps.push(iter.next().expect("at least one breakpoint"));
        for (bp, piece) in iter.zip(pieces) {
            if out.last() == Some(&piece) {
                *bps.last_mut().unwrap() = bp;
            } else {
                out.push(piece);
                bps.push(bp);
            }
        }
        PiecewisePoly {
            breakpoints: bps,
            pieces: out,
        }
    }

    pub fn zero(params: BetaParams) -> Self {
        Self::from_poly(Polynomial::zero(params))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        let params = p.params();
        PiecewisePoly {
            breakpoints: vec![QuadNum::zero(params), QuadNum::one(params)],
            pieces: vec![p],
        }
    }

    pub fn constant(c: QuadNum) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    /// `p` on `[a, b]`, zero elsewhere; requires `0 <= a < b <= 1`.
    pub fn supported_on(a: &QuadNum, b: &QuadNum, p: Polynomial) -> Result<Self> {
        let params = p.params();
        let zero = QuadNum::zero(params);
        let one = QuadNum::one(params);
        if a.signum() < 0 || b > &one || a >= b {
            return Err(Error::InvalidArgument(format!("bad support [{a}, {b}]")));
        }
        let mut bps = vec![zero.clone()];
        let mut pieces = Vec::new();
        if a > &zero {
            pieces.push(Polynomial::zero(params));
            bps.push(a.clone());
        }
        pieces.push(p);
        bps.push(b.clone());
        if b < &one {
            pieces.push(Polynomial::zero(params));
            bps.push(one);
        }
        Ok(Self::canonical(bps, pieces))
    }

    pub fn params(&self) -> BetaParams {
        self.breakpoints[0].params()
    }

    pub fn breakpoints(&self) -> &[QuadNum] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Polynomial] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.pieces.iter().filter_map(Polynomial::degree).max()
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(Polynomial::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.breakpoints.iter().all(QuadNum::is_rational)
            && self.pieces.iter().all(Polynomial::is_rational)
    }

    /// Index of the piece used for evaluation at `x`.
    fn piece_index(&self, x: &QuadNum) -> usize {
        // first breakpoint strictly greater than x, minus one
        let n = self.pieces.len();
        let idx = self
            .breakpoints
            .partition_point(|b| b.cmp_exact(x) != Ordering::Greater);
        idx.saturating_sub(1).min(n - 1)
    }

    /// The polynomial used for evaluation at `x` (right limit, left limit at 1).
    pub fn piece_at(&self, x: &QuadNum) -> &Polynomial {
        &self.pieces[self.piece_index(x)]
    }

    pub fn eval(&self, x: &QuadNum) -> Result<QuadNum> {
        if x.params() != self.params() {
            return Err(Error::ParamsMismatch(self.params(), x.params()));
        }
        if x.signum() < 0 || x > &QuadNum::one(self.params()) {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        Ok(self.pieces[self.piece_index(x)].eval(x))
    }

    /// Floating evaluation; outside `[0, 1]` the function is zero.
    pub fn eval_f64(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let n = self.pieces.len();
        let idx = self
            .breakpoints
            .partition_point(|b| b.to_f64() <= x)
            .saturating_sub(1)
            .min(n - 1);
        horner(&self.pieces[idx].coeffs_f64(), x)
    }

    /// Right limit at 0.
    pub fn value_at_zero(&self) -> QuadNum {
        self.pieces[0].eval(&QuadNum::zero(self.params()))
    }

    /// Left limit at 1.
    pub fn value_at_one(&self) -> QuadNum {
        self.pieces
            .last()
            .unwrap()
            .eval(&QuadNum::one(self.params()))
    }

    /// Piecewise derivative (jumps at breakpoints are dropped).
    pub fn derivative(&self) -> PiecewisePoly {
        Self::canonical(
            self.breakpoints.clone(),
            self.pieces.iter().map(Polynomial::derivative).collect(),
        )
    }

    /// Exact linear combination `sum c_i f_i` over the merged breakpoint set.
    pub fn combine(terms: &[(QuadNum, &PiecewisePoly)]) -> Result<PiecewisePoly> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidArgument("empty linear combination".into()));
        };
        let params = first.params();
        for (c, f) in terms {
            if c.params() != params {
                return Err(Error::ParamsMismatch(params, c.params()));
            }
            if f.params() != params {
                return Err(Error::ParamsMismatch(params, f.params()));
            }
        }
        let merged = merge_breakpoints(terms.iter().map(|(_, f)| f.breakpoints.as_slice()));
        let mut cursors = vec![0usize; terms.len()];
        let mut pieces = Vec::with_capacity(merged.len() - 1);
        for left in &merged[..merged.len() - 1] {
            let mut acc = Polynomial::zero(params);
            for ((c, f), cur) in terms.iter().zip(cursors.iter_mut()) {
                while *cur + 1 < f.pieces.len() && &f.breakpoints[*cur + 1] == left {
                    *cur += 1;
                }
                if !c.is_zero() {
                    acc = acc.add(&f.pieces[*cur].scale(c));
                }
            }
            pieces.push(acc);
        }
        Ok(Self::canonical(merged, pieces))
    }

    pub fn add(&self, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        let one = QuadNum::one(self.params());
        Self::combine(&[(one.clone(), self), (one, other)])
    }

    pub fn sub(&self, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        let one = QuadNum::one(self.params());
        Self::combine(&[(one.clone(), self), (-one, other)])
    }

    pub fn scale(&self, c: &QuadNum) -> PiecewisePoly {
        if c.is_zero() {
            return Self::zero(self.params());
        }
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        if self.params() != other.params() {
            return Err(Error::ParamsMismatch(self.params(), other.params()));
        }
        let merged = merge_breakpoints([self.breakpoints(), other.breakpoints()].into_iter());
        let (mut i, mut j) = (0, 0);
        let mut pieces = Vec::with_capacity(merged.len() - 1);
        for left in &merged[..merged.len() - 1] {
            while i + 1 < self.pieces.len() && &self.breakpoints[i + 1] == left {
                i += 1;
            }
            while j + 1 < other.pieces.len() && &other.breakpoints[j + 1] == left {
                j += 1;
            }
            pieces.push(self.pieces[i].mul(&other.pieces[j])?);
        }
        Ok(Self::canonical(merged, pieces))
    }

    /// `x -> f(scale*x + shift)` on `[0, 1]`, extended by zero wherever
    /// `scale*x + shift` leaves `[0, 1]`.
    pub fn compose_affine(&self, scale: &QuadNum, shift: &QuadNum) -> Result<PiecewisePoly> {
        let params = self.params();
        if scale.params() != params || shift.params() != params {
            return Err(Error::ParamsMismatch(params, scale.params()));
        }
        if scale.signum() <= 0 {
            return Err(Error::InvalidArgument("affine scale must be positive".into()));
        }
        let zero = QuadNum::zero(params);
        let one = QuadNum::one(params);
        let inv = scale.recip();
        let preimage = |y: &QuadNum| &(y - shift) * &inv;

        let start = preimage(&zero);
        let end = preimage(&one);
        let lo = if start > zero { start } else { zero.clone() };
        let hi = if end < one { end } else { one.clone() };
        if lo >= hi {
            return Ok(Self::zero(params));
        }

        let mut bps = vec![zero.clone()];
        let mut pieces = Vec::new();
        if lo > zero {
            pieces.push(Polynomial::zero(params));
            bps.push(lo.clone());
        }
        // breakpoints of f strictly inside the image (scale*lo + shift, scale*hi + shift)
        let img_lo = &(scale * &lo) + shift;
        let img_hi = &(scale * &hi) + shift;
        let first = self
            .breakpoints
            .partition_point(|b| b.cmp_exact(&img_lo) != Ordering::Greater)
            - 1;
        for i in first..self.pieces.len() {
            let right_img = &self.breakpoints[i + 1];
            let done = right_img >= &img_hi;
            let right = if done { hi.clone() } else { preimage(right_img) };
            pieces.push(self.pieces[i].compose_affine(scale, shift));
            bps.push(right);
            if done {
                break;
            }
        }
        if hi < one {
            pieces.push(Polynomial::zero(params));
            bps.push(one);
        }
        Ok(Self::canonical(bps, pieces))
    }

    /// Exact `int_0^1 f`.
    pub fn integrate(&self) -> QuadNum {
        let mut acc = QuadNum::zero(self.params());
        for (i, p) in self.pieces.iter().enumerate() {
            if !p.is_zero() {
                acc = &acc + &p.integrate(&self.breakpoints[i], &self.breakpoints[i + 1]);
            }
        }
        acc
    }

    /// Almost-everywhere equality.
    pub fn equal_ae(&self, other: &PiecewisePoly) -> bool {
        if self.params() != other.params() {
            return false;
        }
        if self == other {
            return true;
        }
        self.sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

    /// Certified bracket for the sup norm.
    ///
    /// Each piece is sampled on `samples_per_piece + 1` Chebyshev-Lobatto nodes
    /// (endpoints included, so one-sided limits are covered). With `L` a bound on
    /// `|p'|` over the piece, `|p|` between adjacent nodes `x0 < x1` stays below
    /// the cone envelope `(|p(x0)| + |p(x1)| + L (x1 - x0)) / 2`. Affine pieces
    /// attain their maximum at an endpoint. Node sets are nested under doubling
    /// and the envelope only drops when a node is added, so the bracket never
    /// widens as `samples_per_piece` doubles.
    pub fn sup_norm_estimate(&self, samples_per_piece: usize) -> Result<SupNorm> {
        if samples_per_piece < 2 {
            return Err(Error::InvalidArgument(
                "at least two samples per piece are required".into(),
            ));
        }
        let bps: Vec<f64> = self.breakpoints.iter().map(QuadNum::to_f64).collect();
        let mut lower = 0.0f64;
        let mut upper = 0.0f64;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let c = p.coeffs_f64();
            let (a, b) = (bps[i], bps[i + 1]);
            if c.len() <= 2 {
                let m = horner(&c, a).abs().max(horner(&c, b).abs());
                lower = lower.max(m);
                upper = upper.max(m);
                continue;
            }
            let r = a.abs().max(b.abs());
            let lip: f64 = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, ck)| k as f64 * ck.abs() * r.powi(k as i32 - 1))
                .sum();
            let m = samples_per_piece;
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let (mut px, mut pv) = (a, horner(&c, a).abs());
            lower = lower.max(pv);
            for k in 1..=m {
                let x = if k == m {
                    b
                } else {
                    mid - half * (std::f64::consts::PI * k as f64 / m as f64).cos()
                };
                let v = horner(&c, x).abs();
                lower = lower.max(v);
                upper = upper.max(0.5 * (pv + v + lip * (x - px)));
                (px, pv) = (x, v);
            }
        }
        Ok(SupNorm {
            lower,
            upper: upper.max(lower),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = PiecewiseDoc {
            schema: 1,
            a0: self.params().a0(),
            a1: self.params().a1(),
            breakpoints: self.breakpoints.iter().map(ToString::to_string).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.coeffs().iter().map(ToString::to_string).collect())
                .collect(),
        };
        serde_json::to_value(doc).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<PiecewisePoly> {
        let doc: PiecewiseDoc =
            serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.schema != 1 {
            return Err(Error::Parse(format!("unsupported schema {}", doc.schema)));
        }
        let params = BetaParams::new(doc.a0 as i64, doc.a1 as i64)?;
        let bps = doc
            .breakpoints
            .iter()
            .map(|s| QuadNum::parse(s, params))
            .collect::<Result<Vec<_>>>()?;
        let pieces = doc
            .pieces
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|s| QuadNum::parse(s, params))
                    .collect::<Result<Vec<_>>>()
                    .map(|c| Polynomial::new(c, params))
            })
            .collect::<Result<Vec<_>>>()?;
        PiecewisePoly::new(bps, pieces)
    }
}

#[derive(Serialize, Deserialize)]
struct PiecewiseDoc {
    schema: u32,
    a0: u32,
    a1: u32,
    breakpoints: Vec<String>,
    pieces: Vec<Vec<String>>,
}

/// Sorted union of several strictly increasing breakpoint lists.
fn merge_breakpoints<'a>(lists: impl Iterator<Item = &'a [QuadNum]>) -> Vec<QuadNum> {
    let mut out: Vec<QuadNum> = Vec::new();
    for list in lists {
        if out.is_empty() {
            out = list.to_vec();
            continue;
        }
        if out.as_slice() == list {
            continue;
        }
        let mut merged = Vec::with_capacity(out.len() + list.len());
        let (mut i, mut j) = (0, 0);
        while i < out.len() && j < list.len() {
            match approx_cmp(&out[i], &list[j]) {
                Ordering::Less => {
                    merged.push(out[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    merged.push(list[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    merged.push(out[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        merged.extend_from_slice(&out[i..]);
        merged.extend_from_slice(&list[j..]);
        out = merged;
    }
    out
}

/// Exact comparison with a floating pre-filter for well-separated values.
pub(crate) fn approx_cmp(a: &QuadNum, b: &QuadNum) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let (fa, fb) = (a.to_f64(), b.to_f64());
    if (fa - fb).abs() > 1e-9 * (1.0 + fa.abs().max(fb.abs())) {
        return fa.partial_cmp(&fb).unwrap_or_else(|| a.cmp_exact(b));
    }
    a.cmp_exact(b)
}
