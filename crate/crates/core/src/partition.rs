//! The beta-adic partition of `[0, 1]`, its building blocks, and the check that
//! `P^{|k|}` maps every block onto the global Bernoulli function.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bernoulli::BernoulliTable;
use crate::error::{Error, Result};
use crate::field::{BetaParams, QuadNum};
use crate::piecewise::PiecewisePoly;
use crate::transfer::apply_transfer;

/// A point `t_k^j` of the partition.
///
/// `k_word` has letters in `{1, 2}`; `j_word[i] < a0` under `k = 1` and `< a1`
/// under `k = 2`. Only the right endpoint `1 = t_2^{a1}` uses the upper bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPoint {
    pub k_word: Vec<u8>,
    pub j_word: Vec<u32>,
    pub value: QuadNum,
}

impl PartitionPoint {
    /// `|k|`, the sum of the letters.
    pub fn depth(&self) -> u32 {
        self.k_word.iter().map(|&k| k as u32).sum()
    }

    /// `beta^{-|k|}`, the distance to the successor point.
    pub fn gap(&self) -> QuadNum {
        QuadNum::beta_pow(self.value.params(), -(self.depth() as i64))
    }

    fn word_label(&self) -> String {
        let k: Vec<String> = self.k_word.iter().map(u8::to_string).collect();
        let j: Vec<String> = self.j_word.iter().map(u32::to_string).collect();
        format!("k=({}) j=({})", k.join(","), j.join(","))
    }
}

/// `t_k^j = t_{k1}^{j1} + beta^{-k1} t_{k2..}^{j2..}` with first-layer points
/// `t_1^j = j/beta` and `t_2^j = a0/beta + j/beta^2`.
pub fn point_value(params: BetaParams, k_word: &[u8], j_word: &[u32]) -> Result<QuadNum> {
    if k_word.len() != j_word.len() || k_word.is_empty() {
        return Err(Error::InvalidArgument("k- and j-words must be non-empty and of equal length".into()));
    }
    let mut acc = QuadNum::zero(params);
    for (&k, &j) in k_word.iter().zip(j_word).rev() {
        let (layer, scale) = match k {
            1 => (
                QuadNum::from_int(j as i64, params) * QuadNum::beta_inv(params),
                QuadNum::beta_inv(params),
            ),
            2 => (
                &(QuadNum::from_int(params.a0() as i64, params) * QuadNum::beta_inv(params))
                    + &(QuadNum::from_int(j as i64, params) * QuadNum::beta_pow(params, -2)),
                QuadNum::beta_pow(params, -2),
            ),
            _ => return Err(Error::InvalidArgument(format!("k-letter {k} not in {{1, 2}}"))),
        };
        acc = &layer + &(&scale * &acc);
    }
    Ok(acc)
}

/// Gap counts by `|k|`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GapHistogram {
    pub counts: BTreeMap<u32, usize>,
}

/// Level-`M` partition: every gap has length `beta^-M` or `beta^-(M+1)`.
#[derive(Clone, Debug)]
pub struct LevelPartition {
    pub params: BetaParams,
    pub m: u32,
    /// Left endpoints of the gaps in increasing order, followed by the point `1`.
    pub points: Vec<PartitionPoint>,
}

impl LevelPartition {
    pub fn gap_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Left endpoints of the gaps.
    pub fn gaps(&self) -> &[PartitionPoint] {
        &self.points[..self.points.len() - 1]
    }

    pub fn histogram(&self) -> GapHistogram {
        let mut counts = BTreeMap::new();
        for p in self.gaps() {
            *counts.entry(p.depth()).or_insert(0) += 1;
        }
        GapHistogram { counts }
    }

    /// Exact check of the gap law: consecutive points differ by `beta^-|k|`,
    /// `|k|` is `M` or `M+1`, and the gaps sum to 1.
    pub fn verify_gap_law(&self) -> Result<GapHistogram> {
        let params = self.params;
        let mut total = QuadNum::zero(params);
        for w in self.points.windows(2) {
            let gap = w[0].gap();
            let d = w[0].depth();
            if d != self.m && d != self.m + 1 {
                return Err(Error::Verification(format!(
                    "gap at {} has depth {d}, expected {} or {}",
                    w[0].word_label(),
                    self.m,
                    self.m + 1
                )));
            }
            if &w[1].value - &w[0].value != gap {
                return Err(Error::Verification(format!(
                    "gap at {} differs from beta^-{d}",
                    w[0].word_label()
                )));
            }
            total = &total + &gap;
        }
        if total != QuadNum::one(params) {
            return Err(Error::Verification(format!("gaps sum to {total}, not 1")));
        }
        Ok(self.histogram())
    }
}

/// First-layer children of a gap: `(letter, index)` in increasing order.
fn first_layer(params: BetaParams) -> Vec<(u8, u32)> {
    (0..params.a0())
        .map(|j| (1, j))
        .chain((0..params.a1()).map(|j| (2, j)))
        .collect()
}

/// Refines every gap with `|k| < M` by a scaled copy of the first layer.
pub fn refine_to_level(params: BetaParams, m: u32) -> Result<LevelPartition> {
    if m == 0 {
        return Err(Error::InvalidArgument("level M must be at least 1".into()));
    }
    let layer: Vec<(u8, u32, QuadNum)> = first_layer(params)
        .into_iter()
        .map(|(k, j)| Ok((k, j, point_value(params, &[k], &[j])?)))
        .collect::<Result<_>>()?;
    let gaps: Vec<QuadNum> = (0..=m as i64 + 1).map(|d| QuadNum::beta_pow(params, -d)).collect();
    let mut points = Vec::new();
    let root = PartitionPoint {
        k_word: Vec::new(),
        j_word: Vec::new(),
        value: QuadNum::zero(params),
    };
    // depth-first, children pushed right to left, so leaves come out sorted
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let depth = node.depth();
        if depth >= m {
            points.push(node);
            continue;
        }
        for (k, j, t) in layer.iter().rev() {
            let mut child = node.clone();
            child.k_word.push(*k);
            child.j_word.push(*j);
            child.value = &node.value + &(&gaps[depth as usize] * t);
            stack.push(child);
        }
    }
    points.push(PartitionPoint {
        k_word: vec![2],
        j_word: vec![params.a1()],
        value: QuadNum::one(params),
    });
    Ok(LevelPartition { params, m, points })
}

/// `beta^{|k|} B_s(beta^{|k|} (x - t))` on the gap `[t, t + beta^{-|k|}]`.
#[derive(Clone, Debug)]
pub struct BuildingBlock {
    pub s: usize,
    pub point: PartitionPoint,
    pub func: PiecewisePoly,
}

/// The block for an arbitrary word (not necessarily a gap of some partition).
pub fn block_for_point(point: &PartitionPoint, s: usize, table: &BernoulliTable) -> Result<BuildingBlock> {
    let params = point.value.params();
    let d = point.depth() as i64;
    let scale = QuadNum::beta_pow(params, d);
    let shift = -(&scale * &point.value);
    let poly = table
        .polynomial(s, params)
        .compose_affine(&scale, &shift)
        .scale(&scale);
    let end = &point.value + &point.gap();
    Ok(BuildingBlock {
        s,
        point: point.clone(),
        func: PiecewisePoly::supported_on(&point.value, &end, poly)?,
    })
}

pub fn building_block(partition: &LevelPartition, index: usize, s: usize) -> Result<BuildingBlock> {
    if index >= partition.gap_count() {
        return Err(Error::InvalidArgument(format!(
            "gap index {index} out of range (0..{})",
            partition.gap_count()
        )));
    }
    if s > 8 {
        return Err(Error::InvalidArgument(format!("block order s = {s} exceeds 8")));
    }
    block_for_point(&partition.points[index], s, &BernoulliTable::new(s)?)
}

/// One failed identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFailure {
    pub k_word: Vec<u8>,
    pub j_word: Vec<u32>,
    pub s: usize,
    pub identity: &'static str,
}

#[derive(Clone, Debug, Default)]
pub struct BlockReport {
    pub gaps: usize,
    pub checks: usize,
    pub intermediate_checks: usize,
    pub failures: Vec<BlockFailure>,
}

impl BlockReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For every gap of the level-`M` partition and `s <= s_max`, checks
/// `P^{|k|} G = B_s on [0, 1]`; for words starting with `2` also checks
/// `P G_{(2, tail)} = G_{(1, tail)}`.
pub fn building_block_check(params: BetaParams, m: u32, s_max: usize) -> Result<BlockReport> {
    if m > 6 || s_max > 4 {
        return Err(Error::InvalidArgument(format!(
            "building-block check limited to M <= 6 and s <= 4 (got M = {m}, s = {s_max})"
        )));
    }
    let partition = refine_to_level(params, m)?;
    let table = BernoulliTable::new(s_max)?;
    let targets: Vec<PiecewisePoly> = (0..=s_max)
        .map(|s| PiecewisePoly::from_poly(table.polynomial(s, params)))
        .collect();
    let results = partition
        .gaps()
        .par_iter()
        .map(|point| -> Result<(usize, usize, Vec<BlockFailure>)> {
            let mut failures = Vec::new();
            let mut inter = 0;
            let fail = |s, identity| BlockFailure {
                k_word: point.k_word.clone(),
                j_word: point.j_word.clone(),
                s,
                identity,
            };
            for (s, target) in targets.iter().enumerate() {
                let block = block_for_point(point, s, &table)?;
                let mut g = apply_transfer(&block.func)?;
                if point.k_word[0] == 2 {
                    inter += 1;
                    let mut k_word = point.k_word.clone();
                    k_word[0] = 1;
                    let shifted = PartitionPoint {
                        value: point_value(params, &k_word, &point.j_word)?,
                        k_word,
                        j_word: point.j_word.clone(),
                    };
                    if !g.equal_ae(&block_for_point(&shifted, s, &table)?.func) {
                        failures.push(fail(s, "P G_(2,..) = G_(1,..)"));
                    }
                }
                for _ in 1..point.depth() {
                    g = apply_transfer(&g)?;
                }
                if !g.equal_ae(target) {
                    failures.push(fail(s, "P^|k| G = B_s"));
                }
            }
            Ok((targets.len(), inter, failures))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = BlockReport {
        gaps: partition.gap_count(),
        ..Default::default()
    };
    for (c, i, f) in results {
        report.checks += c;
        report.intermediate_checks += i;
        report.failures.extend(f);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat_int;
    use crate::poly::Polynomial;

    #[test]
    fn first_layer_points() {
        let p = BetaParams::new(3, 2).unwrap();
        let part = refine_to_level(p, 1).unwrap();
        let binv = QuadNum::beta_inv(p);
        let b2 = QuadNum::beta_pow(p, -2);
        let expected: Vec<QuadNum> = vec![
            QuadNum::zero(p),
            binv.clone(),
            binv.scale(&rat_int(2)),
            binv.scale(&rat_int(3)),
            &binv.scale(&rat_int(3)) + &b2,
            QuadNum::one(p),
        ];
        let got: Vec<QuadNum> = part.points.iter().map(|pt| pt.value.clone()).collect();
        assert_eq!(got, expected);
        part.verify_gap_law().unwrap();
    }

    #[test]
    fn golden_level_two() {
        let g = BetaParams::golden();
        let part = refine_to_level(g, 2).unwrap();
        let got: Vec<QuadNum> = part.points.iter().map(|pt| pt.value.clone()).collect();
        assert_eq!(
            got,
            vec![
                QuadNum::zero(g),
                QuadNum::beta_pow(g, -2),
                QuadNum::beta_inv(g),
                QuadNum::one(g)
            ]
        );
        let gaps: Vec<QuadNum> = part.gaps().iter().map(PartitionPoint::gap).collect();
        assert_eq!(
            gaps,
            vec![QuadNum::beta_pow(g, -2), QuadNum::beta_pow(g, -3), QuadNum::beta_pow(g, -2)]
        );
    }

    #[test]
    fn gap_law_small_levels() {
        for params in BetaParams::all_up_to(3) {
            for m in 1..=5 {
                let h = refine_to_level(params, m).unwrap().verify_gap_law().unwrap();
                assert!(h.counts.keys().all(|&d| d == m || d == m + 1));
            }
        }
    }

    #[test]
    fn incremental_values_match_recursion() {
        let p = BetaParams::new(3, 2).unwrap();
        for pt in refine_to_level(p, 4).unwrap().gaps() {
            assert_eq!(pt.value, point_value(p, &pt.k_word, &pt.j_word).unwrap());
        }
    }

    #[test]
    fn point_recursions() {
        let p = BetaParams::new(2, 2).unwrap();
        let binv = QuadNum::beta_inv(p);
        let a0b = QuadNum::from_int(2, p) * binv.clone();
        for part in [refine_to_level(p, 4).unwrap()] {
            for pt in part.gaps().iter().filter(|pt| pt.k_word.len() > 1) {
                let tail = point_value(p, &pt.k_word[1..], &pt.j_word[1..]).unwrap();
                let j1 = QuadNum::from_int(pt.j_word[0] as i64, p);
                if pt.k_word[0] == 1 {
                    assert_eq!(pt.value, &(&j1 * &binv) + &(&binv * &tail));
                } else {
                    let mut kw = pt.k_word.clone();
                    kw[0] = 1;
                    let shifted = point_value(p, &kw, &pt.j_word).unwrap();
                    assert_eq!(pt.value, &a0b + &(&binv * &shifted));
                }
            }
        }
    }

    #[test]
    fn block_examples() {
        let g = BetaParams::golden();
        let part = refine_to_level(g, 2).unwrap();
        let b0 = building_block(&part, 1, 0).unwrap();
        assert_eq!(b0.func.integrate(), QuadNum::one(g));
        let b1 = building_block(&part, 0, 1).unwrap();
        assert!(b1.func.integrate().is_zero());
        // beta^2 (beta^2 x - 1/2) on [0, beta^-2]
        let b2 = QuadNum::beta_pow(g, 2);
        let poly = Polynomial::linear(-b2.scale(&crate::field::rat(1, 2)), &b2 * &b2);
        let expected = PiecewisePoly::supported_on(&QuadNum::zero(g), &QuadNum::beta_pow(g, -2), poly).unwrap();
        assert!(b1.func.equal_ae(&expected));
        assert!(building_block(&part, 3, 0).is_err());
        assert!(building_block(&part, 0, 9).is_err());
    }

    #[test]
    fn blocks_golden_small() {
        let g = BetaParams::golden();
        let r = building_block_check(g, 1, 2).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.gaps, 2);
        assert_eq!(r.intermediate_checks, 3);
        let r = building_block_check(g, 4, 3).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn check_detects_a_broken_block() {
        // a block placed off its gap does not map onto B_s
        let g = BetaParams::new(2, 1).unwrap();
        let pt = PartitionPoint {
            k_word: vec![1],
            j_word: vec![0],
            value: QuadNum::from_ratio(1, 100, g),
        };
        let table = BernoulliTable::new(1).unwrap();
        let block = block_for_point(&pt, 1, &table).unwrap();
        let image = apply_transfer(&block.func).unwrap();
        let b1 = PiecewisePoly::from_poly(table.polynomial(1, g));
        assert!(!image.equal_ae(&b1));
        // indicator blocks of length 1/beta map to 1 wherever they sit
        let b0 = block_for_point(&pt, 0, &table).unwrap();
        assert!(apply_transfer(&b0.func).unwrap().equal_ae(&PiecewisePoly::constant(QuadNum::one(g))));
    }
}
