//! Lacunary sequences, nested `μ`-lacunary decompositions, rank intervals
//! and poles.
//!
//! A sequence `v_1, v_2, …` is lacunary with gap `λ ∈ (0,1)` about a pole
//! `v_∞` when `|v_{i+1} − v_∞| < λ·|v_i − v_∞|` for every consecutive pair.
//! A `μ`-lacunary set is built in `μ` stages: every stage inserts, inside each
//! adjacent interval of the current set, a lacunary group about a pole lying
//! in that interval. Groups may sit on both sides of their pole (two monotone
//! lacunary sequences sharing a pole), which is the shape produced by
//! completion.
//!
//! All comparisons are exact IEEE comparisons; callers that want tolerance
//! must snap their data first.

mod complete;

pub use complete::{
    complete_decomposition, complete_one_sided, completion_order_factor, is_complete_decomposition, random_complete,
    regular_complete, CompleteLacunarySpec, RandomCompleteParams, Sides,
};

use std::collections::{BTreeMap, HashSet};
use std::ops::Bound::Excluded;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};

/// Default slope domain of operator-facing direction sets.
pub const UNIT_DOMAIN: (f64, f64) = (0.0, 1.0);

/// A finite set of directions stored in angle form: `s` stands for the unit
/// vector `e_s = (cos 2πs, sin 2πs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectionSet(Vec<f64>);

impl DirectionSet {
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        for &s in &angles {
            ensure_finite("direction angle", s)?;
        }
        Ok(Self(angles))
    }

    /// Converts slopes `α` (direction `u_α = (1, α)`) to angle form
    /// `s = arctan(α) / 2π`.
    pub fn from_slopes(slopes: &[f64]) -> Result<Self> {
        let mut out = Vec::with_capacity(slopes.len());
        for &a in slopes {
            ensure_finite("slope", a)?;
            out.push(slope_to_angle(a));
        }
        Ok(Self(out))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Unit vectors `e_s` for every member.
    pub fn unit_vectors(&self) -> Vec<(f64, f64)> {
        self.0.iter().map(|&s| unit_vector(s)).collect()
    }

    /// True when both sets describe the same lines through the origin,
    /// i.e. agree as multisets modulo `½` in angle form.
    pub fn same_lines(&self, other: &DirectionSet, tol: f64) -> bool {
        let canon = |v: &[f64]| {
            let mut c: Vec<f64> = v.iter().map(|s| s.rem_euclid(0.5)).collect();
            c.sort_by(f64::total_cmp);
            c
        };
        let (a, b) = (canon(&self.0), canon(&other.0));
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                let d = (x - y).abs();
                d <= tol || (0.5 - d).abs() <= tol
            })
    }
}

pub fn slope_to_angle(alpha: f64) -> f64 {
    alpha.atan() / std::f64::consts::TAU
}

pub fn unit_vector(s: f64) -> (f64, f64) {
    let t = std::f64::consts::TAU * s;
    (t.cos(), t.sin())
}

/// Directions orthogonal to the members of `set`: `s ↦ s + ¼ (mod 1)`.
pub fn perpendicular(set: &DirectionSet) -> DirectionSet {
    DirectionSet(set.0.iter().map(|s| (s + 0.25).rem_euclid(1.0)).collect())
}

fn check_gap(gap: f64) -> Result<()> {
    if gap.is_finite() && gap > 0.0 && gap < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("gap must lie in (0,1), got {gap}")))
    }
}

/// Exact test of `|v_{i+1} − pole| < gap·|v_i − pole|` for all consecutive
/// pairs. A single point is vacuously lacunary.
pub fn check_lacunary(points: &[f64], pole: f64, gap: f64) -> Result<bool> {
    check_gap(gap)?;
    ensure_finite("pole", pole)?;
    if points.is_empty() {
        return Err(invalid("points must be nonempty"));
    }
    for &p in points {
        ensure_finite("point", p)?;
    }
    Ok(points
        .windows(2)
        .all(|w| (w[1] - pole).abs() < gap * (w[0] - pole).abs()))
}

/// Open set of poles `p` with `|w − p| < gap·|u − p|`: the interval between
/// `(w − gap·u)/(1 − gap)` and `(w + gap·u)/(1 + gap)`, which contains `w`.
fn apollonius(u: f64, w: f64, gap: f64) -> (f64, f64) {
    let p1 = (w - gap * u) / (1.0 - gap);
    let p2 = (w + gap * u) / (1.0 + gap);
    (p1.min(p2), p1.max(p2))
}

/// Feasible poles for an ordered sequence as an open interval, or `None`
/// when the intersection of the pairwise constraints is empty. A single point
/// admits every pole, reported as the whole line.
pub fn feasible_poles(points: &[f64], gap: f64) -> Result<Option<(f64, f64)>> {
    check_gap(gap)?;
    for &p in points {
        ensure_finite("point", p)?;
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for w in points.windows(2) {
        let (a, b) = apollonius(w[0], w[1], gap);
        lo = lo.max(a);
        hi = hi.min(b);
    }
    Ok((lo < hi).then_some((lo, hi)))
}

fn monotone(points: &[f64]) -> bool {
    points.windows(2).all(|w| w[0] < w[1]) || points.windows(2).all(|w| w[0] > w[1])
}

/// Finds a pole witnessing lacunarity of `points` (taken in the given order),
/// preferring the feasible pole nearest to the last point.
///
/// The last point itself is a valid pole whenever the prefix converges to it;
/// otherwise the nearest feasible point of the open pole interval is probed
/// from the inside and confirmed with [`check_lacunary`].
pub fn infer_pole(points: &[f64], gap: f64) -> Result<Option<f64>> {
    if points.is_empty() {
        return Err(invalid("points must be nonempty"));
    }
    if !monotone(points) {
        return Err(invalid("points must be strictly monotone"));
    }
    let last = points[points.len() - 1];
    if points.len() == 1 {
        return Ok(Some(last));
    }
    let Some((lo, hi)) = feasible_poles(points, gap)? else {
        return Ok(None);
    };
    let mut candidates = Vec::with_capacity(8);
    if lo < last && last < hi {
        candidates.push(last);
    }
    let width = hi - lo;
    let nearest = last.clamp(lo, hi);
    for eps in [1e-9, 1e-6, 1e-3, 0.25, 0.5] {
        let inward = if nearest <= lo {
            lo + eps * width
        } else if nearest >= hi {
            hi - eps * width
        } else {
            nearest
        };
        candidates.push(inward);
    }
    for p in candidates {
        if p.is_finite() && check_lacunary(points, p, gap)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// A finite lacunary sequence with its pole and gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunarySequence {
    pub points: Vec<f64>,
    pub pole: f64,
    pub gap: f64,
}

impl LacunarySequence {
    pub fn new(points: Vec<f64>, pole: f64, gap: f64) -> Result<Self> {
        if !check_lacunary(&points, pole, gap)? {
            return Err(invalid("points are not lacunary about the pole with this gap"));
        }
        Ok(Self { points, pole, gap })
    }
}

/// Maximal open intervals of `domain` that miss `set`, left to right.
/// Degenerate intervals (a point of `set` on the domain boundary) are dropped.
pub fn adjacent_intervals(set: &[f64], domain: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (a, b) = domain;
    ensure_finite("domain start", a)?;
    ensure_finite("domain end", b)?;
    if a >= b {
        return Err(invalid("domain must satisfy start < end"));
    }
    let mut pts: Vec<f64> = set.to_vec();
    for &p in &pts {
        ensure_finite("point", p)?;
        if p < a || p > b {
            return Err(invalid(format!("point {p} lies outside the domain [{a}, {b}]")));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut left = a;
    for p in pts {
        if p > left {
            out.push((left, p));
        }
        left = p;
    }
    if b > left {
        out.push((left, b));
    }
    Ok(out)
}

/// True when every point below `pole` (taken in increasing order) and every
/// point above it (taken in decreasing order) is lacunary toward `pole`.
/// At most one point may coincide with the pole.
pub fn two_sided_lacunary(sorted: &[f64], pole: f64, gap: f64) -> bool {
    let split = sorted.partition_point(|&v| v < pole);
    let below = &sorted[..split];
    let mut above_start = split;
    while above_start < sorted.len() && sorted[above_start] == pole {
        above_start += 1;
    }
    if above_start - split > 1 {
        return false;
    }
    let above = &sorted[above_start..];
    let below_ok = below
        .windows(2)
        .all(|w| (w[1] - pole).abs() < gap * (w[0] - pole).abs());
    let above_ok = above
        .windows(2)
        .all(|w| (w[0] - pole).abs() < gap * (w[1] - pole).abs());
    below_ok && above_ok
}

/// Pole for a group of points inserted into the open interval `within`.
///
/// Tries every split of the sorted group into a lower and an upper branch,
/// intersects the closed-form feasibility intervals of both branches with the
/// gap between them and with `within`, and confirms each candidate exactly.
/// One-sided placements (pole at an extreme point) are tried first.
pub fn group_pole(sorted: &[f64], gap: f64, within: (f64, f64)) -> Result<Option<f64>> {
    check_gap(gap)?;
    if sorted.is_empty() {
        return Err(invalid("group must be nonempty"));
    }
    let n = sorted.len();
    let mut splits: Vec<usize> = vec![n, 0];
    splits.extend(1..n);
    splits.dedup();
    for s in splits {
        let mut lo = within.0;
        let mut hi = within.1;
        if s > 0 {
            lo = lo.max(sorted[s - 1]);
        }
        if s < n {
            hi = hi.min(sorted[s]);
        }
        for w in sorted[..s].windows(2) {
            let (a, b) = apollonius(w[0], w[1], gap);
            lo = lo.max(a);
            hi = hi.min(b);
        }
        for w in sorted[s..].windows(2) {
            let (a, b) = apollonius(w[1], w[0], gap);
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if lo > hi {
            continue;
        }
        let mut candidates = Vec::with_capacity(6);
        if s > 0 {
            candidates.push(sorted[s - 1]);
        }
        if s < n {
            candidates.push(sorted[s]);
        }
        let width = hi - lo;
        candidates.extend([lo + 1e-9 * width, hi - 1e-9 * width, 0.5 * (lo + hi)]);
        for p in candidates {
            if p >= lo && p <= hi && p > within.0 && p < within.1 && two_sided_lacunary(sorted, p, gap) {
                return Ok(Some(p));
            }
        }
    }
    Ok(None)
}

/// An adjacent interval of some stage `Ω_k` together with the first pole
/// placed strictly inside it during construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankInterval {
    pub lo: f64,
    pub hi: f64,
    /// Smallest `k` for which the interval is adjacent for `Ω_k`.
    pub rank: usize,
    pub pole: Option<f64>,
}

impl RankInterval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_interval(&self, other: &RankInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn disjoint(&self, other: &RankInterval) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }
}

/// Points inserted at one stage inside one adjacent interval, with their pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedGroup {
    pub points: Vec<f64>,
    pub pole: f64,
    pub interval: (f64, f64),
}

/// A validated chain `Ω_1 ⊂ … ⊂ Ω_μ` with its rank intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunaryDecomposition {
    pub gap: f64,
    pub chain: Vec<Vec<f64>>,
    pub rank_intervals: Vec<RankInterval>,
    #[serde(default = "unit_domain")]
    pub domain: (f64, f64),
    #[serde(default)]
    pub groups: Vec<Vec<AddedGroup>>,
}

fn unit_domain() -> (f64, f64) {
    UNIT_DOMAIN
}

impl LacunaryDecomposition {
    /// `μ`, the number of stages.
    pub fn order(&self) -> usize {
        self.chain.len()
    }

    pub fn final_set(&self) -> &[f64] {
        self.chain.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Adjacent intervals of the final stage (the rank-`μ` intervals).
    pub fn top_intervals(&self) -> Vec<(f64, f64)> {
        adjacent_intervals(self.final_set(), self.domain).unwrap_or_default()
    }

    /// Rank intervals of rank at most `μ − 1` that carry a pole.
    pub fn poled_intervals(&self) -> impl Iterator<Item = (&RankInterval, f64)> + '_ {
        let mu = self.order();
        self.rank_intervals
            .iter()
            .filter(move |j| j.rank + 1 <= mu)
            .filter_map(|j| j.pole.map(|p| (j, p)))
    }

    /// Checks the rank-interval nesting laws: equal ranks are disjoint and a
    /// higher-rank interval is either inside or disjoint from a lower one.
    pub fn check_nesting(&self) -> Result<()> {
        let iv = &self.rank_intervals;
        for (i, a) in iv.iter().enumerate() {
            for b in &iv[i + 1..] {
                let ok = if a.rank == b.rank {
                    a.disjoint(b)
                } else {
                    let (lo, hi) = if a.rank < b.rank { (a, b) } else { (b, a) };
                    lo.contains_interval(hi) || lo.disjoint(hi)
                };
                if !ok {
                    return Err(Error::Validation {
                        rank: a.rank.max(b.rank),
                        lo: a.lo,
                        hi: a.hi,
                        reason: format!("nesting violated against ({}, {})", b.lo, b.hi),
                    });
                }
            }
        }
        Ok(())
    }

    /// Re-runs full validation, recomputing groups and rank intervals.
    pub fn revalidate(&self) -> Result<LacunaryDecomposition> {
        build_decomposition_in(&self.chain, self.gap, self.domain)
    }
}

fn sorted_unique(v: &[f64]) -> Result<Vec<f64>> {
    for &x in v {
        ensure_finite("point", x)?;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    Ok(s)
}

/// Smallest domain containing `[0,1]` and every point of `chain`.
pub fn default_domain(chain: &[Vec<f64>]) -> (f64, f64) {
    let mut lo = UNIT_DOMAIN.0;
    let mut hi = UNIT_DOMAIN.1;
    for &p in chain.iter().flatten() {
        if p.is_finite() {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    (lo, hi)
}

/// Validates a user-supplied chain over the default domain.
pub fn build_decomposition(chain: &[Vec<f64>], gap: f64) -> Result<LacunaryDecomposition> {
    build_decomposition_in(chain, gap, default_domain(chain))
}

/// Validates `chain` inside `domain`, inferring one pole per added group.
pub fn build_decomposition_in(
    chain: &[Vec<f64>],
    gap: f64,
    domain: (f64, f64),
) -> Result<LacunaryDecomposition> {
    check_gap(gap)?;
    let stages: Vec<Vec<f64>> = chain.iter().map(|s| sorted_unique(s)).collect::<Result<_>>()?;
    let mut groups: Vec<Vec<AddedGroup>> = Vec::with_capacity(stages.len());
    let mut previous: Vec<f64> = Vec::new();
    for (k, stage) in stages.iter().enumerate() {
        let rank = k + 1;
        if !previous.iter().all(|p| stage.binary_search_by(|x| x.total_cmp(p)).is_ok()) {
            return Err(invalid(format!("chain is not nested at stage {rank}")));
        }
        let added: Vec<f64> = stage
            .iter()
            .copied()
            .filter(|p| previous.binary_search_by(|x| x.total_cmp(p)).is_err())
            .collect();
        let mut stage_groups = Vec::new();
        for (lo, hi) in adjacent_intervals(&previous, domain)? {
            let inside: Vec<f64> = added.iter().copied().filter(|&p| p > lo && p < hi).collect();
            if inside.is_empty() {
                continue;
            }
            let within = (lo, hi);
            let widened = if lo == domain.0 || hi == domain.1 {
                // boundary gaps may carry their pole on the domain edge
                (
                    if lo == domain.0 { f64::NEG_INFINITY } else { lo },
                    if hi == domain.1 { f64::INFINITY } else { hi },
                )
            } else {
                within
            };
            let pole = group_pole(&inside, gap, widened)?.ok_or_else(|| Error::Validation {
                rank,
                lo,
                hi,
                reason: format!("no pole makes {} added points lacunary with gap {gap}", inside.len()),
            })?;
            stage_groups.push(AddedGroup {
                points: inside,
                pole,
                interval: within,
            });
        }
        groups.push(stage_groups);
        previous = stage.clone();
    }
    let rank_intervals = rank_intervals_of(&stages, &groups, domain)?;
    Ok(LacunaryDecomposition {
        gap,
        chain: stages,
        rank_intervals,
        domain,
        groups,
    })
}

/// Validates `chain` with the poles fixed by the caller (one list per stage,
/// aligned with the groups in left-to-right order).
pub(crate) fn build_with_groups(
    stages: Vec<Vec<f64>>,
    groups: Vec<Vec<AddedGroup>>,
    gap: f64,
    domain: (f64, f64),
) -> Result<LacunaryDecomposition> {
    for (k, gs) in groups.iter().enumerate() {
        for g in gs {
            if !two_sided_lacunary(&g.points, g.pole, gap) {
                return Err(Error::Validation {
                    rank: k + 1,
                    lo: g.interval.0,
                    hi: g.interval.1,
                    reason: "group is not lacunary about its recorded pole".into(),
                });
            }
        }
    }
    let rank_intervals = rank_intervals_of(&stages, &groups, domain)?;
    Ok(LacunaryDecomposition {
        gap,
        chain: stages,
        rank_intervals,
        domain,
        groups,
    })
}

fn rank_intervals_of(
    stages: &[Vec<f64>],
    groups: &[Vec<AddedGroup>],
    domain: (f64, f64),
) -> Result<Vec<RankInterval>> {
    // pole value -> order of first appearance
    let mut first_seen: BTreeMap<OrdF64, usize> = BTreeMap::new();
    for (idx, g) in groups.iter().flatten().enumerate() {
        first_seen.entry(OrdF64(g.pole)).or_insert(idx);
    }
    let mut out: Vec<RankInterval> = Vec::new();
    let mut seen = HashSet::new();
    for (k, stage) in stages.iter().enumerate() {
        for (lo, hi) in adjacent_intervals(stage, domain)? {
            if !seen.insert((lo.to_bits(), hi.to_bits())) {
                continue;
            }
            let pole = first_seen
                .range((Excluded(OrdF64(lo)), Excluded(OrdF64(hi))))
                .min_by_key(|(_, &idx)| idx)
                .map(|(p, _)| p.0);
            out.push(RankInterval {
                lo,
                hi,
                rank: k + 1,
                pole,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Bisection decomposition: `Ω_1 = {min, max}`, and each later stage adds the
/// lower median of the interior points of every adjacent interval. The order
/// is `1 + bitlen(N − 2) ≤ ⌊log₂N⌋ + 2`.
pub fn binary_decomposition(points: &[f64]) -> Result<LacunaryDecomposition> {
    let sorted = sorted_unique(points)?;
    if sorted.is_empty() {
        return Err(invalid("points must be nonempty"));
    }
    let chain_domain = default_domain(std::slice::from_ref(&sorted));
    if sorted.len() <= 2 {
        return build_decomposition_in(&[sorted], 0.5, chain_domain);
    }
    let n = sorted.len();
    let mut chosen = vec![false; n];
    chosen[0] = true;
    chosen[n - 1] = true;
    let mut ranges = vec![(0usize, n - 1)];
    let mut stages = vec![vec![sorted[0], sorted[n - 1]]];
    let mut groups: Vec<Vec<AddedGroup>> = vec![vec![AddedGroup {
        points: vec![sorted[0], sorted[n - 1]],
        pole: sorted[n - 1],
        interval: chain_domain,
    }]];
    while !ranges.is_empty() {
        let mut next = Vec::new();
        let mut stage_groups = Vec::new();
        for (lo, hi) in ranges {
            let interior = hi - lo - 1;
            if interior == 0 {
                continue;
            }
            let mid = lo + 1 + (interior - 1) / 2;
            chosen[mid] = true;
            stage_groups.push(AddedGroup {
                points: vec![sorted[mid]],
                pole: sorted[mid],
                interval: (sorted[lo], sorted[hi]),
            });
            next.push((lo, mid));
            next.push((mid, hi));
        }
        if stage_groups.is_empty() {
            break;
        }
        stages.push(
            sorted
                .iter()
                .zip(&chosen)
                .filter_map(|(&v, &c)| c.then_some(v))
                .collect(),
        );
        groups.push(stage_groups);
        ranges = next;
    }
    build_with_groups(stages, groups, 0.5, chain_domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lacunary_examples() {
        assert!(check_lacunary(&[1.0, 0.5, 0.25, 0.125], 0.0, 0.6).unwrap());
        assert!(!check_lacunary(&[1.0, 0.5, 0.25], 0.0, 0.5).unwrap());
        assert!(check_lacunary(&[0.9, 0.7, 0.62], 0.6, 0.5).unwrap());
    }

    #[test]
    fn lacunary_rejects_bad_arguments() {
        assert!(check_lacunary(&[1.0, f64::NAN], 0.0, 0.5).is_err());
        assert!(check_lacunary(&[1.0], 0.0, 1.0).is_err());
        assert!(check_lacunary(&[], 0.0, 0.5).is_err());
        // pole on an interior point breaks the strict decrease
        assert!(!check_lacunary(&[1.0, 0.5, 0.25], 0.5, 0.9).unwrap());
        // pole on the last point is fine
        assert!(check_lacunary(&[1.0, 0.5, 0.25], 0.25, 0.9).unwrap());
    }

    #[test]
    fn infer_pole_examples() {
        let p = infer_pole(&[1.0, 0.5, 0.25, 0.125], 0.6).unwrap().unwrap();
        assert!(check_lacunary(&[1.0, 0.5, 0.25, 0.125], p, 0.6).unwrap());
        assert!(check_lacunary(&[1.0, 0.5, 0.25, 0.125], 0.0, 0.6).unwrap());
        assert_eq!(infer_pole(&[0.5], 0.5).unwrap(), Some(0.5));
        assert!(infer_pole(&[1.0, 0.2, 0.6], 0.5).is_err());
    }

    #[test]
    fn infer_pole_slow_sequence_only_admits_interior_poles() {
        let pts = [1.0, 0.9, 0.8];
        // no pole at or below the limit works
        for i in 0..=8000 {
            let p = 0.8 - i as f64 * 1e-4;
            assert!(!check_lacunary(&pts, p, 0.5).unwrap(), "p = {p}");
        }
        // the exact feasible set is (0.8, 0.8333…)
        let (lo, hi) = feasible_poles(&pts, 0.5).unwrap().unwrap();
        assert!((lo - 0.8).abs() < 1e-12 && (hi - 0.8 / 0.96).abs() < 1e-2);
        let p = infer_pole(&pts, 0.5).unwrap().unwrap();
        assert!(p > 0.8 && p < hi);
        assert!(check_lacunary(&pts, p, 0.5).unwrap());
    }

    #[test]
    fn adjacent_interval_examples() {
        assert_eq!(adjacent_intervals(&[0.5], (0.0, 1.0)).unwrap(), vec![(0.0, 0.5), (0.5, 1.0)]);
        assert_eq!(
            adjacent_intervals(&[0.2, 0.7], (0.0, 1.0)).unwrap(),
            vec![(0.0, 0.2), (0.2, 0.7), (0.7, 1.0)]
        );
        assert_eq!(adjacent_intervals(&[], (0.0, 1.0)).unwrap(), vec![(0.0, 1.0)]);
        assert_eq!(adjacent_intervals(&[0.0, 1.0], (0.0, 1.0)).unwrap(), vec![(0.0, 1.0)]);
        assert!(adjacent_intervals(&[2.0], (0.0, 1.0)).is_err());
    }

    #[test]
    fn build_examples() {
        let d = build_decomposition(&[vec![0.0, 1.0]], 0.5).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.rank_intervals.len(), 1);
        assert_eq!((d.rank_intervals[0].lo, d.rank_intervals[0].hi), (0.0, 1.0));

        let d = build_decomposition(&[vec![0.0, 1.0], vec![0.0, 0.5, 1.0]], 0.5).unwrap();
        assert_eq!(d.order(), 2);
        assert_eq!(d.rank_intervals[0].pole, Some(0.5));

        let d = build_decomposition(
            &[vec![0.0, 1.0], vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 0.5, 0.75, 1.0]],
            0.5,
        )
        .unwrap();
        assert_eq!(d.order(), 3);
        d.check_nesting().unwrap();
        let rank2: Vec<_> = d.rank_intervals.iter().filter(|j| j.rank == 2).collect();
        assert_eq!(rank2.len(), 2);
        assert_eq!(rank2[0].pole, Some(0.25));
        assert_eq!(rank2[1].pole, Some(0.75));
    }

    #[test]
    fn build_rejects_bad_chains() {
        assert!(matches!(
            build_decomposition(&[vec![0.0, 1.0], vec![0.0, 0.5]], 0.5),
            Err(Error::InvalidArgument(_))
        ));
        // nine evenly spaced points leave four on one side of any pole
        let mut stage: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        stage[10] = 1.0;
        let err = build_decomposition(&[vec![0.0, 1.0], stage], 0.5).unwrap_err();
        match err {
            Error::Validation { rank, lo, hi, .. } => {
                assert_eq!(rank, 2);
                assert_eq!((lo, hi), (0.0, 1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binary_examples() {
        let pts: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
        let d = binary_decomposition(&pts).unwrap();
        assert!(d.order() <= 4);
        assert_eq!(d.final_set(), pts.as_slice());
        d.check_nesting().unwrap();

        let d = binary_decomposition(&[0.3, 0.8]).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.chain[0], vec![0.3, 0.8]);

        let d = binary_decomposition(&[0.3]).unwrap();
        assert_eq!(d.order(), 1);
    }

    #[test]
    fn binary_revalidates_through_inference() {
        let pts: Vec<f64> = (0..40).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let d = binary_decomposition(&pts).unwrap();
        let again = d.revalidate().unwrap();
        assert_eq!(again.chain, d.chain);
    }

    #[test]
    fn perpendicular_examples() {
        let p = perpendicular(&DirectionSet::from_angles(vec![0.0, 0.125]).unwrap());
        assert_eq!(p.angles(), &[0.25, 0.375]);
        let omega = DirectionSet::from_angles(vec![0.1, 0.3, 0.95]).unwrap();
        assert!(perpendicular(&perpendicular(&omega)).same_lines(&omega, 1e-12));
    }
}
