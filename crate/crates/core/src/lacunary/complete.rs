//! Complete lacunary sequences and the completion of decompositions.
//!
//! A one-sided sequence with pole `v_∞` is complete in `J = (a, b)` when its
//! consecutive distances to the pole satisfy `¼·d_k ≤ d_{k+1} < ½·d_k` and its
//! first point reaches at least half way from the pole to the far endpoint of
//! `J`. Both-sided sets are the union of an increasing and a decreasing
//! complete sequence with the same pole.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    adjacent_intervals, build_with_groups, check_lacunary, group_pole, two_sided_lacunary,
    AddedGroup, LacunaryDecomposition, LacunarySequence,
};
use crate::error::{invalid, Error, Result};

/// Geometric centre of the admissible ratio range `[¼, ½)`.
const CENTRE_RATIO: f64 = 0.353_553_390_593_273_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sides {
    OneSideIncreasing,
    OneSideDecreasing,
    BothSide,
}

/// A complete lacunary set in `interval` about `pole`.
///
/// `upper` holds the decreasing branch above the pole, `lower` the increasing
/// branch below it, each ordered from the far end toward the pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteLacunarySpec {
    pub interval: (f64, f64),
    pub pole: f64,
    pub sides: Sides,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl CompleteLacunarySpec {
    /// All points in increasing order.
    pub fn points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lower.iter().chain(&self.upper).copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Checks the ratio and first-element conditions of both branches.
    pub fn is_complete(&self) -> bool {
        let (a, b) = self.interval;
        let p = self.pole;
        let upper: Vec<f64> = self.upper.iter().map(|v| v - p).collect();
        let lower: Vec<f64> = self.lower.iter().map(|v| p - v).collect();
        let inside = self.points().iter().all(|&v| v > a && v < b);
        let side_ok = |d: &[f64], far: f64| {
            d.iter().all(|&x| x > 0.0)
                && ratios_complete(d)
                && d.first().map_or(true, |&d1| d1 >= 0.5 * far)
        };
        let shape_ok = match self.sides {
            Sides::OneSideDecreasing => self.lower.is_empty() && !self.upper.is_empty(),
            Sides::OneSideIncreasing => self.upper.is_empty() && !self.lower.is_empty(),
            Sides::BothSide => !self.upper.is_empty() && !self.lower.is_empty(),
        };
        inside && shape_ok && side_ok(&upper, b - p) && side_ok(&lower, p - a)
    }
}

fn ratios_complete(d: &[f64]) -> bool {
    d.windows(2).all(|w| 0.25 * w[0] <= w[1] && w[1] < 0.5 * w[0])
}

/// Extends strictly decreasing positive distances (consecutive ratios below
/// `½`) to a complete chain whose first element lies in `[far/2, far)`.
fn complete_distances(ds: &[f64], far: f64) -> Result<Vec<f64>> {
    let first = ds[0];
    if !(first < far) {
        return Err(invalid("sequence reaches beyond the interval"));
    }
    let mut prefix = Vec::new();
    let mut x = first;
    while x < 0.5 * far {
        let next = if 3.0 * x < far { 3.0 * x } else { 0.5 * (2.0 * x + far) };
        prefix.push(next);
        x = next;
    }
    prefix.reverse();
    let mut out = prefix;
    out.push(first);
    for w in ds.windows(2) {
        let (big, small) = (w[0], w[1]);
        let q = small / big;
        if !(q < 0.5) {
            return Err(invalid(format!("distance ratio {q} is not below 1/2")));
        }
        if q >= 0.25 {
            out.push(small);
            continue;
        }
        let lq = (1.0 / q).ln();
        let t_min = (lq / 4f64.ln()).ceil() as i64;
        let t_max = ((lq / 2f64.ln()).ceil() as i64 - 1).max(t_min);
        let t = ((lq / (1.0 / CENTRE_RATIO).ln()).round() as i64).clamp(t_min, t_max).max(1);
        let rho = q.powf(1.0 / t as f64);
        let mut cur = big;
        for _ in 1..t {
            cur *= rho;
            out.push(cur);
        }
        out.push(small);
    }
    if !ratios_complete(&out) {
        return Err(invalid("completion could not satisfy the ratio window in floating point"));
    }
    Ok(out)
}

/// Completes a one-sided lacunary sequence inside `interval`.
///
/// Requires `gap ≤ ½` so that every consecutive ratio is below `½`; larger
/// gaps must be regrouped first (see [`completion_order_factor`]).
pub fn complete_one_sided(
    seq: &LacunarySequence,
    interval: (f64, f64),
) -> Result<CompleteLacunarySpec> {
    let (a, b) = interval;
    if seq.gap > 0.5 {
        return Err(Error::Precondition(format!(
            "gap {} exceeds 1/2; regroup into every n-th point before completing",
            seq.gap
        )));
    }
    if !(a < b) || seq.pole < a || seq.pole > b {
        return Err(invalid("pole must lie in the interval"));
    }
    if seq.points.iter().any(|&v| v <= a || v >= b) {
        return Err(invalid("sequence must lie inside the interval"));
    }
    if !check_lacunary(&seq.points, seq.pole, seq.gap)? {
        return Err(invalid("sequence is not lacunary about its pole"));
    }
    let p = seq.pole;
    let above = seq.points.iter().all(|&v| v > p);
    let below = seq.points.iter().all(|&v| v < p);
    if !(above || below) {
        return Err(invalid("one-sided completion needs all points strictly on one side of the pole"));
    }
    let ds: Vec<f64> = seq.points.iter().map(|v| (v - p).abs()).collect();
    if above {
        let d = complete_distances(&ds, b - p)?;
        Ok(CompleteLacunarySpec {
            interval,
            pole: p,
            sides: Sides::OneSideDecreasing,
            upper: d.iter().map(|x| p + x).collect(),
            lower: Vec::new(),
        })
    } else {
        let d = complete_distances(&ds, p - a)?;
        Ok(CompleteLacunarySpec {
            interval,
            pole: p,
            sides: Sides::OneSideIncreasing,
            upper: Vec::new(),
            lower: d.iter().map(|x| p - x).collect(),
        })
    }
}

/// `n(λ)`: 1 for `λ ≤ ½`, otherwise `⌈1 / log₂(1/λ)⌉`.
pub fn completion_order_factor(gap: f64) -> usize {
    if gap <= 0.5 {
        1
    } else {
        (1.0 / (1.0 / gap).log2()).ceil() as usize
    }
}

/// Orders a two-sided group around `pole` into (upper far→near, lower far→near,
/// point equal to the pole).
fn branches(points: &[f64], pole: f64) -> (Vec<f64>, Vec<f64>, Option<f64>) {
    let mut upper: Vec<f64> = points.iter().copied().filter(|&v| v > pole).collect();
    upper.sort_by(|x, y| y.total_cmp(x));
    let mut lower: Vec<f64> = points.iter().copied().filter(|&v| v < pole).collect();
    lower.sort_by(f64::total_cmp);
    let at = points.iter().copied().find(|&v| v == pole);
    (upper, lower, at)
}

/// Splits every stage into `n` sub-stages by taking every `n`-th point of each
/// branch, so that the first sub-stage has gap `λⁿ ≤ ½` and later sub-stages
/// insert at most one point per branch into each adjacent interval.
fn regroup(decomp: &LacunaryDecomposition, n: usize) -> Result<LacunaryDecomposition> {
    let mut stages: Vec<Vec<f64>> = Vec::new();
    let mut hints: Vec<Vec<(f64, f64)>> = Vec::new(); // (point, pole)
    let mut current: Vec<f64> = Vec::new();
    for stage_groups in &decomp.groups {
        let mut subs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for g in stage_groups {
            let (upper, lower, at) = branches(&g.points, g.pole);
            for (i, &v) in upper.iter().enumerate() {
                subs[i % n].push((v, g.pole));
            }
            for (i, &v) in lower.iter().enumerate() {
                subs[i % n].push((v, g.pole));
            }
            if let Some(v) = at {
                subs[upper.len() % n].push((v, g.pole));
            }
        }
        for sub in subs {
            if sub.is_empty() {
                continue;
            }
            current.extend(sub.iter().map(|&(v, _)| v));
            current.sort_by(f64::total_cmp);
            current.dedup();
            stages.push(current.clone());
            hints.push(sub);
        }
    }
    let target_gap = 0.5;
    let mut groups: Vec<Vec<AddedGroup>> = Vec::with_capacity(stages.len());
    let mut previous: Vec<f64> = Vec::new();
    for (k, stage) in stages.iter().enumerate() {
        let mut stage_groups = Vec::new();
        for (lo, hi) in adjacent_intervals(&previous, decomp.domain)? {
            let inside: Vec<(f64, f64)> =
                hints[k].iter().copied().filter(|&(v, _)| v > lo && v < hi).collect();
            if inside.is_empty() {
                continue;
            }
            let mut pts: Vec<f64> = inside.iter().map(|&(v, _)| v).collect();
            pts.sort_by(f64::total_cmp);
            let hinted = inside[0].1;
            let pole = if hinted >= lo && hinted <= hi && two_sided_lacunary(&pts, hinted, target_gap) {
                hinted
            } else {
                group_pole(&pts, target_gap, (lo, hi))?.ok_or_else(|| Error::Validation {
                    rank: k + 1,
                    lo,
                    hi,
                    reason: "regrouped points are not lacunary".into(),
                })?
            };
            stage_groups.push(AddedGroup {
                points: pts,
                pole,
                interval: (lo, hi),
            });
        }
        groups.push(stage_groups);
        previous = stage.clone();
    }
    build_with_groups(stages, groups, target_gap, decomp.domain)
}

/// Embeds a decomposition into a complete one of order at most `n(λ)·μ`.
///
/// Stage by stage, the points added to `Ω_k` that fall into an adjacent
/// interval `J` of the completed set `Ω*_{k−1}` come from a single added
/// group; they are completed inside `J` about the original pole when it lies
/// in `J`, and otherwise about their point nearest to that pole.
pub fn complete_decomposition(decomp: &LacunaryDecomposition) -> Result<LacunaryDecomposition> {
    let base = if decomp.groups.len() != decomp.chain.len() {
        decomp.revalidate()?
    } else {
        decomp.clone()
    };
    let n = completion_order_factor(base.gap);
    let base = if n > 1 { regroup(&base, n)? } else { base };
    let domain = base.domain;
    let mut stages: Vec<Vec<f64>> = Vec::new();
    let mut groups: Vec<Vec<AddedGroup>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    for stage_groups in &base.groups {
        let mut new_groups = Vec::new();
        let mut additions: Vec<f64> = Vec::new();
        for (lo, hi) in adjacent_intervals(&current, domain)? {
            let mut inside: Vec<(f64, f64)> = Vec::new();
            for g in stage_groups {
                for &v in &g.points {
                    if v > lo && v < hi {
                        inside.push((v, g.pole));
                    }
                }
            }
            if inside.is_empty() {
                continue;
            }
            let original_pole = inside[0].1;
            let mut pts: Vec<f64> = inside.iter().map(|&(v, _)| v).collect();
            pts.sort_by(f64::total_cmp);
            let pole = if original_pole >= lo && original_pole <= hi {
                original_pole
            } else {
                *pts
                    .iter()
                    .min_by(|x, y| (*x - original_pole).abs().total_cmp(&(*y - original_pole).abs()))
                    .expect("nonempty")
            };
            let (upper, lower, at) = branches(&pts, pole);
            let mut completed: Vec<f64> = Vec::new();
            if !upper.is_empty() {
                let d: Vec<f64> = upper.iter().map(|v| v - pole).collect();
                completed.extend(complete_distances(&d, hi - pole)?.iter().map(|x| pole + x));
            }
            if !lower.is_empty() {
                let d: Vec<f64> = lower.iter().map(|v| pole - v).collect();
                completed.extend(complete_distances(&d, pole - lo)?.iter().map(|x| pole - x));
            }
            completed.extend(at);
            completed.retain(|&v| v > lo && v < hi);
            completed.sort_by(f64::total_cmp);
            completed.dedup();
            additions.extend(&completed);
            new_groups.push(AddedGroup {
                points: completed,
                pole,
                interval: (lo, hi),
            });
        }
        if new_groups.is_empty() {
            continue;
        }
        current.extend(additions);
        current.sort_by(f64::total_cmp);
        current.dedup();
        stages.push(current.clone());
        groups.push(new_groups);
    }
    build_with_groups(stages, groups, 0.5, domain)
}

fn complete_branch(pole: f64, far: f64, first_fraction: f64, ratios: &[f64], upward: bool) -> Vec<f64> {
    let mut d = first_fraction * far;
    let mut out = Vec::with_capacity(ratios.len() + 1);
    out.push(d);
    for &r in ratios {
        d *= r;
        out.push(d);
    }
    out.into_iter()
        .map(|x| if upward { pole + x } else { pole - x })
        .collect()
}

/// Deterministic complete `μ`-lacunary set in `[0,1]`: every adjacent
/// interval at least `min_len` long receives a both-sided complete set about
/// its midpoint with `depth` points per side and constant ratio.
pub fn regular_complete(
    mu: usize,
    depth: usize,
    ratio: f64,
    first_fraction: f64,
    min_len: f64,
) -> Result<LacunaryDecomposition> {
    if mu == 0 || depth == 0 {
        return Err(invalid("order and depth must be positive"));
    }
    if !(0.25..0.5).contains(&ratio) || !(0.5..1.0).contains(&first_fraction) {
        return Err(invalid("ratio must lie in [1/4, 1/2) and first fraction in [1/2, 1)"));
    }
    let domain = (0.0, 1.0);
    let ratios = vec![ratio; depth - 1];
    let mut current: Vec<f64> = Vec::new();
    let mut stages = Vec::new();
    let mut groups = Vec::new();
    for _ in 0..mu {
        let mut stage_groups = Vec::new();
        for (lo, hi) in adjacent_intervals(&current, domain)? {
            if hi - lo < min_len {
                continue;
            }
            let pole = 0.5 * (lo + hi);
            let mut pts = complete_branch(pole, hi - pole, first_fraction, &ratios, true);
            pts.extend(complete_branch(pole, pole - lo, first_fraction, &ratios, false));
            // the pole closes the group
            pts.push(pole);
            pts.retain(|&v| v > lo && v < hi);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            stage_groups.push(AddedGroup {
                points: pts,
                pole,
                interval: (lo, hi),
            });
        }
        if stage_groups.is_empty() {
            break;
        }
        current.extend(stage_groups.iter().flat_map(|g| g.points.iter().copied()));
        current.sort_by(f64::total_cmp);
        current.dedup();
        stages.push(current.clone());
        groups.push(stage_groups);
    }
    build_with_groups(stages, groups, 0.5, domain)
}

/// Parameters for [`random_complete`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomCompleteParams {
    pub mu: usize,
    pub max_depth: usize,
    pub fill_probability: f64,
    pub max_points: usize,
}

impl Default for RandomCompleteParams {
    fn default() -> Self {
        Self {
            mu: 4,
            max_depth: 4,
            fill_probability: 0.6,
            max_points: 400,
        }
    }
}

/// Random complete `μ`-lacunary set in `[0,1]`. Stage one always fills the
/// whole domain; later stages fill each adjacent interval with probability
/// `fill_probability` until `max_points` is reached.
pub fn random_complete<R: Rng>(rng: &mut R, params: RandomCompleteParams) -> Result<LacunaryDecomposition> {
    if params.mu == 0 || params.max_depth == 0 {
        return Err(invalid("order and depth must be positive"));
    }
    let domain = (0.0, 1.0);
    let mut current: Vec<f64> = Vec::new();
    let mut stages = Vec::new();
    let mut groups = Vec::new();
    for stage in 0..params.mu {
        let mut stage_groups = Vec::new();
        for (lo, hi) in adjacent_intervals(&current, domain)? {
            if current.len() + stage_groups.iter().map(|g: &AddedGroup| g.points.len()).sum::<usize>()
                >= params.max_points
            {
                break;
            }
            if stage > 0 && !rng.gen_bool(params.fill_probability) {
                continue;
            }
            let w = hi - lo;
            if w < 1e-9 {
                continue;
            }
            let pole = lo + w * rng.gen_range(0.05..0.95);
            let side = rng.gen_range(0..3);
            let mut pts = Vec::new();
            for (upward, wanted) in [(true, side != 1), (false, side != 2)] {
                if !wanted {
                    continue;
                }
                let depth = rng.gen_range(1..=params.max_depth);
                let ratios: Vec<f64> = (1..depth).map(|_| rng.gen_range(0.25..0.49)).collect();
                let far = if upward { hi - pole } else { pole - lo };
                let frac = rng.gen_range(0.5..0.95);
                pts.extend(complete_branch(pole, far, frac, &ratios, upward));
            }
            pts.retain(|&v| v > lo && v < hi && v != pole);
            if pts.is_empty() {
                continue;
            }
            pts.push(pole);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            stage_groups.push(AddedGroup {
                points: pts,
                pole,
                interval: (lo, hi),
            });
        }
        if stage_groups.is_empty() {
            break;
        }
        current.extend(stage_groups.iter().flat_map(|g| g.points.iter().copied()));
        current.sort_by(f64::total_cmp);
        current.dedup();
        stages.push(current.clone());
        groups.push(stage_groups);
    }
    build_with_groups(stages, groups, 0.5, domain)
}

/// True when every added group of `decomp` is complete in its interval.
pub fn is_complete_decomposition(decomp: &LacunaryDecomposition) -> bool {
    decomp.groups.iter().flatten().all(|g| {
        let (upper, lower, _) = branches(&g.points, g.pole);
        let sides = match (upper.is_empty(), lower.is_empty()) {
            (false, false) => Sides::BothSide,
            (false, true) => Sides::OneSideDecreasing,
            (true, false) => Sides::OneSideIncreasing,
            (true, true) => return true,
        };
        CompleteLacunarySpec {
            interval: g.interval,
            pole: g.pole,
            sides,
            upper,
            lower,
        }
        .is_complete()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(points: Vec<f64>, pole: f64, gap: f64) -> LacunarySequence {
        LacunarySequence::new(points, pole, gap).unwrap()
    }

    #[test]
    fn already_complete_sequence_is_kept() {
        let s = seq(vec![0.6, 0.2, 0.06], 0.0, 0.45);
        let c = complete_one_sided(&s, (-1.0, 1.0)).unwrap();
        assert!(c.is_complete());
        assert_eq!(c.upper, vec![0.6, 0.2, 0.06]);
    }

    #[test]
    fn single_point_gets_a_prefix() {
        let s = seq(vec![0.1], 0.0, 0.5);
        let c = complete_one_sided(&s, (0.0, 1.0)).unwrap();
        assert!(c.is_complete());
        assert!(c.upper[0] >= 0.5);
        assert!(c.upper.contains(&0.1));
        assert_eq!(c.upper.len(), 3);
    }

    #[test]
    fn ratio_exactly_half_is_rejected() {
        // 0.3/0.6 = 1/2 is only lacunary for gaps above 1/2
        assert!(LacunarySequence::new(vec![0.6, 0.3], 0.0, 0.5).is_err());
        let s = seq(vec![0.6, 0.3], 0.0, 0.6);
        assert!(matches!(complete_one_sided(&s, (0.0, 1.0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn wide_gaps_are_filled() {
        let s = seq(vec![0.9, 0.01, 1e-5], 0.0, 0.1);
        let c = complete_one_sided(&s, (0.0, 1.0)).unwrap();
        assert!(c.is_complete());
        for v in [0.9, 0.01, 1e-5] {
            assert!(c.upper.contains(&v));
        }
    }

    #[test]
    fn increasing_side_completion() {
        let s = seq(vec![0.2, 0.45], 0.5, 0.3);
        let c = complete_one_sided(&s, (0.0, 1.0)).unwrap();
        assert_eq!(c.sides, Sides::OneSideIncreasing);
        assert!(c.is_complete());
    }

    #[test]
    fn pole_outside_interval_is_invalid() {
        let s = seq(vec![0.6, 0.2], 0.0, 0.45);
        assert!(matches!(complete_one_sided(&s, (0.1, 1.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn order_factor() {
        assert_eq!(completion_order_factor(0.5), 1);
        assert_eq!(completion_order_factor(0.3), 1);
        assert_eq!(completion_order_factor(0.8), 4);
        assert_eq!(completion_order_factor(0.75), 3);
    }

    #[test]
    fn completes_dyadic_sequence() {
        let pts: Vec<f64> = (0..=10).map(|k| 2f64.powi(-k)).collect();
        let d = super::super::build_decomposition_in(&[pts.clone()], 0.5, (0.0, 2.0)).unwrap();
        let c = complete_decomposition(&d).unwrap();
        assert_eq!(c.order(), 1);
        for p in &pts {
            assert!(c.final_set().contains(p));
        }
        assert!(is_complete_decomposition(&c));
    }

    #[test]
    fn trivial_completion() {
        let d = super::super::build_decomposition(&[vec![0.5]], 0.5).unwrap();
        let c = complete_decomposition(&d).unwrap();
        assert_eq!(c.order(), 1);
        assert_eq!(c.final_set(), &[0.5]);
    }

    #[test]
    fn wide_gap_completion_order() {
        let pts: Vec<f64> = (0..12).map(|k| 0.9 * 0.75f64.powi(k)).collect();
        let d = super::super::build_decomposition(&[pts.clone()], 0.8).unwrap();
        let c = complete_decomposition(&d).unwrap();
        assert!(c.order() <= 4 * d.order());
        for p in &pts {
            assert!(c.final_set().contains(p));
        }
        assert!(is_complete_decomposition(&c));
    }

    #[test]
    fn generated_sets_are_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mu in 1..=6 {
            let d = random_complete(&mut rng, RandomCompleteParams { mu, ..Default::default() }).unwrap();
            assert!(is_complete_decomposition(&d));
            d.check_nesting().unwrap();
        }
        let d = regular_complete(3, 3, 1.0 / 3.0, 0.75, 0.0).unwrap();
        assert_eq!(d.order(), 3);
        assert!(is_complete_decomposition(&d));
        assert_eq!(d.final_set().len(), 7 + 8 * 7 + 64 * 7);
    }
}
