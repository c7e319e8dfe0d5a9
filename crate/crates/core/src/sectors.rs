//! Frequency-plane geometry: sectors, restricted strips, their overlap
//! counts over a decomposition, band containment, and the empirical
//! domination checks built on the grid operators.
//!
//! Frequency convention. [`crate::spectral::gamma_symbol`] puts the band of
//! `Γ_{θ,r}` at `|ξ₁ + θξ₂| ≤ 1/h`, `|ξ₂| ≤ 2r`. In the reflected coordinates
//! `η = (ξ₂, −ξ₁)` this is `|η₂ − θη₁| ≤ 1/h`, the form in which bands and
//! strips are compared below. Grid multipliers for strips therefore test
//! `η`; see [`strip_mask`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid2D;
use crate::lacunary::{slope_to_angle, DirectionSet, LacunaryDecomposition, RankInterval};
use crate::ops::{m1, strong_maximal, OperatorConfig};
use crate::spectral::{self, gamma_op_with_loss, Spectrum};

/// Half-width of every restricted strip.
pub const STRIP_HALF_WIDTH: f64 = 5.0;

/// Overlap bounds of the lower-rank and top-rank strip families.
pub const LOW_OVERLAP_BOUND: usize = 40;
pub const TOP_OVERLAP_BOUND: usize = 12;

/// Lattice resolution per band axis in [`support_containment_check`].
pub const BAND_SAMPLES: usize = 512;

/// `S_c(J) = {x₁ > 1/(b − a), |x₂ − c x₁| ≤ 5}` for `J = (a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub center: f64,
    pub min_x1: f64,
    pub half_width: f64,
}

impl Strip {
    /// The centre may sit on an endpoint, as for the top-rank strips.
    pub fn new(slope_lo: f64, slope_hi: f64, center: f64) -> Result<Self> {
        if !(slope_lo < slope_hi) || !(slope_lo..=slope_hi).contains(&center) {
            return Err(invalid(format!(
                "strip needs lo < hi and centre inside, got ({slope_lo}, {slope_hi}) with {center}"
            )));
        }
        Ok(Self {
            slope_lo,
            slope_hi,
            center,
            min_x1: 1.0 / (slope_hi - slope_lo),
            half_width: STRIP_HALF_WIDTH,
        })
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        strip_contains(self, p)
    }

    /// `half_width − |x₂ − c x₁|`, positive inside the slanted sides.
    pub fn side_margin(&self, p: (f64, f64)) -> f64 {
        self.half_width - (p.1 - self.center * p.0).abs()
    }
}

pub fn strip_contains(strip: &Strip, p: (f64, f64)) -> bool {
    p.0 > strip.min_x1 && (p.1 - strip.center * p.0).abs() <= strip.half_width
}

/// `S(J) = {x₁ > 0, a ≤ x₂/x₁ ≤ b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub slope_lo: f64,
    pub slope_hi: f64,
}

impl Sector {
    pub fn new(slope_lo: f64, slope_hi: f64) -> Result<Self> {
        if !(slope_lo < slope_hi) {
            return Err(invalid("sector needs slope_lo < slope_hi"));
        }
        Ok(Self { slope_lo, slope_hi })
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 > 0.0 && {
            let t = p.1 / p.0;
            self.slope_lo <= t && t <= self.slope_hi
        }
    }
}

/// `{r_k < ξ₁ < 2r_{k+1}, |ξ₂ − θξ₁| < 1}` in the reflected coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub xi1_lo: f64,
    pub xi1_hi: f64,
    pub theta: f64,
    pub bump_halfwidth: f64,
}

impl FrequencyBand {
    pub fn new(xi1_lo: f64, xi1_hi: f64, theta: f64) -> Result<Self> {
        if !(0.0 <= xi1_lo && xi1_lo < xi1_hi) {
            return Err(invalid("band needs 0 ≤ lo < hi"));
        }
        Ok(Self {
            xi1_lo,
            xi1_hi,
            theta,
            bump_halfwidth: 1.0,
        })
    }

    /// The four extreme points of the closed band.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (a, b, t, w) = (self.xi1_lo, self.xi1_hi, self.theta, self.bump_halfwidth);
        [(a, t * a - w), (a, t * a + w), (b, t * b - w), (b, t * b + w)]
    }
}

/// Region on the grid's frequency lattice: `η = (ξ₂, −ξ₁) ∈ S`.
pub fn strip_mask(strip: Strip) -> impl Fn(f64, f64) -> bool {
    move |xi1, xi2| strip.contains((xi2, -xi1))
}

/// Strips of the two families of a decomposition: lower-rank intervals
/// centred at their poles, and every adjacent interval of the final set
/// with a strip centred at each endpoint.
pub fn decomposition_strips(decomp: &LacunaryDecomposition) -> Result<(Vec<Strip>, Vec<Strip>)> {
    let top = decomp.top_intervals();
    let is_top = |j: &RankInterval| top.iter().any(|&(a, b)| a == j.lo && b == j.hi);
    let mu = decomp.order();
    let mut low = Vec::new();
    for j in &decomp.rank_intervals {
        if j.rank + 1 > mu {
            continue;
        }
        match j.pole {
            Some(p) => low.push(Strip::new(j.lo, j.hi, p)?),
            None if is_top(j) => {}
            None => {
                return Err(invalid(format!(
                    "rank {} interval ({}, {}) has no pole",
                    j.rank, j.lo, j.hi
                )))
            }
        }
    }
    let mut high = Vec::with_capacity(2 * top.len());
    for (a, b) in top {
        high.push(Strip::new(a, b, a)?);
        high.push(Strip::new(a, b, b)?);
    }
    Ok((low, high))
}

/// `(n_low, n_top)`: how many strips of each family contain `p`.
pub fn overlap_count(decomp: &LacunaryDecomposition, p: (f64, f64)) -> Result<(usize, usize)> {
    if !(p.0 > 0.0) {
        return Err(invalid("overlap is counted on the half-plane x1 > 0"));
    }
    let (low, high) = decomposition_strips(decomp)?;
    Ok((
        low.iter().filter(|s| s.contains(p)).count(),
        high.iter().filter(|s| s.contains(p)).count(),
    ))
}

/// Exact maximum of the strip count of one family, with a point attaining it.
///
/// At abscissa `x₁` the strips through `(x₁, x₂)` are the active ones
/// (`1/|J| < x₁`) whose centres fall in the closed window
/// `[(x₂ − 5)/x₁, (x₂ + 5)/x₁]` of width `w = 10/x₁`. As `w` shrinks the
/// active family only grows at the thresholds `w = 10|J|`, and between
/// thresholds the best window count can only drop. So the supremum is the
/// largest number of centres of intervals with `|J| ≥ L` spread strictly
/// less than `10L`, over the distinct lengths `L`: a finite sweep.
pub fn max_family_overlap(strips: &[Strip]) -> (usize, Option<(f64, f64)>) {
    let mut items: Vec<(f64, f64)> = strips
        .iter()
        .map(|s| (s.slope_hi - s.slope_lo, s.center))
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = (0usize, None);
    let mut active: Vec<f64> = Vec::with_capacity(items.len());
    let mut i = 0;
    while i < items.len() {
        let len = items[i].0;
        while i < items.len() && items[i].0 == len {
            let c = items[i].1;
            let at = active.partition_point(|&x| x < c);
            active.insert(at, c);
            i += 1;
        }
        let width = STRIP_HALF_WIDTH * 2.0 * len;
        let mut lo = 0;
        for hi in 0..active.len() {
            while active[hi] - active[lo] >= width {
                lo += 1;
            }
            let count = hi - lo + 1;
            if count > best.0 {
                let spread = active[hi] - active[lo];
                let w = 0.5 * (spread + width);
                let x1 = 2.0 * STRIP_HALF_WIDTH / w;
                let x2 = 0.5 * (active[lo] + active[hi]) * x1;
                best = (count, Some((x1, x2)));
            }
        }
    }
    best
}

/// Exact maxima of both families over the half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub max_low: usize,
    pub argmax_low: Option<(f64, f64)>,
    pub max_top: usize,
    pub argmax_top: Option<(f64, f64)>,
    pub low_strips: usize,
    pub top_strips: usize,
}

impl OverlapReport {
    pub fn within_bounds(&self) -> bool {
        self.max_low <= LOW_OVERLAP_BOUND && self.max_top <= TOP_OVERLAP_BOUND
    }
}

pub fn max_overlap(decomp: &LacunaryDecomposition) -> Result<OverlapReport> {
    let (low, high) = decomposition_strips(decomp)?;
    let (max_low, argmax_low) = max_family_overlap(&low);
    let (max_top, argmax_top) = max_family_overlap(&high);
    Ok(OverlapReport {
        max_low,
        argmax_low,
        max_top,
        argmax_top,
        low_strips: low.len(),
        top_strips: high.len(),
    })
}

/// Maximum overlap over `n` random points of the region where strips live.
pub fn sampled_overlap<R: Rng>(decomp: &LacunaryDecomposition, rng: &mut R, n: usize) -> Result<(usize, usize)> {
    let (low, high) = decomposition_strips(decomp)?;
    let shortest = low
        .iter()
        .chain(&high)
        .map(|s| s.slope_hi - s.slope_lo)
        .fold(f64::INFINITY, f64::min);
    let x_max = if shortest.is_finite() { 2.0 / shortest } else { 2.0 };
    let mut best = (0, 0);
    for _ in 0..n {
        // log-uniform abscissa so every scale of interval is probed
        let x1 = (rng.gen_range(0.0..1.0f64) * x_max.ln().max(1.0)).exp();
        let c = rng.gen_range(-0.1..1.1);
        let x2 = c * x1 + rng.gen_range(-STRIP_HALF_WIDTH..STRIP_HALF_WIDTH);
        let p = (x1, x2);
        best.0 = best.0.max(low.iter().filter(|s| s.contains(p)).count());
        best.1 = best.1.max(high.iter().filter(|s| s.contains(p)).count());
    }
    Ok(best)
}

/// Checks `|J_{k+1}|/2 ≤ dist(p_k, J_{k+1}) ≤ |J_{k+1}|` and nesting.
pub fn check_chain(chain: &[RankInterval], theta: f64) -> Result<()> {
    if chain.is_empty() {
        return Err(invalid("chain is empty"));
    }
    for (k, j) in chain.iter().enumerate() {
        if !(j.lo < j.hi) {
            return Err(Error::Precondition(format!("J_{} is empty", k + 1)));
        }
        if k + 1 < chain.len() {
            let next = &chain[k + 1];
            let p = j.pole.ok_or_else(|| Error::Precondition(format!("p_{} is missing", k + 1)))?;
            if !(j.lo <= p && p <= j.hi) {
                return Err(Error::Precondition(format!("p_{} lies outside J_{}", k + 1, k + 1)));
            }
            if !j.contains_interval(next) {
                return Err(Error::Precondition(format!("J_{} is not inside J_{}", k + 2, k + 1)));
            }
            let len = next.len();
            let dist = if p < next.lo {
                next.lo - p
            } else if p > next.hi {
                p - next.hi
            } else {
                0.0
            };
            if !(0.5 * len <= dist && dist <= len) {
                return Err(Error::Precondition(format!(
                    "k = {}: dist(p_k, J_(k+1)) = {dist} outside [{}, {len}]",
                    k + 1,
                    0.5 * len
                )));
            }
        }
    }
    let last = chain.last().expect("nonempty");
    if !(last.lo <= theta && theta <= last.hi) {
        return Err(Error::Precondition("theta must lie in the last interval".into()));
    }
    Ok(())
}

/// One band of [`support_containment_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub k: usize,
    pub band: FrequencyBand,
    pub strip: Strip,
    /// Smallest side margin over the four corners.
    pub corner_margin: f64,
    /// Smallest side margin over the sampled lattice.
    pub lattice_margin: f64,
    /// `ξ₁` margin of the band against `1/|J_k|`; zero is admissible since
    /// the band is open at `r_k`.
    pub x1_margin: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub m: usize,
    pub bands: Vec<BandCheck>,
}

impl ContainmentReport {
    pub fn all_contained(&self) -> bool {
        self.bands.iter().all(|b| b.contained)
    }

    pub fn min_corner_margin(&self) -> Option<f64> {
        self.bands.iter().map(|b| b.corner_margin).reduce(f64::min)
    }
}

/// For `1 ≤ k ≤ m`, `m = max{k : 2r_k < R}`, `r_k = 1/|J_k|`, checks that
/// the band `{r_k < ξ₁ < 2r_{k+1}, |ξ₂ − θξ₁| < 1}` lies in `S_{p_k}(J_k)`,
/// with `r_{m+1} = R` and `p_n = θ`.
pub fn support_containment_check(chain: &[RankInterval], theta: f64, big_r: f64, samples: usize) -> Result<ContainmentReport> {
    check_chain(chain, theta)?;
    if !(big_r.is_finite() && big_r > 0.0) {
        return Err(invalid("R must be positive"));
    }
    let n = chain.len();
    let r: Vec<f64> = chain.iter().map(|j| 1.0 / j.len()).collect();
    let m = (1..=n).filter(|&k| 2.0 * r[k - 1] < big_r).max().unwrap_or(0);
    let samples = samples.max(2);
    let mut bands = Vec::with_capacity(m);
    for k in 1..=m {
        let j = &chain[k - 1];
        let p = if k == n { theta } else { j.pole.expect("checked") };
        let upper = if k == m { big_r } else { r[k] };
        let band = FrequencyBand::new(r[k - 1], 2.0 * upper, theta)?;
        let strip = Strip::new(j.lo, j.hi, p)?;
        let corner_margin = band
            .corners()
            .iter()
            .map(|&c| strip.side_margin(c))
            .fold(f64::INFINITY, f64::min);
        let mut lattice_margin = f64::INFINITY;
        for a in 0..samples {
            let x1 = band.xi1_lo + (band.xi1_hi - band.xi1_lo) * a as f64 / (samples - 1) as f64;
            for b in 0..samples {
                let t = -1.0 + 2.0 * b as f64 / (samples - 1) as f64;
                let x2 = theta * x1 + t * band.bump_halfwidth;
                lattice_margin = lattice_margin.min(strip.side_margin((x1, x2)));
            }
        }
        let x1_margin = band.xi1_lo - strip.min_x1;
        bands.push(BandCheck {
            k,
            band,
            strip,
            corner_margin,
            lattice_margin,
            x1_margin,
            contained: corner_margin > 0.0 && x1_margin >= -1e-12 * strip.min_x1,
        });
    }
    Ok(ContainmentReport { m, bands })
}

/// Random chain of `n` intervals in `(0, 1)` satisfying the distance law,
/// with `θ` drawn from the last interval.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize) -> (Vec<RankInterval>, f64) {
    let mut out = Vec::with_capacity(n);
    let a = rng.gen_range(0.0..0.3);
    let b = rng.gen_range(0.7..1.0);
    let (mut lo, mut hi) = (a, b);
    for k in 1..=n {
        let mut cur = RankInterval {
            lo,
            hi,
            rank: k,
            pole: None,
        };
        if k < n {
            // J_{k+1} of length L at distance d ∈ [L/2, L] from p_k, inside J_k
            let len = cur.len();
            loop {
                let p = rng.gen_range(lo..hi);
                let l = len * rng.gen_range(0.05..0.3);
                let d = l * rng.gen_range(0.5..=1.0);
                let right = rng.gen_bool(0.5);
                let (nlo, nhi) = if right { (p + d, p + d + l) } else { (p - d - l, p - d) };
                if nlo > lo && nhi < hi {
                    cur.pole = Some(p);
                    lo = nlo;
                    hi = nhi;
                    break;
                }
            }
        }
        out.push(cur);
    }
    let theta = rng.gen_range(lo..=hi);
    (out, theta)
}

fn vertical() -> DirectionSet {
    DirectionSet::from_angles(vec![0.25]).expect("finite")
}

fn slope_direction(alpha: f64) -> Result<DirectionSet> {
    DirectionSet::from_angles(vec![slope_to_angle(alpha)])
}

/// `M_β M¹_{π/2} g`: vertical averages first, then along `u_β = (1, β)`.
pub fn slope_vertical_composite(g: &Grid2D, beta: f64, cfg: &OperatorConfig) -> Result<Grid2D> {
    let inner = m1(g, &vertical(), cfg)?;
    m1(&inner, &slope_direction(beta)?, cfg)
}

/// Outcome of [`lemma3_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub ratio: f64,
    pub argmax: (usize, usize),
    /// Kernel mass lost to the finite window (see `gamma_op_with_loss`).
    pub lost_fraction: f64,
}

/// Numerators below this fraction of the largest are treated as zero.
const NUMERATOR_FLOOR: f64 = 1e-12;

/// Ratios are taken over the centred window covering this fraction of each
/// axis. Near the edge the composite's lines leave the grid at once and see
/// only zero extension, which is a truncation artifact.
pub const RATIO_WINDOW: f64 = 0.5;

/// `sup_x |Γ_{α,r,h}|f|| / ((h·r·|α−β| + 1)·M_β M¹_{π/2}|f|)`, an empirical
/// lower estimate of the constant in `|Γ f| ≲ (hr|α−β|+1)·M_β M¹_{π/2}|f|`. A pixel with a
/// zero denominator and nonzero numerator yields `+∞` at that pixel.
pub fn lemma3_ratio(
    f: &Grid2D,
    alpha: f64,
    beta: f64,
    r: f64,
    h: f64,
    cfg: &OperatorConfig,
) -> Result<Lemma3Report> {
    let g = f.abs();
    let (num, lost) = gamma_op_with_loss(&g, alpha, r, h)?;
    let den = slope_vertical_composite(&g, beta, cfg)?;
    let factor = h * r * (alpha - beta).abs() + 1.0;
    let (ratio, argmax) = pointwise_ratio(&num, &den, factor);
    Ok(Lemma3Report {
        ratio,
        argmax,
        lost_fraction: lost,
    })
}

fn pointwise_ratio(num: &Grid2D, den: &Grid2D, factor: f64) -> (f64, (usize, usize)) {
    let floor = NUMERATOR_FLOOR * num.max_abs();
    let (w, h) = (num.width(), num.height());
    let span = |n: usize| {
        let m = ((n as f64) * (1.0 - RATIO_WINDOW) / 2.0).floor() as usize;
        m..n - m
    };
    let (xs, ys) = (span(w), span(h));
    let mut best = (0.0, (0, 0));
    for (p, (&a, &b)) in num.values().iter().zip(den.values()).enumerate() {
        if !xs.contains(&(p % w)) || !ys.contains(&(p / w)) {
            continue;
        }
        let a = a.abs();
        if a <= floor {
            continue;
        }
        let q = if b > 0.0 { a / (factor * b) } else { f64::INFINITY };
        if q > best.0 {
            best = (q, (p % w, p / w));
        }
    }
    best
}

/// Outcome of [`lemma5_domination`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma5Report {
    pub ratio: f64,
    pub argmax: (usize, usize),
    /// Number of strip terms on the right side.
    pub terms: usize,
    pub lost_fraction: f64,
}

/// Compares `|Γ_{θ,R} f|` (with `h = 1`) against
/// `M₀²f + M_θ M¹_{π/2}(T_{S_θ(J_n)}f) + Σ_{k<n} M_{p_k} M¹_{π/2}(T_{S_{p_k}(J_k)}f)`
/// and reports the largest pointwise ratio. Multipliers act on the grid
/// zero-padded by [`spectral::PAD_FACTOR`] and are cropped back.
pub fn lemma5_domination(
    f: &Grid2D,
    chain: &[RankInterval],
    theta: f64,
    big_r: f64,
    cfg: &OperatorConfig,
) -> Result<Lemma5Report> {
    check_chain(chain, theta)?;
    let (lhs, lost) = gamma_op_with_loss(f, theta, big_r, 1.0)?;
    let mut rhs = strong_maximal(f, cfg)?.into_values();
    let padded = spectral::zero_pad(f, spectral::PAD_FACTOR)?;
    let n = chain.len();
    for (k, j) in chain.iter().enumerate() {
        let p = if k + 1 == n { theta } else { j.pole.expect("checked") };
        let strip = Strip::new(j.lo, j.hi, p)?;
        let t = spectral::multiplier(&padded, strip_mask(strip));
        let cropped = crop(&t, f)?;
        let term = slope_vertical_composite(&cropped, p, cfg)?;
        for (a, b) in rhs.iter_mut().zip(term.values()) {
            *a += b;
        }
    }
    let rhs = f.with_values(rhs)?;
    let (ratio, argmax) = pointwise_ratio(&lhs, &rhs, 1.0);
    Ok(Lemma5Report {
        ratio,
        argmax,
        terms: n,
        lost_fraction: lost,
    })
}

fn crop(big: &Grid2D, like: &Grid2D) -> Result<Grid2D> {
    let (w, h) = (like.width(), like.height());
    let mut v = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            v.push(big.get(i, j));
        }
    }
    like.with_values(v)
}

/// `Σ_J ‖T_{S_{p_J}(J)} f‖₂²` over the poled lower-rank intervals together
/// with `‖f‖₂²`, on the grid zero-padded by [`spectral::PAD_FACTOR`].
pub fn strip_energy_sum(f: &Grid2D, decomp: &LacunaryDecomposition) -> Result<(f64, f64)> {
    let (low, _) = decomposition_strips(decomp)?;
    let padded = spectral::zero_pad(f, spectral::PAD_FACTOR)?;
    let spec = Spectrum::of(&padded);
    let mut sum = 0.0;
    for s in &low {
        sum += spec.energy_in(strip_mask(*s));
    }
    Ok((sum, f.l2_norm().powi(2)))
}
