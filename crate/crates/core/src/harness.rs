//! Test functions and empirical `L²` ratio sweeps.
//!
//! Ratios are maxima of `‖Tf‖₂/‖f‖₂` over a finite family, so every number
//! reported here is a lower bound for the discrete operator norm.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid2D;
use crate::lacunary::{regular_complete, DirectionSet};
use crate::ops::{m0, m1, m2, OperatorConfig};

/// Parametrised test function, generated on a grid centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionSpec {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// `count` needles of the given length and width through the origin,
    /// at angles `phase + k/(2·count)` in turns.
    NeedleBundle { count: usize, length: f64, width: f64, phase: f64 },
    /// Gaussian bumps with random centres, widths and signs.
    RandomBumps { count: usize, radius: f64, seed: u64 },
    /// A single pixel at the centre with unit `L²` norm.
    HotPixel,
}

impl TestFunctionSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Disk { radius } => format!("disk(r={radius})"),
            Self::Annulus { inner, outer } => format!("annulus({inner},{outer})"),
            Self::NeedleBundle { count, length, width, .. } => format!("needles({count},{length}x{width})"),
            Self::RandomBumps { count, seed, .. } => format!("bumps({count},seed={seed})"),
            Self::HotPixel => "hot_pixel".to_string(),
        }
    }
}

/// Width, height and spacing of the grids a harness run works on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
}

impl GridShape {
    pub fn square(n: usize, spacing: f64) -> Self {
        Self {
            width: n,
            height: n,
            spacing,
        }
    }
}

/// Antialiased indicator of `|t| ≤ half` at resolution `h`.
fn soft_step(t: f64, half: f64, h: f64) -> f64 {
    ((half - t.abs()) / h + 0.5).clamp(0.0, 1.0)
}

pub fn generate(spec: &TestFunctionSpec, width: usize, height: usize, spacing: f64) -> Result<Grid2D> {
    let origin = (
        -0.5 * (width as f64 - 1.0) * spacing,
        -0.5 * (height as f64 - 1.0) * spacing,
    );
    let sample = |f: &dyn Fn(f64, f64) -> f64| Grid2D::from_fn(width, height, spacing, origin, f);
    let h = spacing;
    let g;
    match spec {
        TestFunctionSpec::Disk { radius } => {
            let r = *radius;
            if !(r.is_finite() && r > 0.0) {
                return Err(invalid(format!("disk radius must be positive, got {r}")));
            }
            g = sample(&|x, y| soft_step((x * x + y * y).sqrt(), r, h))?;
        }
        TestFunctionSpec::Annulus { inner, outer } => {
            let (a, b) = (*inner, *outer);
            if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
                return Err(invalid(format!("annulus needs 0 <= inner < outer, got ({a}, {b})")));
            }
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            g = sample(&|x, y| soft_step((x * x + y * y).sqrt() - mid, half, h))?;
        }
        TestFunctionSpec::NeedleBundle {
            count,
            length,
            width: w,
            phase,
        } => {
            if *count == 0 || !(length.is_finite() && *length > 0.0) || !(w.is_finite() && *w > 0.0) {
                return Err(invalid("needle bundle needs a positive count, length and width"));
            }
            let dirs: Vec<(f64, f64)> = (0..*count)
                .map(|k| {
                    let t = std::f64::consts::TAU * (phase + k as f64 / (2 * count) as f64);
                    (t.cos(), t.sin())
                })
                .collect();
            let (half_len, half_w) = (0.5 * length, 0.5 * w);
            g = sample(&|x, y| {
                dirs.iter()
                    .map(|&(c, s)| {
                        let along = x * c + y * s;
                        let across = -x * s + y * c;
                        soft_step(along, half_len, h) * soft_step(across, half_w, h)
                    })
                    .fold(0.0, f64::max)
            })?;
        }
        TestFunctionSpec::RandomBumps { count, radius, seed } => {
            if *count == 0 || !(radius.is_finite() && *radius > 0.0) {
                return Err(invalid("random bumps need a positive count and radius"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let extent = 0.35 * (width.min(height) as f64) * spacing;
            let bumps: Vec<(f64, f64, f64, f64)> = (0..*count)
                .map(|_| {
                    let cx = rng.gen_range(-extent..extent);
                    let cy = rng.gen_range(-extent..extent);
                    let s = radius * rng.gen_range(0.25..1.0);
                    let a = rng.gen_range(-1.0..1.0);
                    (cx, cy, s, a)
                })
                .collect();
            g = sample(&|x, y| {
                bumps
                    .iter()
                    .map(|&(cx, cy, s, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                    .sum()
            })?;
        }
        TestFunctionSpec::HotPixel => {
            let mut z = Grid2D::zeros(width, height, spacing, origin)?;
            z.set(width / 2, height / 2, 1.0 / spacing);
            g = z;
        }
    }
    if !(g.l2_norm() > 0.0) {
        return Err(invalid(format!("{} has zero norm on this grid", spec.label())));
    }
    Ok(g)
}

/// Maximal operator measured by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    M0,
    M1,
    M2,
}

impl Operator {
    pub fn apply(self, f: &Grid2D, omega: &DirectionSet, cfg: &OperatorConfig) -> Result<Grid2D> {
        match self {
            Self::M0 => m0(f, omega, cfg),
            Self::M1 => m1(f, omega, cfg),
            Self::M2 => m2(f, omega, cfg),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::M0 => "m0",
            Self::M1 => "m1",
            Self::M2 => "m2",
        }
    }
}

impl FromStr for Operator {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m0" => Ok(Self::M0),
            "m1" => Ok(Self::M1),
            "m2" => Ok(Self::M2),
            other => Err(invalid(format!("unknown operator '{other}' (expected m0, m1 or m2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub max_ratio: f64,
    pub argmax: TestFunctionSpec,
}

/// `max_f ‖op f‖₂/‖f‖₂` over the family. Zero-norm members are skipped.
pub fn measure_ratio(
    omega: &DirectionSet,
    family: &[TestFunctionSpec],
    op: Operator,
    cfg: &OperatorConfig,
    shape: GridShape,
) -> Result<RatioEstimate> {
    if family.is_empty() {
        return Err(invalid("test family is empty"));
    }
    let mut best: Option<RatioEstimate> = None;
    for spec in family {
        let f = match generate(spec, shape.width, shape.height, shape.spacing) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("skipping {}: {e}", spec.label());
                continue;
            }
        };
        let ratio = op.apply(&f, omega, cfg)?.l2_norm() / f.l2_norm();
        if best.as_ref().map_or(true, |b| ratio > b.max_ratio) {
            best = Some(RatioEstimate {
                max_ratio: ratio,
                argmax: spec.clone(),
            });
        }
    }
    best.ok_or_else(|| invalid("no family member has nonzero norm on this grid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    N,
    Mu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `N` or `μ`.
    pub label: usize,
    pub operator: Operator,
    pub max_ratio: f64,
    pub argmax_spec: TestFunctionSpec,
    /// Number of directions actually used.
    pub directions: usize,
    pub ref_sqrt_log: Option<f64>,
    pub ref_log: Option<f64>,
    pub ref_sqrt_mu: Option<f64>,
    pub ref_mu: Option<f64>,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "label,operator,max_ratio,ref_sqrt_log,ref_log,ref_sqrt_mu,ref_mu,runtime_ms";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{},{},{},{}",
                r.label,
                r.operator.name(),
                r.max_ratio,
                opt(r.ref_sqrt_log),
                opt(r.ref_log),
                opt(r.ref_sqrt_mu),
                opt(r.ref_mu),
                r.runtime_ms
            );
        }
        out
    }

    pub fn rows_for(&self, op: Operator) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows.iter().filter(move |r| r.operator == op)
    }

    /// Ratio of `op` at `label`, if present.
    pub fn ratio(&self, op: Operator, label: usize) -> Option<f64> {
        self.rows_for(op).find(|r| r.label == label).map(|r| r.max_ratio)
    }
}

/// `N` slopes `k/N`, `k = 0..N`; sets for `N | N'` are nested.
pub fn uniform_slopes(n: usize) -> Result<DirectionSet> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    DirectionSet::from_slopes(&(0..n).map(|k| k as f64 / n as f64).collect::<Vec<_>>())
}

fn sweep(
    mode: SweepMode,
    items: Vec<(usize, DirectionSet)>,
    ops: &[Operator],
    family: &[TestFunctionSpec],
    cfg: &OperatorConfig,
    shape: GridShape,
) -> Result<SweepResult> {
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut previous: Option<(DirectionSet, usize)> = None;
    for (label, omega) in items {
        let x = label as f64;
        // a label whose set equals the previous one reuses its ratios
        let reuse = previous
            .as_ref()
            .filter(|(p, _)| p.angles() == omega.angles())
            .map(|&(_, start)| start);
        let start = rows.len();
        for (k, &op) in ops.iter().enumerate() {
            let t = Instant::now();
            let est = match reuse {
                Some(first) => RatioEstimate {
                    max_ratio: rows[first + k].max_ratio,
                    argmax: rows[first + k].argmax_spec.clone(),
                },
                None => measure_ratio(&omega, family, op, cfg, shape)?,
            };
            let (ref_sqrt_log, ref_log, ref_sqrt_mu, ref_mu) = match mode {
                SweepMode::N => (Some(x.log2().sqrt()), Some(x.log2()), None, None),
                SweepMode::Mu => (None, None, Some(x.sqrt()), Some(x)),
            };
            rows.push(SweepRow {
                label,
                operator: op,
                max_ratio: est.max_ratio,
                argmax_spec: est.argmax,
                directions: omega.len(),
                ref_sqrt_log,
                ref_log,
                ref_sqrt_mu,
                ref_mu,
                runtime_ms: t.elapsed().as_millis() as u64,
            });
        }
        if reuse.is_none() {
            previous = Some((omega, start));
        }
    }
    Ok(SweepResult { mode, rows })
}

/// Ratios over uniformly spaced slope sets of each cardinality.
pub fn sweep_n(
    ns: &[usize],
    ops: &[Operator],
    family: &[TestFunctionSpec],
    cfg: &OperatorConfig,
    shape: GridShape,
) -> Result<SweepResult> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("N values must be strictly increasing"));
    }
    let items = ns
        .iter()
        .map(|&n| Ok((n, uniform_slopes(n)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep(SweepMode::N, items, ops, family, cfg, shape)
}

/// Construction of the complete sets used by [`sweep_mu`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuConstruction {
    /// Points per side of every added sequence.
    pub depth: usize,
    /// Ratio of consecutive distances to the pole, in `[1/4, 1/2)`.
    pub ratio: f64,
    /// Adjacent intervals shorter than this are left alone, which keeps the
    /// set at the angular resolution of the grid.
    pub min_len: f64,
}

impl Default for MuConstruction {
    fn default() -> Self {
        Self {
            depth: 4,
            ratio: 0.45,
            min_len: 1.0 / 128.0,
        }
    }
}

/// Final set of the complete `μ`-lacunary construction; nested in `μ`.
pub fn mu_lacunary_set(mu: usize, c: MuConstruction) -> Result<DirectionSet> {
    let d = regular_complete(mu, c.depth, c.ratio, 0.75, c.min_len)?;
    DirectionSet::from_slopes(d.final_set())
}

/// Ratios over complete `μ`-lacunary sets for each order.
pub fn sweep_mu(
    mus: &[usize],
    construction: MuConstruction,
    ops: &[Operator],
    family: &[TestFunctionSpec],
    cfg: &OperatorConfig,
    shape: GridShape,
) -> Result<SweepResult> {
    if mus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("mu values must be strictly increasing"));
    }
    let items = mus
        .iter()
        .map(|&mu| Ok((mu, mu_lacunary_set(mu, construction)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep(SweepMode::Mu, items, ops, family, cfg, shape)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    SqrtLog,
    Log,
    SqrtMu,
    Mu,
}

impl GrowthModel {
    pub fn eval(self, label: f64) -> f64 {
        match self {
            Self::SqrtLog => label.log2().sqrt(),
            Self::Log => label.log2(),
            Self::SqrtMu => label.sqrt(),
            Self::Mu => label,
        }
    }
}

/// Least-squares `c` for `ratio ≈ c·model(label)` over the rows of `op`,
/// with the RMS residual.
pub fn fit_growth(result: &SweepResult, op: Operator, model: GrowthModel) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = result
        .rows_for(op)
        .map(|r| (model.eval(r.label as f64), r.max_ratio))
        .collect();
    if pts.len() < 3 {
        return Err(invalid(format!("need at least 3 rows, got {}", pts.len())));
    }
    let mm: f64 = pts.iter().map(|(m, _)| m * m).sum();
    if !(mm.is_finite() && mm > 0.0) {
        return Err(invalid("model values are degenerate"));
    }
    let c = pts.iter().map(|(m, r)| m * r).sum::<f64>() / mm;
    let rms = (pts.iter().map(|(m, r)| (r - c * m).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok((c, rms))
}

/// Family used by default in sweeps: needles, random bumps and a disk.
pub fn default_family(seed: u64) -> Vec<TestFunctionSpec> {
    vec![
        TestFunctionSpec::NeedleBundle {
            count: 16,
            length: 6.0,
            width: 0.0625,
            phase: 0.0,
        },
        TestFunctionSpec::RandomBumps {
            count: 24,
            radius: 0.25,
            seed,
        },
        TestFunctionSpec::Disk { radius: 1.0 },
    ]
}

/// Parses a comma-separated family such as `disk,needles,random`.
pub fn family_from_names(names: &str, seed: u64) -> Result<Vec<TestFunctionSpec>> {
    names
        .split(',')
        .map(|n| match n.trim() {
            "disk" => Ok(TestFunctionSpec::Disk { radius: 1.0 }),
            "annulus" => Ok(TestFunctionSpec::Annulus { inner: 1.0, outer: 1.5 }),
            "needles" | "needle_bundle" => Ok(TestFunctionSpec::NeedleBundle {
                count: 16,
                length: 6.0,
                width: 0.0625,
                phase: 0.0,
            }),
            "random" | "random_bumps" => Ok(TestFunctionSpec::RandomBumps {
                count: 24,
                radius: 0.25,
                seed,
            }),
            "hot_pixel" => Ok(TestFunctionSpec::HotPixel),
            other => Err(invalid(format!("unknown test function '{other}'"))),
        })
        .collect()
}
