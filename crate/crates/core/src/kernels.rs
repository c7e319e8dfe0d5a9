//! Fejér and Vallée-Poussin kernels, the band-limited bump `φ` and the
//! dyadic majorant `ζ_r`.
//!
//! Transform convention: `K_r(x) = ∫_{−r}^{r} (1 − |t|/r) e^{−itx} dt`, so
//! `∫ K_r = 2π` and `V̂_r(ξ) = (1/2π) ∫ V_r(x) e^{ixξ} dx` is the trapezoid
//! equal to 1 on `[−r, r]` and vanishing outside `[−2r, 2r]`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Result};

/// Below this `|y|` the `sin y / y` factor uses its Taylor expansion.
const TAYLOR_GUARD: f64 = 1e-6;

/// Amplitude of `φ`: `1 / sinc(1/8)⁴`, the smallest value keeping
/// `φ ≥ 1` on `[0, 1]`, rounded up in the last digits.
pub const BUMP_SCALE: f64 = 1.010_476_596_627_152;

/// `φ` is centred at this point so that `[0, 1]` sits symmetrically under
/// its main lobe.
pub const BUMP_CENTER: f64 = 0.5;

/// `∫ φ = BUMP_SCALE · 8π/3`.
pub const BUMP_INTEGRAL: f64 = BUMP_SCALE * 8.0 * std::f64::consts::PI / 3.0;

/// Pointwise constant in `|V_r| ≤ C·ζ_r`, calibrated by a dense sweep over
/// `r ∈ [10⁻³, 10³]` (observed maximum below 9.1).
pub const ZETA_DOMINATION: f64 = 12.0;

fn sinc(y: f64) -> f64 {
    if y.abs() < TAYLOR_GUARD {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

pub(crate) fn fejer(r: f64, x: f64) -> f64 {
    let s = sinc(0.5 * r * x);
    r * s * s
}

pub(crate) fn vp(r: f64, x: f64) -> f64 {
    2.0 * fejer(2.0 * r, x) - fejer(r, x)
}

/// `K_r(x) = 4 sin²(rx/2) / (r x²)`, equal to `r` at the origin.
pub fn fejer_eval(r: f64, x: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_finite("x", x)?;
    Ok(fejer(r, x))
}

/// `V_r = 2K_{2r} − K_r`.
pub fn vp_eval(r: f64, x: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_finite("x", x)?;
    Ok(vp(r, x))
}

pub(crate) fn vp_hat(r: f64, xi: f64) -> f64 {
    let a = xi.abs();
    if a <= r {
        1.0
    } else if a >= 2.0 * r {
        0.0
    } else {
        2.0 - a / r
    }
}

/// Transform of `V_r`: 1 on `|ξ| ≤ r`, 0 on `|ξ| ≥ 2r`, linear in between.
pub fn vp_transform(r: f64, xi: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_finite("xi", xi)?;
    Ok(vp_hat(r, xi))
}

/// Partial sum `Σ_{j=1}^{depth} 2^{−j} V_{r/2^j}(x)` of the expansion of
/// `K_r`. The remainder is at most `r·4^{−depth}`.
pub fn fejer_from_vp(r: f64, x: f64, depth: u32) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_finite("x", x)?;
    if depth == 0 {
        return Err(crate::error::invalid("depth must be at least 1"));
    }
    let mut sum = 0.0;
    let mut weight = 1.0;
    let mut scale = r;
    for _ in 0..depth {
        weight *= 0.5;
        scale *= 0.5;
        sum += weight * vp(scale, x);
    }
    Ok(sum)
}

/// The lower bound `(r/2)·1_{(−1/r, 1/r)}(x) ≤ K_r(x)`, i.e. a normalised
/// box average of half-length `1/r` sits under the Fejér kernel.
pub fn fejer_box_floor(r: f64, x: f64) -> f64 {
    if x.abs() < 1.0 / r {
        0.5 * r
    } else {
        0.0
    }
}

pub(crate) fn bump(x: f64) -> f64 {
    let s = sinc(0.25 * (x - BUMP_CENTER));
    let s2 = s * s;
    BUMP_SCALE * s2 * s2
}

/// `φ_h(x) = φ(x/h)/h` with `φ(x) = A·sinc⁴((x − ½)/4)`.
///
/// `φ ≥ 0`, `φ ≥ 1` on `[0,1]`, and `φ̂` is supported in `[−1, 1]` because
/// `sinc(x/4)` is the transform of a box on `[−¼, ¼]`.
pub fn bump_eval(h: f64, x: f64) -> Result<f64> {
    ensure_positive("h", h)?;
    ensure_finite("x", x)?;
    Ok(bump(x / h) / h)
}

fn zeta_start(r: f64) -> i32 {
    (1.0 / r).log2().ceil() as i32
}

/// `γ_k = 4·4^{−k}/r`, used for `k > ⌈log₂(1/r)⌉`.
pub fn zeta_weight(r: f64, k: i32) -> f64 {
    4.0 * 4f64.powi(-k) / r
}

pub(crate) fn zeta(r: f64, x: f64) -> f64 {
    let k0 = zeta_start(r);
    let mut kmin = k0 + 1;
    let a = x.abs();
    if a >= 2f64.powi(kmin) {
        kmin = kmin.max(a.log2().floor() as i32 + 1);
        // guard against log2 rounding at exact powers of two
        while 2f64.powi(kmin) <= a {
            kmin += 1;
        }
        while kmin - 1 > k0 && 2f64.powi(kmin - 1) > a {
            kmin -= 1;
        }
    }
    // Σ_{k ≥ kmin} γ_k = (4/3)·γ_{kmin}
    zeta_weight(r, kmin) * 4.0 / 3.0
}

/// `ζ_r(x) = Σ_{k > ⌈log₂(1/r)⌉} γ_k 1_{(−2^k, 2^k)}(x)`.
pub fn zeta_eval(r: f64, x: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_finite("x", x)?;
    Ok(zeta(r, x))
}

/// `‖ζ_r‖₁ = Σ γ_k 2^{k+1} = 8·2^{−k₀}/r`, which lies in `(4, 8]`.
pub fn zeta_l1(r: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    Ok(8.0 * 2f64.powi(-zeta_start(r)) / r)
}

/// Kernel families exposed by the table generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Fejer,
    Vp,
    VpHat,
    Bump,
    Zeta,
}

/// A kernel family with its scale; `r` doubles as `h` for the bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub r: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, r: f64) -> Result<Self> {
        ensure_positive("r", r)?;
        Ok(Self { kind, r })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            KernelKind::Fejer => fejer(self.r, x),
            KernelKind::Vp => vp(self.r, x),
            KernelKind::VpHat => vp_hat(self.r, x),
            KernelKind::Bump => bump(x / self.r) / self.r,
            KernelKind::Zeta => zeta(self.r, x),
        }
    }

    /// `samples` evenly spaced points on `[a, b]` with their values.
    pub fn table(&self, a: f64, b: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
        ensure_finite("range start", a)?;
        ensure_finite("range end", b)?;
        if samples == 0 || (samples > 1 && !(a < b)) {
            return Err(crate::error::invalid("need a < b and at least one sample"));
        }
        let step = if samples > 1 { (b - a) / (samples - 1) as f64 } else { 0.0 };
        Ok((0..samples)
            .map(|i| {
                let x = if i + 1 == samples && samples > 1 { b } else { a + step * i as f64 };
                (x, self.eval(x))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fejer_examples() {
        assert_eq!(fejer_eval(1.0, 0.0).unwrap(), 1.0);
        assert!(fejer_eval(1.0, 2.0 * PI).unwrap().abs() < 1e-15);
        let v = fejer_eval(2.0, 1.0).unwrap();
        assert!((v - 4.0 * 1f64.sin().powi(2) / 2.0).abs() < 1e-14);
        assert!((v - 1.41615).abs() < 1e-5);
        assert!(fejer_eval(0.0, 1.0).is_err());
        assert!(fejer_eval(-1.0, 1.0).is_err());
    }

    #[test]
    fn taylor_branch_is_continuous() {
        for r in [1e-3, 1.0, 1e3] {
            let x = 1.9e-6 / r;
            let exact = 4.0 * (0.5f64 * r * x).sin().powi(2) / (r * x * x);
            assert!((fejer(r, x) - exact).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn vp_examples() {
        assert_eq!(vp_eval(1.0, 0.0).unwrap(), 3.0);
        assert!(vp_eval(1.0, 2.0 * PI).unwrap().abs() < 1e-15);
        assert_eq!(vp_eval(1.3, 0.7).unwrap(), vp_eval(1.3, -0.7).unwrap());
    }

    #[test]
    fn transform_examples() {
        assert_eq!(vp_transform(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(vp_transform(1.0, 1.5).unwrap(), 0.5);
        assert_eq!(vp_transform(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(vp_transform(1.0, -1.5).unwrap(), 0.5);
        assert!(vp_transform(0.0, 1.0).is_err());
    }

    #[test]
    fn fejer_series() {
        assert!((fejer_from_vp(1.0, 0.0, 20).unwrap() - 1.0).abs() < 1e-5);
        let x = 0.37;
        assert_eq!(fejer_from_vp(2.0, x, 1).unwrap(), 0.5 * vp(1.0, x));
        assert!((fejer_from_vp(1.0, PI, 25).unwrap() - fejer(1.0, PI)).abs() < 1e-6);
        assert!(fejer_from_vp(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn scaling_law() {
        for &r in &[0.01, 0.3, 1.0, 7.0, 120.0] {
            for i in -50..50 {
                let x = i as f64 * 0.173;
                let lhs = fejer(r, x);
                let rhs = r * fejer(1.0, r * x);
                assert!((lhs - rhs).abs() <= 1e-12 * r.max(1.0), "r={r} x={x}");
            }
        }
    }

    #[test]
    fn box_floor_under_fejer() {
        for &r in &[0.05, 0.5, 1.0, 3.0, 40.0] {
            for i in -2000..=2000 {
                let x = i as f64 / 1000.0 / r;
                assert!(fejer_box_floor(r, x) <= fejer(r, x), "r={r} x={x}");
            }
        }
    }

    #[test]
    fn literal_radius_form_fails_for_large_r() {
        // (1/2r)·1_{(−r,r)} is not below K_r once r is large
        let r = 3.0;
        let x = 2.99;
        assert!(0.5 / r > fejer(r, x));
    }

    #[test]
    fn bump_properties() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!(bump(x) >= 1.0, "x={x}");
        }
        assert!(bump_eval(1.0, 0.5).unwrap() >= 1.0);
        assert!(bump(40.0) >= 0.0 && bump(-13.0) >= 0.0);
        assert!(bump_eval(0.0, 1.0).is_err());
    }

    #[test]
    fn zeta_shape() {
        for &r in &[0.01, 0.7, 1.0, 100.0] {
            let mut prev = f64::INFINITY;
            for i in 0..4000 {
                let x = i as f64 * 0.37 / r;
                let z = zeta(r, x);
                assert!(z <= prev);
                assert_eq!(z, zeta(r, -x));
                prev = z;
            }
        }
        assert_eq!(zeta_l1(1.0).unwrap(), 8.0);
        for &r in &[0.013, 0.25, 0.9, 3.3, 77.0] {
            assert_eq!(zeta_l1(r).unwrap(), zeta_l1(4.0 * r).unwrap());
            let l1 = zeta_l1(r).unwrap();
            assert!(l1 > 4.0 && l1 <= 8.0);
        }
    }

    #[test]
    fn zeta_at_dyadic_radii() {
        // at |x| = 2^k the indicator of (−2^k, 2^k) is off
        let r = 1.0;
        let inside = zeta(r, 1.999);
        let at = zeta(r, 2.0);
        assert!(at < inside);
        assert_eq!(at, zeta(r, 3.999));
    }

    #[test]
    fn table_endpoints() {
        let spec = KernelSpec::new(KernelKind::VpHat, 1.0).unwrap();
        let t = spec.table(-3.0, 3.0, 7).unwrap();
        assert_eq!(t.iter().map(|p| p.0).collect::<Vec<_>>(), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let t = spec.table(-3.0, 3.0, 13).unwrap();
        assert!(t.contains(&(1.5, 0.5)));
    }
}
