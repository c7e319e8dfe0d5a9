//! Spectral tools on the sampled lattice: zero-padded linear convolution,
//! the smoothed directional operator `Γ_{α,r,h}`, and Fourier multipliers.
//!
//! Frequencies are angular: a lattice of `n` samples with spacing `h` carries
//! `ξ = 2πk/(n·h)` for signed `k`, and `f̂(ξ) = Σ f(x) e^{−i x·ξ} h²`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::grid::Grid2D;
use crate::kernels;

/// Largest tolerated fraction of kernel mass outside the sampled window.
pub const TRUNCATION_LIMIT: f64 = 1e-3;

/// Padding factor per axis for linear convolution.
pub const PAD_FACTOR: usize = 2;

struct Fft2 {
    w: usize,
    h: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(w: usize, h: usize, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let (row, col) = if inverse {
            (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
        } else {
            (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
        };
        Self { w, h, row, col }
    }

    fn run(&self, data: &mut [Complex64]) {
        self.row.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        for j in 0..self.h {
            for i in 0..self.w {
                t[i * self.h + j] = data[j * self.w + i];
            }
        }
        self.col.process(&mut t);
        for j in 0..self.h {
            for i in 0..self.w {
                data[j * self.w + i] = t[i * self.h + j];
            }
        }
    }
}

/// Signed index of DFT bin `k` out of `n`.
pub fn signed_bin(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Angular frequency of bin `k` on a lattice of `n` samples spaced `h`.
pub fn bin_frequency(k: usize, n: usize, h: f64) -> f64 {
    TAU * signed_bin(k, n) as f64 / (n as f64 * h)
}

/// The grid, zero-extended to `factor` times its size on the right and top.
pub fn zero_pad(f: &Grid2D, factor: usize) -> Result<Grid2D> {
    let factor = factor.max(1);
    let (w, h) = (f.width() * factor, f.height() * factor);
    let mut v = vec![0.0; w * h];
    for j in 0..f.height() {
        v[j * w..j * w + f.width()].copy_from_slice(&f.values()[j * f.width()..(j + 1) * f.width()]);
    }
    Grid2D::new(w, h, f.spacing(), f.origin(), v)
}

/// Discrete transform `f̂` of a grid on its own lattice.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &Grid2D) -> Spectrum {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft2::new(f.width(), f.height(), false).run(&mut data);
        Spectrum {
            width: f.width(),
            height: f.height(),
            spacing: f.spacing(),
            coeffs: data,
        }
    }

    /// Angular frequency `(ξ₁, ξ₂)` of bin `(k, l)`.
    pub fn frequency(&self, k: usize, l: usize) -> (f64, f64) {
        (
            bin_frequency(k, self.width, self.spacing),
            bin_frequency(l, self.height, self.spacing),
        )
    }

    /// `‖T_S f‖₂²` by Parseval, with `S` given as an indicator.
    pub fn energy_in<M: Fn(f64, f64) -> bool>(&self, mask: M) -> f64 {
        let mut s = 0.0;
        for l in 0..self.height {
            for k in 0..self.width {
                let (a, b) = self.frequency(k, l);
                if mask(a, b) {
                    s += self.coeffs[l * self.width + k].norm_sqr();
                }
            }
        }
        s * self.spacing * self.spacing / (self.width * self.height) as f64
    }
}

/// Inverse transform of `1_{S ∪ −S} f̂` on the lattice of `f`.
///
/// Symmetrising the region keeps the output real. On the discrete lattice
/// this is an orthogonal projection, so it is idempotent and self-adjoint;
/// zero-pad first (see [`zero_pad`]) to suppress wrap-around.
pub fn multiplier<M: Fn(f64, f64) -> bool>(f: &Grid2D, mask: M) -> Grid2D {
    let spec = Spectrum::of(f);
    let (w, h) = (spec.width, spec.height);
    let mut data = spec.coeffs.clone();
    for l in 0..h {
        for k in 0..w {
            let (a, b) = spec.frequency(k, l);
            // the mirrored bin has frequency exactly −ξ except on Nyquist rows
            let (mk, ml) = ((w - k) % w, (h - l) % h);
            let (ma, mb) = spec.frequency(mk, ml);
            if !(mask(a, b) || mask(ma, mb)) {
                data[l * w + k] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Fft2::new(w, h, true).run(&mut data);
    let scale = 1.0 / (w * h) as f64;
    f.with_values_unchecked(data.iter().map(|c| c.re * scale).collect())
}

/// Linear convolution `(K * f)(p) = Σ_q f(q) K(p − q) h²` over the grid.
///
/// The kernel is sampled at every offset reachable between two grid pixels
/// and the product is taken on a lattice padded by [`PAD_FACTOR`], so no
/// wrap-around occurs. Also returns the sampled kernel mass `Σ K h²`.
pub fn convolve<K: Fn(f64, f64) -> f64 + Sync>(f: &Grid2D, kernel: K) -> (Grid2D, f64) {
    let (w, h) = (f.width(), f.height());
    let (pw, ph) = (PAD_FACTOR * w, PAD_FACTOR * h);
    let sp = f.spacing();
    let area = sp * sp;
    let mut kern = vec![Complex64::new(0.0, 0.0); pw * ph];
    let mut mass = 0.0;
    for dj in -(h as isize - 1)..=(h as isize - 1) {
        let l = dj.rem_euclid(ph as isize) as usize;
        for di in -(w as isize - 1)..=(w as isize - 1) {
            let k = di.rem_euclid(pw as isize) as usize;
            let v = kernel(di as f64 * sp, dj as f64 * sp) * area;
            mass += v;
            kern[l * pw + k] = Complex64::new(v, 0.0);
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); pw * ph];
    for j in 0..h {
        for i in 0..w {
            data[j * pw + i] = Complex64::new(f.get(i, j), 0.0);
        }
    }
    let fwd = Fft2::new(pw, ph, false);
    fwd.run(&mut kern);
    fwd.run(&mut data);
    for (d, k) in data.iter_mut().zip(&kern) {
        *d *= k;
    }
    Fft2::new(pw, ph, true).run(&mut data);
    let scale = 1.0 / (pw * ph) as f64;
    let mut out = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            out.push(data[j * pw + i].re * scale);
        }
    }
    (f.with_values_unchecked(out), mass)
}

/// `K(x₁, x₂) = V_r(x₂ − αx₁)·φ_h(x₁) / 2π`; the factor makes the line
/// kernel a unit-mass average, so `∫∫K = ∫φ`.
pub fn gamma_kernel(alpha: f64, r: f64, h: f64, x1: f64, x2: f64) -> f64 {
    kernels::vp(r, x2 - alpha * x1) / TAU * kernels::bump(x1 / h) / h
}

/// `∫∫ K` of [`gamma_kernel`].
pub fn gamma_kernel_mass() -> f64 {
    kernels::BUMP_INTEGRAL
}

/// Transform of [`gamma_kernel`]: `V̂_r(ξ₂)·φ̂(h(ξ₁ + αξ₂))`, where
/// `φ̂(η) = A·4π·M(2η)·e^{−iη/2}` with `M` the centred cubic B-spline.
pub fn gamma_symbol(alpha: f64, r: f64, h: f64, xi1: f64, xi2: f64) -> Complex64 {
    let eta = h * (xi1 + alpha * xi2);
    let phi_hat = Complex64::from_polar(kernels::BUMP_SCALE * 4.0 * PI * cubic_bspline(2.0 * eta), -0.5 * eta);
    phi_hat * kernels::vp_hat(r, xi2)
}

fn cubic_bspline(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

/// `Γ_{α,r,h} f` together with the estimated fraction of kernel mass lost
/// to truncation, `|∫∫K − Σ K h²| / ∫∫K`.
pub fn gamma_op_with_loss(f: &Grid2D, alpha: f64, r: f64, h: f64) -> Result<(Grid2D, f64)> {
    ensure_finite("alpha", alpha)?;
    ensure_positive("r", r)?;
    ensure_positive("h", h)?;
    let (out, mass) = convolve(f, |x1, x2| gamma_kernel(alpha, r, h, x1, x2));
    let total = gamma_kernel_mass();
    Ok((out, (total - mass).abs() / total))
}

/// `Γ_{α,r,h} f = (V_r(x₂ − x₁α) φ_h(x₁) / 2π) * f`, rejecting grids too
/// small to hold the kernel.
pub fn gamma_op(f: &Grid2D, alpha: f64, r: f64, h: f64) -> Result<Grid2D> {
    let (out, lost) = gamma_op_with_loss(f, alpha, r, h)?;
    if lost > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            lost_fraction: lost,
            limit: TRUNCATION_LIMIT,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumpy(n: usize, sp: f64) -> Grid2D {
        let half = 0.5 * (n as f64 - 1.0) * sp;
        Grid2D::from_fn(n, n, sp, (-half, -half), |x, y| {
            (-(x * x + y * y) / 4.0).exp() * (1.0 + 0.5 * (1.3 * x - 0.7 * y).cos())
        })
        .unwrap()
    }

    #[test]
    fn convolution_with_a_delta_is_identity() {
        let f = bumpy(16, 0.5);
        let (g, mass) = convolve(&f, |x, y| if x == 0.0 && y == 0.0 { 4.0 } else { 0.0 });
        assert!((mass - 1.0).abs() < 1e-15);
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_is_linear_not_circular() {
        // a shift kernel moves mass off the grid instead of wrapping it
        let mut f = Grid2D::zeros(8, 8, 1.0, (0.0, 0.0)).unwrap();
        f.set(7, 3, 1.0);
        let (g, _) = convolve(&f, |x, y| if x == 1.0 && y == 0.0 { 1.0 } else { 0.0 });
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn gamma_of_constant_is_the_bump_mass() {
        let n = 256;
        let sp = 0.125;
        let f = Grid2D::from_fn(n, n, sp, (-16.0, -16.0), |_, _| 1.0).unwrap();
        let (g, lost) = gamma_op_with_loss(&f, 0.3, 8.0, 0.25).unwrap();
        assert!(lost < TRUNCATION_LIMIT, "{lost}");
        let v = g.get(n / 2, n / 2);
        assert!((v - kernels::BUMP_INTEGRAL).abs() < 1e-3 * kernels::BUMP_INTEGRAL, "{v}");
    }

    #[test]
    fn gamma_rejects_truncated_kernels() {
        let f = bumpy(16, 0.125);
        assert!(matches!(gamma_op(&f, 0.2, 1.0, 1.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn gamma_is_linear() {
        let f = bumpy(32, 0.25);
        let g = f.map(|v| (3.0 * v).sin());
        let combo = f.zip_with(&g, |a, b| 2.0 * a - 0.5 * b).unwrap();
        let (a, _) = gamma_op_with_loss(&f, 0.4, 2.0, 0.5).unwrap();
        let (b, _) = gamma_op_with_loss(&g, 0.4, 2.0, 0.5).unwrap();
        let (c, _) = gamma_op_with_loss(&combo, 0.4, 2.0, 0.5).unwrap();
        for p in 0..c.values().len() {
            let e = 2.0 * a.values()[p] - 0.5 * b.values()[p];
            assert!((c.values()[p] - e).abs() < 1e-10);
        }
    }

    #[test]
    fn symbol_matches_the_sampled_kernel() {
        // V_r has 1/x² tails, so a window of half-width D leaves an error of
        // order 1/(rD); check that it shrinks as the window grows
        let (alpha, r, h, sp) = (0.3, 4.0, 0.5, 0.0625);
        let freqs = [(0.0, 0.0), (1.2, 0.0), (0.0, 2.0), (2.7, 3.5), (-2.4, 7.9), (4.7, -6.3)];
        let err = |half: f64| {
            let n = (half / sp) as isize;
            let mut worst: f64 = 0.0;
            for &(xi1, xi2) in &freqs {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in -n..=n {
                    for i in -n..=n {
                        let (x1, x2) = (i as f64 * sp, j as f64 * sp);
                        let k = gamma_kernel(alpha, r, h, x1, x2);
                        acc += Complex64::from_polar(k, -(x1 * xi1 + x2 * xi2));
                    }
                }
                acc *= sp * sp;
                worst = worst.max((acc - gamma_symbol(alpha, r, h, xi1, xi2)).norm());
            }
            worst
        };
        let (coarse, fine) = (err(8.0), err(16.0));
        assert!(fine < 0.75 * coarse, "{coarse} {fine}");
        assert!(fine < 0.02 * gamma_kernel_mass(), "{fine}");
    }

    #[test]
    fn multiplier_is_an_orthogonal_projection() {
        let f = bumpy(32, 0.25);
        let g = f.map(|v| v * v - 0.3);
        let mask = |a: f64, b: f64| a > 1.0 && (b - 0.4 * a).abs() <= 5.0;
        let tf = multiplier(&f, mask);
        let ttf = multiplier(&tf, mask);
        for (a, b) in tf.values().iter().zip(ttf.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let dot = |x: &Grid2D, y: &Grid2D| x.values().iter().zip(y.values()).map(|(a, b)| a * b).sum::<f64>();
        let tg = multiplier(&g, mask);
        assert!((dot(&tf, &g) - dot(&f, &tg)).abs() < 1e-10);
        let all = multiplier(&f, |_, _| true);
        let none = multiplier(&f, |_, _| false);
        for (a, b) in all.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(none.max_abs() == 0.0);
    }

    #[test]
    fn parseval_on_a_partition() {
        let f = bumpy(32, 0.25);
        let s = Spectrum::of(&f);
        let inside = |a: f64, b: f64| a > 0.5 && b.abs() < 2.0 * a;
        let e1 = s.energy_in(inside);
        let e2 = s.energy_in(|a, b| !inside(a, b));
        let total = f.l2_norm().powi(2);
        assert!((e1 + e2 - total).abs() < 1e-10 * total);
    }

    #[test]
    fn padding_keeps_the_norm() {
        let f = bumpy(8, 0.5);
        let p = zero_pad(&f, 2).unwrap();
        assert_eq!((p.width(), p.height()), (16, 16));
        assert!((p.l2_norm() - f.l2_norm()).abs() < 1e-14);
    }
}
