//! Sampled real functions on a uniform planar lattice.
//!
//! Pixel `(i, j)` sits at `origin + (i·spacing, j·spacing)`; `i` runs along
//! `x₁` (columns) and `j` along `x₂` (rows). Values are stored row-major.
//! Off-lattice evaluation is bilinear, with zero extension outside.

use std::io::{Read, Write};

use crate::error::{ensure_finite, ensure_positive, invalid, Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"GRD2";

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    values: Vec<f64>,
    width: usize,
    height: usize,
    spacing: f64,
    origin: (f64, f64),
}

impl Grid2D {
    pub fn new(width: usize, height: usize, spacing: f64, origin: (f64, f64), values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("grid dimensions must be positive"));
        }
        ensure_positive("spacing", spacing)?;
        ensure_finite("origin x1", origin.0)?;
        ensure_finite("origin x2", origin.1)?;
        if values.len() != width * height {
            return Err(invalid(format!(
                "expected {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("grid values must be finite, found {v}")));
        }
        Ok(Self {
            values,
            width,
            height,
            spacing,
            origin,
        })
    }

    pub fn zeros(width: usize, height: usize, spacing: f64, origin: (f64, f64)) -> Result<Self> {
        Self::new(width, height, spacing, origin, vec![0.0; width * height])
    }

    /// Square grid of side `n` centred on the origin of the plane.
    pub fn centered(n: usize, spacing: f64) -> Result<Self> {
        let half = 0.5 * (n as f64 - 1.0) * spacing;
        Self::zeros(n, n, spacing, (-half, -half))
    }

    /// Samples `f(x₁, x₂)` at every pixel.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        width: usize,
        height: usize,
        spacing: f64,
        origin: (f64, f64),
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                values.push(f(origin.0 + i as f64 * spacing, origin.1 + j as f64 * spacing));
            }
        }
        Self::new(width, height, spacing, origin, values)
    }

    /// Same lattice, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, self.spacing, self.origin, values)
    }

    pub(crate) fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone_shape()
        }
    }

    fn clone_shape(&self) -> Self {
        Self {
            values: Vec::new(),
            width: self.width,
            height: self.height,
            spacing: self.spacing,
            origin: self.origin,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.width + i] = v;
    }

    /// Physical coordinates of pixel `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.spacing,
            self.origin.1 + j as f64 * self.spacing,
        )
    }

    pub fn same_lattice(&self, other: &Grid2D) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.spacing == other.spacing
            && self.origin == other.origin
    }

    /// Value at integer lattice offsets, zero outside.
    #[inline]
    pub(crate) fn at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.width as isize || j >= self.height as isize {
            0.0
        } else {
            self.values[j as usize * self.width + i as usize]
        }
    }

    /// Bilinear interpolation at a physical point, zero-extended.
    pub fn bilinear(&self, x1: f64, x2: f64) -> f64 {
        let u = (x1 - self.origin.0) / self.spacing;
        let v = (x2 - self.origin.1) / self.spacing;
        let fu = u.floor();
        let fv = v.floor();
        let (tu, tv) = (u - fu, v - fv);
        let (i, j) = (fu as isize, fv as isize);
        let a = self.at(i, j);
        let b = self.at(i + 1, j);
        let c = self.at(i, j + 1);
        let d = self.at(i + 1, j + 1);
        (1.0 - tv) * ((1.0 - tu) * a + tu * b) + tv * ((1.0 - tu) * c + tu * d)
    }

    /// Bilinear interpolant of `|f|` at a physical point.
    pub fn abs_bilinear(&self, x1: f64, x2: f64) -> f64 {
        let u = (x1 - self.origin.0) / self.spacing;
        let v = (x2 - self.origin.1) / self.spacing;
        let fu = u.floor();
        let fv = v.floor();
        let (tu, tv) = (u - fu, v - fv);
        let (i, j) = (fu as isize, fv as isize);
        let a = self.at(i, j).abs();
        let b = self.at(i + 1, j).abs();
        let c = self.at(i, j + 1).abs();
        let d = self.at(i + 1, j + 1).abs();
        (1.0 - tv) * ((1.0 - tu) * a + tu * b) + tv * ((1.0 - tu) * c + tu * d)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Grid2D {
        self.with_values_unchecked(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Grid2D {
        self.map(f64::abs)
    }

    pub fn scaled(&self, c: f64) -> Grid2D {
        self.map(|v| c * v)
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Grid2D, f: F) -> Result<Grid2D> {
        if !self.same_lattice(other) {
            return Err(invalid("grids live on different lattices"));
        }
        Ok(self.with_values_unchecked(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// Discrete `L²` norm with area weight `spacing²`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.spacing * self.spacing).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete integral `Σ f · spacing²`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing * self.spacing
    }

    /// Binary layout: `"GRD2"`, `u32` width, `u32` height, `u32` reserved
    /// (zero), then `f64` spacing and the row-major `f64` values, all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let width = u32::try_from(self.width).map_err(|_| invalid("width exceeds u32"))?;
        let height = u32::try_from(self.height).map_err(|_| invalid("height exceeds u32"))?;
        w.write_all(GRID_MAGIC)?;
        w.write_all(&width.to_le_bytes())?;
        w.write_all(&height.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&self.spacing.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads the binary layout of [`Grid2D::write_binary`]; the origin is
    /// placed so that the grid is centred on the plane origin.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Grid2D> {
        let mut header = [0u8; 24];
        r.read_exact(&mut header)
            .map_err(|e| Error::Format(format!("truncated grid header: {e}")))?;
        if &header[0..4] != GRID_MAGIC {
            return Err(Error::Format("bad magic, expected GRD2".into()));
        }
        let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes")) as usize;
        let (width, height) = (word(4), word(8));
        let spacing = f64::from_le_bytes(header[16..24].try_into().expect("8 bytes"));
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Format("grid size overflows".into()))?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != n * 8 {
            return Err(Error::Format(format!(
                "expected {} value bytes, found {}",
                n * 8,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let origin = (
            -0.5 * (width as f64 - 1.0) * spacing,
            -0.5 * (height as f64 - 1.0) * spacing,
        );
        Grid2D::new(width, height, spacing, origin, values)
    }

    /// Parses comma-separated rows (one line per `x₂` row, first line is
    /// `j = 0`). Blank lines and lines starting with `#` are skipped.
    pub fn from_csv(text: &str, spacing: f64) -> Result<Grid2D> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Format("ragged CSV rows".into()));
        }
        let origin = (
            -0.5 * (width as f64 - 1.0) * spacing,
            -0.5 * (height as f64 - 1.0) * spacing,
        );
        Grid2D::new(width, height, spacing, origin, rows.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid2D::new(2, 2, 1.0, (0.0, 0.0), vec![0.0; 3]).is_err());
        assert!(Grid2D::new(2, 1, 1.0, (0.0, 0.0), vec![0.0, f64::NAN]).is_err());
        assert!(Grid2D::new(0, 1, 1.0, (0.0, 0.0), vec![]).is_err());
        assert!(Grid2D::new(1, 1, 0.0, (0.0, 0.0), vec![0.0]).is_err());
    }

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let g = Grid2D::from_fn(8, 6, 0.5, (-1.0, 2.0), |x, y| 3.0 * x - 2.0 * y + 1.0).unwrap();
        for &(x, y) in &[(0.3, 2.7), (1.1, 3.9), (-0.99, 4.4)] {
            assert!((g.bilinear(x, y) - (3.0 * x - 2.0 * y + 1.0)).abs() < 1e-12);
        }
        assert_eq!(g.bilinear(-5.0, 0.0), 0.0);
        let (x, y) = g.point(3, 4);
        assert_eq!(g.bilinear(x, y), g.get(3, 4));
    }

    #[test]
    fn binary_round_trip() {
        let g = Grid2D::from_fn(5, 3, 0.25, (-0.5, -0.25), |x, y| x * y + 0.1).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"GRD2");
        assert_eq!(buf.len(), 24 + 15 * 8);
        let back = Grid2D::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!(back.spacing(), 0.25);
        assert!(Grid2D::read_binary(&buf[..30]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Grid2D::read_binary(bad.as_slice()).is_err());
    }

    #[test]
    fn csv_import() {
        let g = Grid2D::from_csv("1,2,3\n4,5,6\n", 0.5).unwrap();
        assert_eq!((g.width(), g.height()), (3, 2));
        assert_eq!(g.get(2, 1), 6.0);
        assert!(Grid2D::from_csv("1,2\n3\n", 1.0).is_err());
    }

    #[test]
    fn l2_norm_uses_area_weights() {
        let g = Grid2D::new(2, 2, 0.5, (0.0, 0.0), vec![1.0; 4]).unwrap();
        assert!((g.l2_norm() - 1.0).abs() < 1e-15);
    }
}
