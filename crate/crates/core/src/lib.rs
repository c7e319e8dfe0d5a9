//! Directional maximal operators over generalized lacunary direction sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`lacunary`] builds and validates lacunary sequences, nested
//!   `μ`-lacunary decompositions, rank intervals and their poles.
//! * [`kernels`] evaluates the Fejér and Vallée-Poussin kernels, the
//!   band-limited bump `φ` and the dyadic majorant `ζ_r`.
//! * [`grid`] and [`ops`] hold sampled planar functions and the discrete
//!   directional, rectangular and strong maximal operators.
//! * [`spectral`] provides zero-padded FFT convolution and Fourier
//!   multipliers on the grid.
//! * [`sectors`] covers the frequency strips, their overlap counts and the
//!   empirical domination checks.
//! * [`harness`] generates test functions and sweeps empirical `L²` ratios.
//!
//! Per-pixel loops run on rayon when the `parallel` feature is enabled (the
//! default) and sequentially otherwise; results are bitwise identical.

pub mod error;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod lacunary;
pub mod ops;
pub mod par;
pub mod sectors;
pub mod spectral;
pub mod cli;

pub use error::{Error, Result};
pub use grid::Grid2D;
pub use lacunary::{DirectionSet, LacunaryDecomposition, RankInterval};
pub use ops::OperatorConfig;
