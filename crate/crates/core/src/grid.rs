//! Uniform sampling grids on `[-L, L)` and complex-valued grid functions.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Uniform one-dimensional grid `x_k = -L + k*dx`, `k = 0..n`.
///
/// The right endpoint is excluded so that the Riemann sum coincides with the
/// trapezoid rule for functions that decay at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub half_width: f64,
    pub spacing: f64,
    pub len: usize,
}

impl Grid1d {
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && spacing > 0.0 && spacing < half_width) {
            return Err(CoreError::InvalidParameter(format!(
                "grid requires 0 < spacing < half_width, got L={half_width}, dx={spacing}"
            )));
        }
        let len = (2.0 * half_width / spacing).round() as usize;
        Ok(Self { half_width, spacing, len })
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.point(k))
    }

    pub fn sample_real(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let samples = self.points().map(|x| Complex64::new(f(x), 0.0)).collect();
        GridFunction { grid: *self, samples }
    }

    pub fn sample_complex(&self, f: impl Fn(f64) -> Complex64) -> GridFunction {
        let samples = self.points().map(f).collect();
        GridFunction { grid: *self, samples }
    }
}

/// Complex samples of a function on a [`Grid1d`]; the finite stand-in for an
/// element of a modulation space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid1d,
    pub samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid1d) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.len] }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(CoreError::GridMismatch(format!(
                "left grid (L={}, dx={}) != right grid (L={}, dx={})",
                self.grid.half_width, self.grid.spacing, other.grid.half_width, other.grid.spacing
            )));
        }
        Ok(())
    }

    /// Riemann-sum inner product `dx * sum f conj(g)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.spacing
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|a| a.norm_sqr()).sum();
        (s * self.grid.spacing).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|a| a * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Self { grid: self.grid, samples }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Self { grid: self.grid, samples }
    }
}
