//! Rectangular tensor grid on `[0, Lx] x [0, Ly]`.
//!
//! Nodes are numbered x-fastest: node `(i, j)` with `0 <= i < nx`,
//! `0 <= j < ny` has linear index `i + nx * j`. Every vector living on a
//! grid (state fields, snapshot blocks, CSV exports) uses this ordering.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 meshpoints per direction, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive and finite, got {lx}x{ly}"
            )));
        }
        Ok(Self {
            lx,
            ly,
            nx,
            ny,
            hx: lx / (nx - 1) as f64,
            hy: ly / (ny - 1) as f64,
        })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Total node count `nx * ny`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    /// Inverse of [`Grid2D::index`].
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// Trapezoidal weight of node `k` divided by `hx * hy`: 1 inside, 1/2 on
    /// edges, 1/4 at corners.
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        let (i, j) = self.coords(k);
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy
    }

    /// Evaluate `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.coords(k);
                f(self.x(i), self.y(j))
            })
            .collect()
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        Ok(())
    }
}
