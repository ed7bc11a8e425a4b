//! Second-order finite differences with homogeneous Neumann closure.
//!
//! Boundary rows use the fictitious-node identity `u(-h) = u(h)`: the
//! missing neighbour across an edge is replaced by the reflected interior
//! neighbour. The same reflection is applied to every field (u and v), so
//! constant fields lie in the null space of every operator built here.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::sparse::SparseOperator;

/// Paired `(u, v)` values on a grid at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StateField {
    pub fn new(grid: &Grid2D, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        grid.check_len(&u)?;
        grid.check_len(&v)?;
        let s = Self { u, v };
        s.check_finite()?;
        Ok(s)
    }

    pub fn constant(grid: &Grid2D, u: f64, v: f64) -> Self {
        Self {
            u: vec![u; grid.len()],
            v: vec![v; grid.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// First non-finite entry, counting u entries before v entries.
    pub fn check_finite(&self) -> Result<()> {
        match self.u.iter().chain(&self.v).position(|x| !x.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

#[inline]
fn reflect(i: usize, n: usize) -> (usize, usize) {
    let left = if i == 0 { 1 } else { i - 1 };
    let right = if i + 1 == n { n - 2 } else { i + 1 };
    (left, right)
}

/// Five-point Neumann Laplacian. Every row sums to zero.
pub fn build_laplacian(grid: &Grid2D) -> SparseOperator {
    let (nx, ny) = (grid.nx(), grid.ny());
    let cx = 1.0 / (grid.hx() * grid.hx());
    let cy = 1.0 / (grid.hy() * grid.hy());
    let rows = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let (il, ir) = reflect(i, nx);
            let (jd, ju) = reflect(j, ny);
            vec![
                (k, -2.0 * cx - 2.0 * cy),
                (grid.index(il, j), cx),
                (grid.index(ir, j), cx),
                (grid.index(i, jd), cy),
                (grid.index(i, ju), cy),
            ]
        })
        .collect();
    SparseOperator::from_rows(grid.len(), rows).expect("stencil columns are in range")
}

/// Grid plus its Laplacian, with scratch-free kernels for the time loop.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: Grid2D,
    pub laplacian: SparseOperator,
}

impl Discretization {
    pub fn new(grid: Grid2D) -> Self {
        let laplacian = build_laplacian(&grid);
        Self { grid, laplacian }
    }

    /// `out = -Δ(u v) + div(v ∇u)`, the discrete `-div(u ∇v)`.
    ///
    /// `scratch` must have the grid length; it receives `u ⊙ v`.
    pub fn chemotaxis_divergence_into(
        &self,
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        for ((w, &a), &b) in scratch.iter_mut().zip(u).zip(v) {
            *w = a * b;
        }
        self.laplacian.mul_vec_into(scratch, out);
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let cx = 0.5 / (g.hx() * g.hx());
        let cy = 0.5 / (g.hy() * g.hy());
        for j in 0..ny {
            let (jd, ju) = reflect(j, ny);
            for i in 0..nx {
                let (il, ir) = reflect(i, nx);
                let k = i + nx * j;
                let (uk, vk) = (u[k], v[k]);
                let (l, r) = (il + nx * j, ir + nx * j);
                let (d, t) = (i + nx * jd, i + nx * ju);
                let flux_x = (vk + v[r]) * (u[r] - uk) - (vk + v[l]) * (uk - u[l]);
                let flux_y = (vk + v[t]) * (u[t] - uk) - (vk + v[d]) * (uk - u[d]);
                out[k] = cx * flux_x + cy * flux_y - out[k];
            }
        }
    }

    pub fn chemotaxis_divergence(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(u)?;
        self.grid.check_len(v)?;
        let mut out = vec![0.0; u.len()];
        let mut scratch = vec![0.0; u.len()];
        self.chemotaxis_divergence_into(u, v, &mut out, &mut scratch);
        Ok(out)
    }
}

/// Discrete `-div(u ∇v)` on `grid`; see [`Discretization::chemotaxis_divergence_into`].
pub fn chemotaxis_divergence(u: &[f64], v: &[f64], grid: &Grid2D) -> Result<Vec<f64>> {
    Discretization::new(*grid).chemotaxis_divergence(u, v)
}

/// Domain average by the tensor trapezoidal rule.
pub fn spatial_mean(f: &[f64], grid: &Grid2D) -> Result<f64> {
    grid.check_len(f)?;
    let total: f64 = f
        .iter()
        .enumerate()
        .map(|(k, &x)| grid.trapezoid_weight(k) * x)
        .sum();
    Ok(total * grid.hx() * grid.hy() / grid.area())
}
