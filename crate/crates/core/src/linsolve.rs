//! Solvers for `(alpha I - gamma A) x = b`, `A` the Neumann Laplacian.
//!
//! `A` itself is not symmetric (boundary rows carry the doubled ghost
//! coefficient) but `W A` is, with `W` the diagonal trapezoid weights. So
//! we solve the equivalent SPD system `W (alpha I - gamma A) x = W b`,
//! either by a banded Cholesky factorisation or by Jacobi-preconditioned CG.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Banded Cholesky, factorised once.
    Direct,
    /// Conjugate gradient with diagonal preconditioning.
    ConjugateGradient,
}

/// Lower-triangular band factor `L` with `L Lᵀ = S`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    /// Row `i` stores columns `i - p ..= i` at offsets `0 ..= p`.
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Factor a symmetric positive definite operator of bandwidth `p`.
    pub fn factor(s: &SparseOperator) -> Result<Self> {
        let n = s.n();
        let p = s.bandwidth();
        let w = p + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in s.row(i) {
                if j <= i {
                    band[i * w + (j + p - i)] = v;
                }
            }
        }
        for j in 0..n {
            let row_j = j * w;
            let kmin = j.saturating_sub(p);
            let mut d = band[row_j + p];
            for k in kmin..j {
                let l = band[row_j + (k + p - j)];
                d -= l * l;
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::LinearSolve(format!(
                    "matrix not positive definite at pivot {j} (value {d:e})"
                )));
            }
            let ljj = d.sqrt();
            band[row_j + p] = ljj;
            for i in (j + 1)..n.min(j + p + 1) {
                let row_i = i * w;
                let kmin = i.saturating_sub(p);
                let mut acc = band[row_i + (j + p - i)];
                for k in kmin..j {
                    acc -= band[row_i + (k + p - i)] * band[row_j + (k + p - j)];
                }
                band[row_i + (j + p - i)] = acc / ljj;
            }
        }
        Ok(Self { n, p, band })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        for i in 0..n {
            let row = &self.band[i * w..(i + 1) * w];
            let kmin = i.saturating_sub(p);
            let mut acc = x[i];
            for k in kmin..i {
                acc -= row[k + p - i] * x[k];
            }
            x[i] = acc / row[p];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n.min(i + p + 1) {
                acc -= self.band[k * w + (i + p - k)] * x[k];
            }
            x[i] = acc / self.band[i * w + p];
        }
    }
}

#[derive(Clone, Debug)]
struct Cg {
    s: SparseOperator,
    inv_diag: Vec<f64>,
    tol: f64,
    max_iter: usize,
}

impl Cg {
    fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = b.len();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(());
        }
        // warm start from the Jacobi guess
        let mut x: Vec<f64> = b.iter().zip(&self.inv_diag).map(|(r, d)| r * d).collect();
        let mut r = self.s.mul_vec(&x);
        for (ri, bi) in r.iter_mut().zip(b.iter()) {
            *ri = bi - *ri;
        }
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let mut dir = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut q = vec![0.0; n];
        for _ in 0..self.max_iter {
            let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if rnorm <= self.tol * bnorm {
                b.copy_from_slice(&x);
                return Ok(());
            }
            self.s.mul_vec_into(&dir, &mut q);
            let alpha = rz / dir.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * dir[i];
                r[i] -= alpha * q[i];
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                dir[i] = z[i] + beta * dir[i];
            }
        }
        Err(Error::LinearSolve(format!(
            "CG did not reach relative residual {:e} in {} iterations",
            self.tol, self.max_iter
        )))
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Direct(BandedCholesky),
    Cg(Cg),
}

/// Prepared solver for `(alpha I - gamma A) x = b`.
#[derive(Clone, Debug)]
pub struct ShiftedLaplacianSolver {
    weights: Vec<f64>,
    backend: Backend,
}

impl ShiftedLaplacianSolver {
    pub fn new(
        grid: &Grid2D,
        laplacian: &SparseOperator,
        alpha: f64,
        gamma: f64,
        kind: SolverKind,
    ) -> Result<Self> {
        let weights: Vec<f64> = (0..grid.len()).map(|k| grid.trapezoid_weight(k)).collect();
        let m = laplacian.shifted(alpha, -gamma);
        let rows = (0..m.n())
            .map(|i| m.row(i).map(|(j, v)| (j, weights[i] * v)).collect())
            .collect();
        let s = SparseOperator::from_rows(m.n(), rows)?;
        let backend = match kind {
            SolverKind::Direct => Backend::Direct(BandedCholesky::factor(&s)?),
            SolverKind::ConjugateGradient => {
                let inv_diag = (0..s.n())
                    .map(|i| {
                        let d = s.get(i, i);
                        if d > 0.0 {
                            Ok(1.0 / d)
                        } else {
                            Err(Error::LinearSolve(format!("non-positive diagonal at {i}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Backend::Cg(Cg {
                    max_iter: 10 * s.n().max(100),
                    s,
                    inv_diag,
                    tol: 1e-12,
                })
            }
        };
        Ok(Self { weights, backend })
    }

    /// Overwrite `b` with the solution `x`.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        for (x, w) in b.iter_mut().zip(&self.weights) {
            *x *= w;
        }
        match &self.backend {
            Backend::Direct(f) => {
                f.solve_in_place(b);
                Ok(())
            }
            Backend::Cg(cg) => cg.solve_in_place(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_laplacian;

    fn residual(a: &SparseOperator, alpha: f64, gamma: f64, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        x.iter()
            .zip(&ax)
            .zip(b)
            .map(|((xi, axi), bi)| (alpha * xi - gamma * axi - bi).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn weighted_operator_is_symmetric() {
        let g = Grid2D::new(2.0, 3.0, 6, 5).unwrap();
        let a = build_laplacian(&g).to_dense();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let lhs = g.trapezoid_weight(i) * a[i][j];
                let rhs = g.trapezoid_weight(j) * a[j][i];
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn both_backends_solve_the_shifted_system() {
        let g = Grid2D::new(20.0, 20.0, 21, 17).unwrap();
        let a = build_laplacian(&g);
        let b: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 101) as f64 / 101.0).collect();
        for (alpha, gamma) in [(1.0, 1e-4), (1.06, 0.1), (1.0, 50.0)] {
            for kind in [SolverKind::Direct, SolverKind::ConjugateGradient] {
                let s = ShiftedLaplacianSolver::new(&g, &a, alpha, gamma, kind).unwrap();
                let mut x = b.clone();
                s.solve_in_place(&mut x).unwrap();
                let r = residual(&a, alpha, gamma, &x, &b);
                assert!(r < 1e-10, "{kind:?} alpha={alpha} gamma={gamma}: {r}");
            }
        }
    }

    #[test]
    fn non_spd_shift_is_rejected() {
        let g = Grid2D::new(1.0, 1.0, 4, 4).unwrap();
        let a = build_laplacian(&g);
        assert!(ShiftedLaplacianSolver::new(&g, &a, -1.0, 0.0, SolverKind::Direct).is_err());
    }
}
