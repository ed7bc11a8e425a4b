//! Exact Dynamic Mode Decomposition of a snapshot block.
//!
//! For a block `X = [x_1 .. x_ν]` with `X1 = [x_1 .. x_{ν-1}]` and
//! `X2 = [x_2 .. x_ν]`:
//!
//! ```text
//! X1 ≈ U Σ Vᵀ            (rank r)
//! Ã  = Uᵀ X2 V Σ⁻¹,  Ã W = W Λ
//! Φ  = X2 V Σ⁻¹ W,   b = argmin ‖Φ b - x_1‖
//! x̃_k = Re(Φ Λ^{k-1} b)
//! ```
//!
//! When the eigenvector matrix `W` is numerically singular the model keeps
//! the reduced operator and reconstructs through `U Ã^{k-1} Uᵀ x_1` instead.

use faer::linalg::matmul::matmul;
use faer::prelude::*;
use faer::{Accum, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Oversampling of the randomized range sketch.
pub const SKETCH_OVERSAMPLING: usize = 10;
/// Power iterations of the randomized range sketch.
pub const SKETCH_POWER_ITERATIONS: usize = 2;
/// Eigenvector condition number above which the spectral form is replaced
/// by reduced powers.
pub const EIGENVECTOR_CONDITION_LIMIT: f64 = 1e10;

/// `max(rows, cols) · ε`.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Number of singular values strictly above `rel_tol · σ_max`.
pub fn rank_from_singular_values(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Numerical rank; `rel_tol` defaults to [`default_rel_tol`]. An all-zero
/// matrix has rank 0.
pub fn numerical_rank(x: MatRef<'_, f64>, rel_tol: Option<f64>) -> Result<usize> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Degenerate("rank of an empty matrix".into()));
    }
    let tol = rel_tol.unwrap_or_else(|| default_rel_tol(x.nrows(), x.ncols()));
    let s = x
        .singular_values()
        .map_err(|e| Error::Decomposition {
            block: 0,
            reason: format!("singular values did not converge: {e:?}"),
        })?;
    Ok(rank_from_singular_values(&s, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdMethod {
    Deterministic,
    /// Range sketch with [`SKETCH_OVERSAMPLING`] extra columns and
    /// [`SKETCH_POWER_ITERATIONS`] power iterations.
    Randomized { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankPolicy {
    /// Numerical rank of the whole block with the default tolerance.
    Numerical,
    /// Numerical rank of the whole block with the given relative tolerance.
    RelTol(f64),
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmdOptions {
    pub rank: RankPolicy,
    pub svd: SvdMethod,
}

impl Default for DmdOptions {
    fn default() -> Self {
        Self {
            rank: RankPolicy::Numerical,
            svd: SvdMethod::Deterministic,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DmdDiagnostics {
    /// Rank asked for by the policy before capping.
    pub requested_rank: usize,
    /// Requested rank exceeded `min(rows, ν-1)`.
    pub rank_capped: bool,
    /// Rank lowered to the numerical rank of `X1`.
    pub rank_shrunk: bool,
    /// `σ_max / σ_min` of the eigenvector matrix.
    pub eigenvector_condition: f64,
    /// Eigenbasis judged unusable; reconstruction goes through `Ã` powers.
    pub defective: bool,
    /// `‖Φ b - x_1‖ / ‖x_1‖`.
    pub first_column_residual: f64,
    /// Largest `‖Im x̃_k‖ / ‖Re x̃_k‖` over the first and last block columns.
    pub imaginary_residual: f64,
}

#[derive(Clone, Debug)]
struct ReducedPowers {
    /// `U`, rows × r
    basis: Mat<f64>,
    /// `Ã`, r × r
    operator: Mat<f64>,
    /// `Uᵀ x_1`
    initial: Vec<f64>,
}

/// Fitted rank-r linear model of one snapshot block.
#[derive(Clone, Debug)]
pub struct DMDModel {
    rank: usize,
    start: usize,
    len: usize,
    eigenvalues: Vec<c64>,
    amplitudes: Vec<c64>,
    modes_re: Mat<f64>,
    modes_im: Mat<f64>,
    reduced: Option<ReducedPowers>,
    pub diagnostics: DmdDiagnostics,
}

impl DMDModel {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// First column of the block in the enclosing dataset (0-based).
    pub fn start(&self) -> usize {
        self.start
    }

    /// Block length ν.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rows(&self) -> usize {
        self.modes_re.nrows()
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn modes(&self) -> Mat<c64> {
        Mat::from_fn(self.rows(), self.rank, |i, j| {
            c64::new(self.modes_re[(i, j)], self.modes_im[(i, j)])
        })
    }

    pub fn is_defective(&self) -> bool {
        self.reduced.is_some()
    }

    /// Complex reconstruction `Φ Λ^j b` at local 0-based index `j`.
    fn spectral_column(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let coeff: Vec<c64> = self
            .eigenvalues
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, b)| b * l.powu(j as u32))
            .collect();
        let rows = self.rows();
        let mut re = vec![0.0; rows];
        let mut im = vec![0.0; rows];
        for (q, c) in coeff.iter().enumerate() {
            let pr = self.modes_re.col(q);
            let pi = self.modes_im.col(q);
            for i in 0..rows {
                re[i] += pr[i] * c.re - pi[i] * c.im;
                im[i] += pr[i] * c.im + pi[i] * c.re;
            }
        }
        (re, im)
    }

    fn reduced_column(red: &ReducedPowers, j: usize) -> Vec<f64> {
        let mut z = Mat::from_fn(red.initial.len(), 1, |i, _| red.initial[i]);
        for _ in 0..j {
            z = &red.operator * &z;
        }
        let x = &red.basis * &z;
        (0..x.nrows()).map(|i| x[(i, 0)]).collect()
    }

    /// Reconstructed column at 1-based local index `k` with its imaginary
    /// residual `‖Im‖ / ‖Re‖` (zero on the reduced-powers path).
    pub fn reconstruct_with_residual(&self, k: usize) -> Result<(Vec<f64>, f64)> {
        if k == 0 || k > self.len {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len,
            });
        }
        if let Some(red) = &self.reduced {
            return Ok((Self::reduced_column(red, k - 1), 0.0));
        }
        let (re, im) = self.spectral_column(k - 1);
        let ratio = norm2(&im) / norm2(&re).max(f64::MIN_POSITIVE);
        Ok((re, ratio))
    }

    /// All ν reconstructed columns of the block, rows × ν.
    pub fn reconstruct_block(&self) -> Mat<f64> {
        let (r, nu) = (self.rank, self.len);
        if let Some(red) = &self.reduced {
            let mut z = Mat::<f64>::zeros(r, nu);
            for i in 0..r {
                z[(i, 0)] = red.initial[i];
            }
            for j in 1..nu {
                let (prev, mut next) = z.as_mut().split_at_col_mut(j);
                matmul(
                    next.rb_mut().col_mut(0).as_mat_mut(),
                    Accum::Replace,
                    red.operator.as_ref(),
                    prev.rb().col(j - 1).as_mat(),
                    1.0,
                    Par::Seq,
                );
            }
            return &red.basis * &z;
        }
        let mut t_re = Mat::<f64>::zeros(r, nu);
        let mut t_im = Mat::<f64>::zeros(r, nu);
        for (q, (l, b)) in self.eigenvalues.iter().zip(&self.amplitudes).enumerate() {
            let mut c = *b;
            for j in 0..nu {
                t_re[(q, j)] = c.re;
                t_im[(q, j)] = c.im;
                c *= l;
            }
        }
        let par = faer::get_global_parallelism();
        let mut out = Mat::<f64>::zeros(self.rows(), nu);
        matmul(out.as_mut(), Accum::Replace, self.modes_re.as_ref(), t_re.as_ref(), 1.0, par);
        matmul(out.as_mut(), Accum::Add, self.modes_im.as_ref(), t_im.as_ref(), -1.0, par);
        out
    }

    /// `index,re,im,modulus,amplitude_re,amplitude_im` per eigenvalue.
    pub fn eigenvalues_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("index,re,im,modulus,amplitude_re,amplitude_im\n");
        for (q, (l, b)) in self.eigenvalues.iter().zip(&self.amplitudes).enumerate() {
            let _ = writeln!(
                s,
                "{q},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                l.re,
                l.im,
                l.norm(),
                b.re,
                b.im
            );
        }
        s
    }
}

/// `x̃_k` for 1-based local index `k`, real part.
pub fn dmd_reconstruct(model: &DMDModel, k: usize) -> Result<Vec<f64>> {
    model.reconstruct_with_residual(k).map(|(x, _)| x)
}

/// Deterministic exact DMD with fixed rank `r`.
pub fn exact_dmd(x: MatRef<'_, f64>, r: usize) -> Result<DMDModel> {
    fit_dmd(
        x,
        0,
        &DmdOptions {
            rank: RankPolicy::Fixed(r),
            svd: SvdMethod::Deterministic,
        },
    )
}

/// Randomized exact DMD with fixed rank `r`.
pub fn randomized_dmd(x: MatRef<'_, f64>, r: usize, seed: u64) -> Result<DMDModel> {
    fit_dmd(
        x,
        0,
        &DmdOptions {
            rank: RankPolicy::Fixed(r),
            svd: SvdMethod::Randomized { seed },
        },
    )
}

struct Factors {
    u: Mat<f64>,
    s: Vec<f64>,
    v: Mat<f64>,
}

fn decomposition_error(block: usize, what: &str, e: impl std::fmt::Debug) -> Error {
    Error::Decomposition {
        block,
        reason: format!("{what}: {e:?}"),
    }
}

fn thin_svd(x: MatRef<'_, f64>, block: usize) -> Result<Factors> {
    let svd = x.thin_svd().map_err(|e| decomposition_error(block, "SVD", e))?;
    let s: Vec<f64> = svd.S().column_vector().iter().cloned().collect();
    Ok(Factors {
        u: svd.U().to_owned(),
        s,
        v: svd.V().to_owned(),
    })
}

fn orthonormal_basis(y: MatRef<'_, f64>) -> Mat<f64> {
    y.qr().compute_thin_Q()
}

/// Approximate leading `k` singular triplets of `x` by a Gaussian range
/// sketch with power iterations.
fn sketched_svd(x: MatRef<'_, f64>, k: usize, seed: u64, block: usize) -> Result<Factors> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = Mat::<f64>::from_fn(x.ncols(), k, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis((x * &omega).as_ref());
    for _ in 0..SKETCH_POWER_ITERATIONS {
        let z = orthonormal_basis((x.transpose() * &q).as_ref());
        q = orthonormal_basis((x * &z).as_ref());
    }
    let b = q.transpose() * x;
    let f = thin_svd(b.as_ref(), block)?;
    Ok(Factors {
        u: &q * &f.u,
        s: f.s,
        v: f.v,
    })
}

/// Numerical rank of `[X1, x_last]` from the thin SVD of `X1`.
///
/// With `x_last = U z + ρ`, `[X1, x_last] = [U, ρ/‖ρ‖] B diag(Vᵀ, 1)` where
/// `B = [[Σ, z], [0, ‖ρ‖]]`, and both outer factors have orthonormal columns
/// (rows), so the singular values of the block are those of the small `B`.
fn bordered_rank(f: &Factors, x_last: &[f64], rel_tol: f64, block: usize) -> Result<usize> {
    let rows = f.u.nrows();
    let k = f.s.len();
    let ut = f.u.transpose();
    let mut rho = x_last.to_vec();
    let mut z = vec![0.0; k];
    // two passes of Gram-Schmidt keep ρ orthogonal to U at roundoff level
    for _ in 0..2 {
        let r = MatRef::from_column_major_slice(&rho, rows, 1);
        let dz = ut * r;
        for i in 0..k {
            z[i] += dz[(i, 0)];
        }
        let proj = &f.u * &dz;
        for i in 0..rows {
            rho[i] -= proj[(i, 0)];
        }
    }
    let has_complement = k < rows;
    let br = if has_complement { k + 1 } else { k };
    let b = Mat::<f64>::from_fn(br, k + 1, |i, j| {
        if i < k && j == i {
            f.s[i]
        } else if i < k && j == k {
            z[i]
        } else if i == k && j == k {
            norm2(&rho)
        } else {
            0.0
        }
    });
    let s = b
        .singular_values()
        .map_err(|e| decomposition_error(block, "bordered SVD", e))?;
    Ok(rank_from_singular_values(&s, rel_tol))
}

/// Fit a DMD model to the block `x` whose first column sits at `start` in
/// the enclosing dataset.
pub fn fit_dmd(x: MatRef<'_, f64>, start: usize, opts: &DmdOptions) -> Result<DMDModel> {
    let (rows, nu) = (x.nrows(), x.ncols());
    if nu < 2 {
        return Err(Error::Degenerate(format!(
            "block at column {start} has {nu} column(s), DMD needs at least 2"
        )));
    }
    if rows == 0 {
        return Err(Error::Degenerate("block has no rows".into()));
    }
    let x1 = x.subcols(0, nu - 1);
    let x2 = x.subcols(1, nu - 1);
    let cap = rows.min(nu - 1);
    let block_tol = match opts.rank {
        RankPolicy::RelTol(t) => t,
        _ => default_rel_tol(rows, nu),
    };
    let x1_tol = match opts.rank {
        RankPolicy::RelTol(t) => t,
        _ => default_rel_tol(rows, nu - 1),
    };
    let mut diag = DmdDiagnostics::default();

    let (factors, requested) = match (opts.svd, opts.rank) {
        (SvdMethod::Deterministic, RankPolicy::Fixed(r)) => (thin_svd(x1, start)?, r),
        (SvdMethod::Deterministic, _) => {
            let f = thin_svd(x1, start)?;
            let last: Vec<f64> = x.col(nu - 1).iter().cloned().collect();
            let r = bordered_rank(&f, &last, block_tol, start)?;
            (f, r)
        }
        (SvdMethod::Randomized { seed }, policy) => {
            let r = match policy {
                RankPolicy::Fixed(r) => r,
                _ => numerical_rank(x, Some(block_tol))?,
            };
            let k = (r.min(cap) + SKETCH_OVERSAMPLING).min(cap).max(1);
            (sketched_svd(x1, k, seed, start)?, r)
        }
    };
    diag.requested_rank = requested;
    if requested == 0 {
        return Err(Error::Degenerate(format!(
            "block at column {start} is numerically zero"
        )));
    }
    let mut r = requested;
    if r > cap {
        log::warn!("block {start}: rank {r} capped at min(rows, ν-1) = {cap}");
        r = cap;
        diag.rank_capped = true;
    }
    let x1_rank = rank_from_singular_values(&factors.s, x1_tol);
    if r > x1_rank {
        log::warn!("block {start}: rank {r} shrunk to numerical rank {x1_rank} of X1");
        r = x1_rank;
        diag.rank_shrunk = true;
    }
    if r == 0 {
        return Err(Error::Degenerate(format!(
            "block at column {start}: X1 is numerically zero"
        )));
    }

    let u = factors.u.subcols(0, r);
    let v = factors.v.subcols(0, r);
    // Y = X2 V Σ⁻¹
    let mut y = x2 * v;
    for j in 0..r {
        let inv = 1.0 / factors.s[j];
        for i in 0..rows {
            y[(i, j)] *= inv;
        }
    }
    let atilde = u.transpose() * &y;
    let evd = atilde
        .eigen()
        .map_err(|e| decomposition_error(start, "eigendecomposition", e))?;
    let eigenvalues: Vec<c64> = evd.S().column_vector().iter().cloned().collect();
    if eigenvalues.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
        return Err(Error::Decomposition {
            block: start,
            reason: "non-finite eigenvalue".into(),
        });
    }
    let w = evd.U();
    let w_re = Mat::<f64>::from_fn(r, r, |i, j| w[(i, j)].re);
    let w_im = Mat::<f64>::from_fn(r, r, |i, j| w[(i, j)].im);
    let modes_re = &y * &w_re;
    let modes_im = &y * &w_im;

    let wsv = w
        .singular_values()
        .map_err(|e| decomposition_error(start, "eigenvector SVD", e))?;
    let wmax = wsv.iter().cloned().fold(0.0, f64::max);
    let wmin = wsv.iter().cloned().fold(f64::INFINITY, f64::min);
    diag.eigenvector_condition = if wmin > 0.0 { wmax / wmin } else { f64::INFINITY };

    let first: Vec<f64> = x.col(0).iter().cloned().collect();
    let phi = Mat::<c64>::from_fn(rows, r, |i, j| c64::new(modes_re[(i, j)], modes_im[(i, j)]));
    let rhs = Mat::<c64>::from_fn(rows, 1, |i, _| c64::new(first[i], 0.0));
    let b = phi.col_piv_qr().solve_lstsq(&rhs);
    let amplitudes: Vec<c64> = (0..r).map(|j| b[(j, 0)]).collect();
    if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        diag.eigenvector_condition = f64::INFINITY;
    }

    let defective = !(diag.eigenvector_condition <= EIGENVECTOR_CONDITION_LIMIT);
    let reduced = if defective {
        log::warn!(
            "block {start}: eigenvector condition {:e}, reconstructing through reduced powers",
            diag.eigenvector_condition
        );
        let initial: Vec<f64> = {
            let z = u.transpose() * MatRef::from_column_major_slice(&first, rows, 1);
            (0..r).map(|i| z[(i, 0)]).collect()
        };
        Some(ReducedPowers {
            basis: u.to_owned(),
            operator: atilde.clone(),
            initial,
        })
    } else {
        None
    };
    diag.defective = defective;

    let mut model = DMDModel {
        rank: r,
        start,
        len: nu,
        eigenvalues,
        amplitudes,
        modes_re,
        modes_im,
        reduced,
        diagnostics: diag,
    };
    let (x0, im0) = model.reconstruct_with_residual(1)?;
    let res: Vec<f64> = x0.iter().zip(&first).map(|(a, b)| a - b).collect();
    model.diagnostics.first_column_residual = norm2(&res) / norm2(&first).max(f64::MIN_POSITIVE);
    let (_, im_last) = model.reconstruct_with_residual(nu)?;
    model.diagnostics.imaginary_residual = im0.max(im_last);
    Ok(model)
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    // scaled to avoid overflow for large entries
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_major(cols: &[Vec<f64>]) -> Vec<f64> {
        cols.iter().flatten().cloned().collect()
    }

    #[test]
    fn rank_examples() {
        let d = Mat::<f64>::from_fn(3, 3, |i, j| if i == j && i < 2 { 1.0 } else { 0.0 });
        assert_eq!(numerical_rank(d.as_ref(), None).unwrap(), 2);
        let a = [0.3, -1.2, 0.8, 2.0];
        let b = [1.0, 0.5, -0.25];
        let outer = Mat::<f64>::from_fn(4, 3, |i, j| a[i] * b[j]);
        assert_eq!(numerical_rank(outer.as_ref(), None).unwrap(), 1);
        assert_eq!(numerical_rank(Mat::<f64>::zeros(3, 4).as_ref(), None).unwrap(), 0);
    }

    #[test]
    fn singular_values_come_sorted() {
        let x = Mat::<f64>::from_fn(7, 11, |i, j| ((i * 13 + j * 7) % 10) as f64 - 4.5);
        let f = thin_svd(x.as_ref(), 0).unwrap();
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn scalar_recurrence() {
        let data: Vec<f64> = (0..6).map(|k| 0.9f64.powi(k)).collect();
        let x = MatRef::from_column_major_slice(&data, 1, 6);
        let m = exact_dmd(x, 1).unwrap();
        assert!((m.eigenvalues()[0] - c64::new(0.9, 0.0)).norm() < 1e-14);
        for k in 1..=6 {
            let xk = dmd_reconstruct(&m, k).unwrap();
            assert!((xk[0] - data[k - 1]).abs() < 1e-12);
        }
        assert!(dmd_reconstruct(&m, 0).is_err());
        assert!(dmd_reconstruct(&m, 7).is_err());
    }

    #[test]
    fn steady_state_block() {
        let c = vec![0.11, 0.07, 0.3];
        let data = col_major(&vec![c.clone(); 5]);
        let x = MatRef::from_column_major_slice(&data, 3, 5);
        let m = exact_dmd(x, 1).unwrap();
        assert!((m.eigenvalues()[0] - c64::new(1.0, 0.0)).norm() < 1e-12);
        let blk = m.reconstruct_block();
        for j in 0..5 {
            for i in 0..3 {
                assert!((blk[(i, j)] - c[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_spectrum_and_forward_iterates() {
        // eigenvalues 0.95 e^{±0.3i}
        let (rho, th) = (0.95f64, 0.3f64);
        let a = [[rho * th.cos(), -rho * th.sin()], [rho * th.sin(), rho * th.cos()]];
        let mut cols = vec![vec![1.0, 0.5]];
        for _ in 1..20 {
            let p = cols.last().unwrap();
            cols.push(vec![a[0][0] * p[0] + a[0][1] * p[1], a[1][0] * p[0] + a[1][1] * p[1]]);
        }
        let data = col_major(&cols);
        let x = MatRef::from_column_major_slice(&data, 2, 20);
        let m = exact_dmd(x, 2).unwrap();
        let mut got: Vec<c64> = m.eigenvalues().to_vec();
        got.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let want = [c64::from_polar(rho, -th), c64::from_polar(rho, th)];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10, "{g} vs {w}");
        }
        let blk = m.reconstruct_block();
        for (k, c) in cols.iter().enumerate() {
            for i in 0..2 {
                assert!((blk[(i, k)] - c[i]).abs() < 1e-10);
            }
            let single = dmd_reconstruct(&m, k + 1).unwrap();
            assert!((single[0] - blk[(0, k)]).abs() < 1e-12);
        }
        assert!(m.diagnostics.imaginary_residual < 1e-8);
    }

    #[test]
    fn bordered_rank_matches_direct_rank() {
        for (rows, cols, r) in [(12, 8, 3), (6, 15, 4), (5, 9, 5), (10, 4, 4)] {
            let a = Mat::<f64>::from_fn(rows, r, |i, j| ((i * 7 + j * 3) % 5) as f64 + (i * j) as f64 * 0.1);
            let b = Mat::<f64>::from_fn(r, cols, |i, j| ((i + 2 * j) % 7) as f64 - 3.0 + 0.01 * j as f64);
            let x = &a * &b;
            let f = thin_svd(x.as_ref().subcols(0, cols - 1), 0).unwrap();
            let last: Vec<f64> = x.col(cols - 1).iter().cloned().collect();
            let tol = default_rel_tol(rows, cols);
            assert_eq!(
                bordered_rank(&f, &last, tol, 0).unwrap(),
                numerical_rank(x.as_ref(), Some(tol)).unwrap(),
                "{rows}x{cols} rank {r}"
            );
        }
    }

    #[test]
    fn rank_capped_and_shrunk() {
        let data = col_major(&vec![vec![1.0, 2.0, 3.0]; 4]);
        let x = MatRef::from_column_major_slice(&data, 3, 4);
        let m = exact_dmd(x, 10).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(m.diagnostics.rank_capped && m.diagnostics.rank_shrunk);
        let z = vec![0.0; 6];
        assert!(exact_dmd(MatRef::from_column_major_slice(&z, 3, 2), 1).is_err());
        assert!(exact_dmd(MatRef::from_column_major_slice(&data[..3], 3, 1), 1).is_err());
    }

    #[test]
    fn jordan_block_uses_reduced_powers() {
        // x_{k+1} = J x_k with J = [[0.9, 1], [0, 0.9]]
        let mut cols = vec![vec![0.3, 1.0]];
        for _ in 1..12 {
            let p = cols.last().unwrap();
            cols.push(vec![0.9 * p[0] + p[1], 0.9 * p[1]]);
        }
        let data = col_major(&cols);
        let x = MatRef::from_column_major_slice(&data, 2, 12);
        let m = exact_dmd(x, 2).unwrap();
        let blk = m.reconstruct_block();
        for (k, c) in cols.iter().enumerate() {
            for i in 0..2 {
                let rel = (blk[(i, k)] - c[i]).abs() / c[i].abs().max(1.0);
                assert!(rel < 1e-6, "column {k}: {} vs {}", blk[(i, k)], c[i]);
            }
        }
        if m.is_defective() {
            let single = dmd_reconstruct(&m, 12).unwrap();
            assert!((single[0] - blk[(0, 11)]).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_matches_deterministic() {
        let (rows, nu, r) = (40, 30, 4);
        let a = Mat::<f64>::from_fn(rows, r, |i, j| ((i * 7 + j * 5) % 11) as f64 / 11.0 - 0.4);
        let lam: [f64; 4] = [0.99, 0.9, -0.5, 0.7];
        let data: Vec<f64> = (0..nu)
            .flat_map(|k| {
                let a = &a;
                (0..rows).map(move |i| (0..r).map(|j| a[(i, j)] * lam[j].powi(k as i32)).sum::<f64>())
            })
            .collect();
        let x = MatRef::from_column_major_slice(&data, rows, nu);
        let det = exact_dmd(x, r).unwrap().reconstruct_block();
        let rnd = randomized_dmd(x, r, 11).unwrap().reconstruct_block();
        let again = randomized_dmd(x, r, 11).unwrap().reconstruct_block();
        let diff = (&det - &rnd).norm_l2() / det.norm_l2();
        assert!(diff < 1e-8, "{diff}");
        assert_eq!(rnd, again);
    }

    #[test]
    fn eigenvalue_csv_has_one_row_per_mode() {
        let data: Vec<f64> = (0..4).map(|k| 0.5f64.powi(k)).collect();
        let m = exact_dmd(MatRef::from_column_major_slice(&data, 1, 4), 1).unwrap();
        let csv = m.eigenvalues_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("index,re,im,modulus"));
    }
}
