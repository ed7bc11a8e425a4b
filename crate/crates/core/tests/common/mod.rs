//! Naive dense reference implementations shared by the integration tests.
//! The oracles never call into the crate's operators; `compare` drives the
//! library and an oracle side by side.
#![allow(dead_code)]

pub mod compare;

/// Neighbour indices with ghost reflection at both ends.
fn nb(i: usize, n: usize) -> (usize, usize) {
    let l = if i == 0 { 1 } else { i - 1 };
    let r = if i == n - 1 { n - 2 } else { i + 1 };
    (l, r)
}

pub struct DenseGrid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl DenseGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            hx: lx / (nx - 1) as f64,
            hy: ly / (ny - 1) as f64,
        }
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    fn k(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.k(i, j);
                let (l, r) = nb(i, self.nx);
                let (d, u) = nb(j, self.ny);
                a[k][self.k(l, j)] += 1.0 / (self.hx * self.hx);
                a[k][self.k(r, j)] += 1.0 / (self.hx * self.hx);
                a[k][self.k(i, d)] += 1.0 / (self.hy * self.hy);
                a[k][self.k(i, u)] += 1.0 / (self.hy * self.hy);
                a[k][k] -= 2.0 / (self.hx * self.hx) + 2.0 / (self.hy * self.hy);
            }
        }
        a
    }

    /// `-Δ(uv) + div(v ∇u)` evaluated node by node on ghost-reflected values.
    pub fn chemotaxis(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let (hx2, hy2) = (self.hx * self.hx, self.hy * self.hy);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.k(i, j);
                let (l, r) = nb(i, self.nx);
                let (d, up) = nb(j, self.ny);
                let (kl, kr, kd, ku) = (self.k(l, j), self.k(r, j), self.k(i, d), self.k(i, up));
                let w = |a: usize| u[a] * v[a];
                let lap_uv = (w(kl) - 2.0 * w(k) + w(kr)) / hx2 + (w(kd) - 2.0 * w(k) + w(ku)) / hy2;
                let fx = (v[k] + v[kr]) / (2.0 * self.hx) * (u[kr] - u[k]) / self.hx
                    - (v[k] + v[kl]) / (2.0 * self.hx) * (u[k] - u[kl]) / self.hx;
                let fy = (v[k] + v[ku]) / (2.0 * self.hy) * (u[ku] - u[k]) / self.hy
                    - (v[k] + v[kd]) / (2.0 * self.hy) * (u[k] - u[kd]) / self.hy;
                out[k] = -lap_uv + fx + fy;
            }
        }
        out
    }
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for q in c..=n {
                m[r][q] -= f * m[c][q];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|q| m[r][q] * x[q]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// `alpha I + gamma A`
pub fn shifted(a: &[Vec<f64>], alpha: f64, gamma: f64) -> Vec<Vec<f64>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| gamma * x + if i == j { alpha } else { 0.0 })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub enum Kin {
    /// f = -k1 u - q u² + k2 v, g = k1 u - k2 v + c
    Momos { k1: f64, k2: f64, q: f64, c: f64 },
    /// f = q u (1 - u), g = k1 u - k2 v
    Mimura { k1: f64, k2: f64, q: f64 },
}

impl Kin {
    pub fn f(&self, u: f64, v: f64) -> f64 {
        match *self {
            Kin::Momos { k1, k2, q, .. } => -k1 * u - q * u * u + k2 * v,
            Kin::Mimura { q, .. } => q * u * (1.0 - u),
        }
    }

    pub fn k1(&self) -> f64 {
        match *self {
            Kin::Momos { k1, .. } | Kin::Mimura { k1, .. } => k1,
        }
    }

    pub fn k2(&self) -> f64 {
        match *self {
            Kin::Momos { k2, .. } | Kin::Mimura { k2, .. } => k2,
        }
    }

    pub fn c(&self) -> f64 {
        match *self {
            Kin::Momos { c, .. } => c,
            Kin::Mimura { .. } => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleScheme {
    Se,
    ImspIe,
    Imsp,
}

pub struct Oracle {
    pub grid: DenseGrid,
    pub a: Vec<Vec<f64>>,
    pub kin: Kin,
    pub du: f64,
    pub dv: f64,
    pub beta: f64,
    pub h: f64,
}

impl Oracle {
    fn f_beta(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let chi = self.grid.chemotaxis(u, v);
        (0..u.len())
            .map(|k| self.beta * chi[k] + self.kin.f(u[k], v[k]))
            .collect()
    }

    pub fn step(&self, scheme: OracleScheme, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (h, k1, k2, c) = (self.h, self.kin.k1(), self.kin.k2(), self.kin.c());
        let rhs_v: Vec<f64> = (0..u.len()).map(|k| v[k] + h * (k1 * u[k] + c)).collect();
        match scheme {
            OracleScheme::Se | OracleScheme::ImspIe => {
                let m = shifted(&self.a, 1.0 + h * k2, -h * self.dv);
                let v1 = dense_solve(&m, &rhs_v);
                let fb = self.f_beta(u, &v1);
                let u1 = if scheme == OracleScheme::Se {
                    let au = matvec(&self.a, u);
                    (0..u.len()).map(|k| u[k] + h * self.du * au[k] + h * fb[k]).collect()
                } else {
                    let rhs: Vec<f64> = (0..u.len()).map(|k| u[k] + h * fb[k]).collect();
                    dense_solve(&shifted(&self.a, 1.0, -h * self.du), &rhs)
                };
                (u1, v1)
            }
            OracleScheme::Imsp => {
                let vbar: Vec<f64> = rhs_v.iter().map(|x| x / (1.0 + h * k2)).collect();
                let fb = self.f_beta(u, &vbar);
                let ubar: Vec<f64> = (0..u.len()).map(|k| u[k] + h * fb[k]).collect();
                let u1 = dense_solve(&shifted(&self.a, 1.0, -h * self.du), &ubar);
                let v1 = dense_solve(&shifted(&self.a, 1.0, -h * self.dv), &vbar);
                (u1, v1)
            }
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Small deterministic pseudo-random sequence for fixtures.
pub fn lcg_field(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Real linear system `x_{k+1} = P B P^{-1} x_k` with `B` block diagonal:
/// one scaled rotation per conjugate pair plus a real eigenvalue when the
/// size is odd. Data is generated in the `B` coordinates and mapped by `P`
/// so no inverse is ever formed.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub n: usize,
    pub p: Vec<Vec<f64>>,
    /// `(modulus, angle)` per pair
    pub pairs: Vec<(f64, f64)>,
    pub real: Option<f64>,
    pub z0: Vec<f64>,
}

impl BlockSystem {
    /// Build from raw draws: `pert` in `[-1, 1]` (n² entries), per-pair
    /// `(modulus, jitter in [-0.3, 0.3])`, and signed initial weights.
    pub fn from_draws(n: usize, pert: &[f64], pairs: &[(f64, f64)], real: f64, z0: Vec<f64>) -> Self {
        let scale = 0.3 / (n as f64).sqrt();
        let p = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f64::from(u8::from(i == j)) + scale * pert[i * n + j])
                    .collect()
            })
            .collect();
        // angles spread over (0, pi), jittered by under half a slot
        let slot = std::f64::consts::PI / (n / 2 + 1) as f64;
        let pairs = pairs
            .iter()
            .enumerate()
            .map(|(j, &(rho, jit))| (rho, slot * (j as f64 + 1.0 + jit)))
            .collect();
        Self {
            n,
            p,
            pairs,
            real: (n % 2 == 1).then_some(real),
            z0,
        }
    }

    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &(rho, th) in &self.pairs {
            out.push((rho * th.cos(), rho * th.sin()));
            out.push((rho * th.cos(), -rho * th.sin()));
        }
        if let Some(l) = self.real {
            out.push((l, 0.0));
        }
        out
    }

    fn step_b(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        for (j, &(rho, th)) in self.pairs.iter().enumerate() {
            let (a, b) = (z[2 * j], z[2 * j + 1]);
            out[2 * j] = rho * (th.cos() * a - th.sin() * b);
            out[2 * j + 1] = rho * (th.sin() * a + th.cos() * b);
        }
        if let Some(l) = self.real {
            out[self.n - 1] = l * z[self.n - 1];
        }
        out
    }

    pub fn snapshots(&self, m: usize) -> faer::Mat<f64> {
        let mut z = self.z0.clone();
        let mut x = faer::Mat::<f64>::zeros(self.n, m);
        for k in 0..m {
            for i in 0..self.n {
                x[(i, k)] = (0..self.n).map(|j| self.p[i][j] * z[j]).sum();
            }
            z = self.step_b(&z);
        }
        x
    }

    /// Largest column-wise relative max-norm error of `xt` against `x`.
    pub fn max_column_rel_error(x: &faer::Mat<f64>, xt: &faer::Mat<f64>) -> f64 {
        (0..x.ncols())
            .map(|k| {
                let num = (0..x.nrows()).map(|i| (x[(i, k)] - xt[(i, k)]).abs()).fold(0.0, f64::max);
                let den = (0..x.nrows()).map(|i| x[(i, k)].abs()).fold(0.0, f64::max);
                num / den
            })
            .fold(0.0, f64::max)
    }

    /// Worst distance from each true eigenvalue to its greedily matched
    /// recovered one, or `None` when the counts differ.
    pub fn eigenvalue_mismatch(&self, got: &[(f64, f64)]) -> Option<f64> {
        let want = self.eigenvalues();
        if want.len() != got.len() {
            return None;
        }
        let mut used = vec![false; got.len()];
        let mut worst: f64 = 0.0;
        for (re, im) in want {
            let (j, d) = got
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, z)| (j, ((z.0 - re).powi(2) + (z.1 - im).powi(2)).sqrt()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
            used[j] = true;
            worst = worst.max(d);
        }
        Some(worst)
    }
}
