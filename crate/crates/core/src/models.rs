//! Kinetics and linear stability of the two chemotaxis models.
//!
//! * MOMOS (microbial biomass `u`, organic matter `v`):
//!   `f = -k1 u - q u^2 + k2 v`, `g = k1 u - k2 v + c`.
//! * Mimura-Tsujikawa (individuals `u`, chemical `v`):
//!   `f = q u (1 - u)`, `g = k1 u - k2 v`.
//!
//! Both carry the chemotaxis flux `-beta div(u grad v)` in the `u` equation.
//! Linearising about the feasible equilibrium `(u*, v*)` and expanding in
//! Neumann eigenfunctions of `-Δ` with eigenvalue `λ` gives a 2x2 matrix
//! `H(λ)` whose characteristic polynomial is `μ² + Q1(λ) μ + Q0(λ)`, with
//! `Q0(λ) = A0 λ² + B0 λ + C0`. Instability requires `Q0 < 0` somewhere on
//! `λ > 0`, i.e. `B0 < 0` and `B0² - 4 A0 C0 > 0`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Momos,
    Mimura,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Momos => "momos",
            ModelKind::Mimura => "mimura",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "momos" => Ok(ModelKind::Momos),
            "mimura" | "mimura-tsujikawa" => Ok(ModelKind::Mimura),
            other => Err(Error::InvalidParams(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameter set of either model. `c` is only meaningful for MOMOS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub du: f64,
    pub dv: f64,
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
    pub q: f64,
    pub c: Option<f64>,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn momos(du: f64, dv: f64, beta: f64, k1: f64, k2: f64, q: f64, c: f64) -> Result<Self> {
        Self {
            kind: ModelKind::Momos,
            du,
            dv,
            beta,
            k1,
            k2,
            q,
            c: Some(c),
        }
        .validated()
    }

    pub fn mimura(du: f64, dv: f64, beta: f64, k1: f64, k2: f64, q: f64) -> Result<Self> {
        Self {
            kind: ModelKind::Mimura,
            du,
            dv,
            beta,
            k1,
            k2,
            q,
            c: None,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let positive = [
            ("Du", self.du),
            ("Dv", self.dv),
            ("k1", self.k1),
            ("k2", self.k2),
            ("q", self.q),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {x}")));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        match (self.kind, self.c) {
            (ModelKind::Momos, Some(c)) if c.is_finite() && c > 0.0 => Ok(self),
            (ModelKind::Momos, c) => Err(Error::InvalidParams(format!(
                "MOMOS needs a carbon input c > 0, got {c:?}"
            ))),
            (ModelKind::Mimura, None) => Ok(self),
            (ModelKind::Mimura, Some(_)) => Err(Error::InvalidParams(
                "the Mimura-Tsujikawa model takes no carbon input c".into(),
            )),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    /// Source term of the `v` equation that does not depend on the state.
    pub fn v_source(&self) -> f64 {
        self.c.unwrap_or(0.0)
    }

    fn carbon(&self) -> f64 {
        self.c.expect("MOMOS parameters carry c")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equilibrium {
    pub u_star: f64,
    pub v_star: f64,
}

/// Feasible (strictly positive) homogeneous equilibrium.
pub fn equilibrium(p: &ModelParams) -> Equilibrium {
    match p.kind {
        ModelKind::Momos => {
            let c = p.carbon();
            let u = (c / p.q).sqrt();
            Equilibrium {
                u_star: u,
                v_star: p.k1 / p.k2 * u + c / p.k2,
            }
        }
        ModelKind::Mimura => Equilibrium {
            u_star: 1.0,
            v_star: p.k1 / p.k2,
        },
    }
}

/// Every homogeneous equilibrium, feasible or not. MOMOS: `u = ±sqrt(c/q)`;
/// Mimura: `P0 = (0, 0)` and `P* = (1, k1/k2)`.
pub fn all_equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    match p.kind {
        ModelKind::Momos => {
            let c = p.carbon();
            let root = (c / p.q).sqrt();
            [root, -root]
                .into_iter()
                .map(|u| Equilibrium {
                    u_star: u,
                    v_star: u * (p.q * u + p.k1) / p.k2,
                })
                .collect()
        }
        ModelKind::Mimura => vec![
            Equilibrium {
                u_star: 0.0,
                v_star: 0.0,
            },
            equilibrium(p),
        ],
    }
}

/// Reaction terms `(f, g)` at a single point.
#[inline]
pub fn reaction_rhs(u: f64, v: f64, p: &ModelParams) -> (f64, f64) {
    match p.kind {
        ModelKind::Momos => (
            -p.k1 * u - p.q * u * u + p.k2 * v,
            p.k1 * u - p.k2 * v + p.carbon(),
        ),
        ModelKind::Mimura => (p.q * u * (1.0 - u), p.k1 * u - p.k2 * v),
    }
}

/// Jacobian of the reaction terms at the feasible equilibrium, row-major.
pub fn kinetic_jacobian(p: &ModelParams) -> [[f64; 2]; 2] {
    let e = equilibrium(p);
    match p.kind {
        ModelKind::Momos => [
            [-p.k1 - 2.0 * p.q * e.u_star, p.k2],
            [p.k1, -p.k2],
        ],
        ModelKind::Mimura => [[p.q - 2.0 * p.q * e.u_star, 0.0], [p.k1, -p.k2]],
    }
}

/// Critical chemotactic sensitivity: the model is unstable iff `beta` is
/// strictly above this value.
pub fn chemotaxis_threshold(p: &ModelParams) -> f64 {
    let (du, dv, k1, k2, q) = (p.du, p.dv, p.k1, p.k2, p.q);
    match p.kind {
        ModelKind::Momos => {
            let c = p.carbon();
            let s = (c * q).sqrt();
            q.sqrt() / (k1 * c.sqrt())
                * (du * k2 + dv * k1 + 2.0 * dv * s + (8.0 * du * dv * k2 * s).sqrt())
        }
        ModelKind::Mimura => (du * k2 + dv * q + 2.0 * (du * dv * q * k2).sqrt()) / k1,
    }
}

/// Necessary-condition threshold (`B0 < 0` iff `beta > tilde_beta`).
pub fn necessary_threshold(p: &ModelParams) -> f64 {
    match p.kind {
        ModelKind::Momos => {
            let c = p.carbon();
            let s = (c * p.q).sqrt();
            p.q.sqrt() / (p.k1 * c.sqrt()) * (p.du * p.k2 + 2.0 * p.dv * s + p.dv * p.k1)
        }
        ModelKind::Mimura => (p.du * p.k2 + p.dv * p.q) / p.k1,
    }
}

/// Coefficients of `Q0(λ) = a0 λ² + b0 λ + c0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionQuadratic {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

impl DispersionQuadratic {
    pub fn discriminant(&self) -> f64 {
        self.b0 * self.b0 - 4.0 * self.a0 * self.c0
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.a0 * lambda + self.b0) * lambda + self.c0
    }

    /// Minimiser `-b0 / (2 a0)` of the parabola.
    pub fn vertex(&self) -> f64 {
        -self.b0 / (2.0 * self.a0)
    }
}

pub fn dispersion_quadratic(p: &ModelParams) -> DispersionQuadratic {
    let (du, dv, k1, k2, q, beta) = (p.du, p.dv, p.k1, p.k2, p.q, p.beta);
    match p.kind {
        ModelKind::Momos => {
            let c = p.carbon();
            let s = (c * q).sqrt();
            DispersionQuadratic {
                a0: du * dv,
                b0: du * k2 + dv * (2.0 * s + k1) - beta * (c / q).sqrt() * k1,
                c0: 2.0 * k2 * s,
            }
        }
        ModelKind::Mimura => DispersionQuadratic {
            a0: du * dv,
            b0: du * k2 + dv * q - beta * k1,
            c0: q * k2,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConditionValues {
    /// `unstable` iff `b0 < 0 && delta > 0`.
    Momos { a0: f64, b0: f64, c0: f64, delta: f64 },
    /// `unstable` iff `first > 0 && second > 0`, where
    /// `first = beta k1 - Du k2 - Dv q` and `second = first² - 4 Du Dv q k2`.
    Mimura { first: f64, second: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstabilityReport {
    pub beta_threshold: f64,
    pub condition_values: ConditionValues,
    pub unstable: bool,
}

/// Evaluate the raw instability inequalities (not just the threshold).
pub fn instability_conditions(p: &ModelParams) -> InstabilityReport {
    let beta_threshold = chemotaxis_threshold(p);
    match p.kind {
        ModelKind::Momos => {
            let quad = dispersion_quadratic(p);
            let delta = quad.discriminant();
            InstabilityReport {
                beta_threshold,
                unstable: quad.b0 < 0.0 && delta > 0.0,
                condition_values: ConditionValues::Momos {
                    a0: quad.a0,
                    b0: quad.b0,
                    c0: quad.c0,
                    delta,
                },
            }
        }
        ModelKind::Mimura => {
            let first = p.beta * p.k1 - p.du * p.k2 - p.dv * p.q;
            let second = first * first - 4.0 * p.du * p.dv * p.q * p.k2;
            InstabilityReport {
                beta_threshold,
                unstable: first > 0.0 && second > 0.0,
                condition_values: ConditionValues::Mimura { first, second },
            }
        }
    }
}

/// `H(λ)` linearised at the feasible equilibrium, row-major.
pub fn linearization_matrix(p: &ModelParams, lambda_k: f64) -> [[f64; 2]; 2] {
    let e = equilibrium(p);
    let j = kinetic_jacobian(p);
    let chemo = p.beta * e.u_star * lambda_k;
    [
        [j[0][0] - p.du * lambda_k, j[0][1] + chemo],
        [j[1][0], j[1][1] - p.dv * lambda_k],
    ]
}

/// Largest real part of the two eigenvalues of `H(λ)`.
pub fn dispersion_max_growth(p: &ModelParams, lambda_k: f64) -> f64 {
    let h = linearization_matrix(p, lambda_k);
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // larger root without cancellation
        if tr >= 0.0 {
            0.5 * (tr + sq)
        } else if sq == 0.0 {
            0.5 * tr
        } else {
            let other = 0.5 * (tr - sq);
            det / other
        }
    } else {
        0.5 * tr
    }
}

/// Closed-form eigenvalues of the discrete Neumann `-Δ` on a tensor grid.
pub fn neumann_spectrum(grid: &crate::grid::Grid2D) -> Vec<f64> {
    use std::f64::consts::PI;
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::with_capacity(nx * ny);
    for l in 0..ny {
        let ly = (2.0 - 2.0 * (l as f64 * PI / (ny - 1) as f64).cos()) / grid.hy().powi(2);
        for j in 0..nx {
            let lx = (2.0 - 2.0 * (j as f64 * PI / (nx - 1) as f64).cos()) / grid.hx().powi(2);
            out.push(lx + ly);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
}

impl ScanRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Centre of cell `i` out of `res`.
    pub fn center(&self, i: usize, res: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / res as f64
    }

    pub fn cell_width(&self, res: usize) -> f64 {
        (self.hi - self.lo) / res as f64
    }
}

/// Instability mask over a `(beta, q)` grid of cell centres.
#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationMask {
    pub betas: Vec<f64>,
    pub qs: Vec<f64>,
    /// `mask[i][j]` for `(betas[i], qs[j])`.
    pub mask: Vec<Vec<bool>>,
}

impl BifurcationMask {
    /// `beta,q,unstable` rows in fixed decimal notation, beta-major.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("beta,q,unstable\n");
        for (i, &b) in self.betas.iter().enumerate() {
            for (j, &q) in self.qs.iter().enumerate() {
                let _ = writeln!(s, "{b:.10},{q:.10},{}", u8::from(self.mask[i][j]));
            }
        }
        s
    }
}

/// Evaluate [`instability_conditions`] at the centre of each cell of a
/// `resolution.0 x resolution.1` grid over `beta_range x q_range`.
///
/// `beta_range` may start at 0; `q_range` must be strictly positive.
pub fn bifurcation_scan(
    p_base: &ModelParams,
    beta_range: ScanRange,
    q_range: ScanRange,
    resolution: (usize, usize),
) -> Result<BifurcationMask> {
    let (nb, nq) = resolution;
    if nb < 2 || nq < 2 {
        return Err(Error::InvalidConfig(format!(
            "scan resolution must be at least 2 per axis, got {nb}x{nq}"
        )));
    }
    let ok = |r: ScanRange, strict: bool| {
        r.lo.is_finite() && r.hi.is_finite() && r.hi > r.lo && if strict { r.lo > 0.0 } else { r.lo >= 0.0 }
    };
    if !ok(beta_range, false) {
        return Err(Error::InvalidConfig(format!(
            "beta range must satisfy 0 <= lo < hi, got [{}, {}]",
            beta_range.lo, beta_range.hi
        )));
    }
    if !ok(q_range, true) {
        return Err(Error::InvalidConfig(format!(
            "q range must satisfy 0 < lo < hi, got [{}, {}]",
            q_range.lo, q_range.hi
        )));
    }
    let betas: Vec<f64> = (0..nb).map(|i| beta_range.center(i, nb)).collect();
    let qs: Vec<f64> = (0..nq).map(|j| q_range.center(j, nq)).collect();
    let mask = betas
        .par_iter()
        .map(|&b| {
            qs.iter()
                .map(|&q| instability_conditions(&p_base.with_beta(b).with_q(q)).unstable)
                .collect()
        })
        .collect();
    Ok(BifurcationMask { betas, qs, mask })
}
