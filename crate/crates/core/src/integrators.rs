//! First-order symplectic-type integrators for the semi-discrete system
//!
//! ```text
//! u' = Du A u + f_β(u, v),   f_β = β·(-div(u ∇v))_h + f(u, v)
//! v' = Dv A v + g(u, v)
//! ```
//!
//! `g` is affine in `v` for both models (`g = k1 u - k2 v + c`), so every
//! implicit `v` update is a linear solve: sparse when coupled with diffusion
//! (symplectic Euler, IMSP_IE), pointwise in the IMSP intermediate stage.
//! All system matrices are constant over a run and are factorised once in
//! [`LinearSolveContext`].

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::SnapshotMatrix;
use crate::discretization::{spatial_mean, Discretization, StateField};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::linsolve::{ShiftedLaplacianSolver, SolverKind};
use crate::manifest::Manifest;
use crate::models::{equilibrium, reaction_rhs, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `v` implicit (with diffusion), then `u` fully explicit.
    SymplecticEuler,
    /// `v` as in symplectic Euler, then implicit `u` diffusion.
    ImspIe,
    /// Pointwise implicit kinetics for `v`, explicit `u` kinetics, then
    /// implicit diffusion for both.
    Imsp,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SymplecticEuler => "se",
            Scheme::ImspIe => "imsp-ie",
            Scheme::Imsp => "imsp",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "se" | "symplectic-euler" => Ok(Scheme::SymplecticEuler),
            "imsp-ie" => Ok(Scheme::ImspIe),
            "imsp" => Ok(Scheme::Imsp),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Equilibrium plus i.i.d. uniform `[0, 1)` noise scaled per component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialCondition {
    pub amp_u: f64,
    pub amp_v: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub grid: Grid2D,
    pub params: ModelParams,
    pub scheme: Scheme,
    pub ht: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub ic: InitialCondition,
    pub solver: SolverKind,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validated()?;
        if !(self.ht.is_finite() && self.ht > 0.0) {
            return Err(Error::InvalidConfig(format!("time step must be > 0, got {}", self.ht)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.ht) {
            return Err(Error::InvalidConfig(format!(
                "final time {} must be at least one step {}",
                self.t_final, self.ht
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidConfig("snapshot stride must be >= 1".into()));
        }
        if !(self.ic.amp_u.is_finite() && self.ic.amp_v.is_finite()) {
            return Err(Error::InvalidConfig("perturbation amplitudes must be finite".into()));
        }
        Ok(())
    }

    /// `round(T / h_t)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.ht).round() as usize
    }

    /// Final time snapped to the integer step count.
    pub fn effective_t_final(&self) -> f64 {
        self.steps() as f64 * self.ht
    }

    /// Recorded columns: every step index divisible by the stride,
    /// step 0 included.
    pub fn snapshot_count(&self) -> usize {
        self.steps() / self.snapshot_stride + 1
    }

    pub fn to_manifest(&self) -> Manifest {
        let p = &self.params;
        let mut m = Manifest::new();
        m.set("model", p.kind.name())
            .set("scheme", self.scheme.name())
            .set("nx", self.grid.nx())
            .set("ny", self.grid.ny())
            .set("Lx", self.grid.lx())
            .set("Ly", self.grid.ly())
            .set("Du", p.du)
            .set("Dv", p.dv)
            .set("beta", p.beta)
            .set("k1", p.k1)
            .set("k2", p.k2)
            .set("q", p.q);
        if let Some(c) = p.c {
            m.set("c", c);
        }
        m.set("ht", self.ht)
            .set("T", self.t_final)
            .set("steps", self.steps())
            .set("stride", self.snapshot_stride)
            .set("amp_u", self.ic.amp_u)
            .set("amp_v", self.ic.amp_v)
            .set("seed", self.ic.seed)
            .set(
                "solver",
                match self.solver {
                    SolverKind::Direct => "banded-cholesky",
                    SolverKind::ConjugateGradient => "pcg",
                },
            );
        m
    }
}

pub fn initial_condition(cfg: &SimConfig) -> StateField {
    let e = equilibrium(&cfg.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.ic.seed);
    let n = cfg.grid.len();
    let u = (0..n)
        .map(|_| e.u_star + cfg.ic.amp_u * rng.random::<f64>())
        .collect();
    let v = (0..n)
        .map(|_| e.v_star + cfg.ic.amp_v * rng.random::<f64>())
        .collect();
    StateField { u, v }
}

/// Factorisations of the constant system matrices a scheme needs.
pub struct LinearSolveContext {
    pub disc: Discretization,
    /// `I - h Du A`
    u_diffusion: Option<ShiftedLaplacianSolver>,
    /// `I - h Dv A`
    v_diffusion: Option<ShiftedLaplacianSolver>,
    /// `(1 + h k2) I - h Dv A`
    v_implicit: Option<ShiftedLaplacianSolver>,
    k2: f64,
}

impl LinearSolveContext {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let p = &cfg.params;
        check_v_kinetics_affine(p)?;
        let disc = Discretization::new(cfg.grid);
        let h = cfg.ht;
        let make = |alpha: f64, gamma: f64| {
            ShiftedLaplacianSolver::new(&disc.grid, &disc.laplacian, alpha, gamma, cfg.solver)
        };
        let (u_diffusion, v_diffusion, v_implicit) = match cfg.scheme {
            Scheme::SymplecticEuler => (None, None, Some(make(1.0 + h * p.k2, h * p.dv)?)),
            Scheme::ImspIe => (
                Some(make(1.0, h * p.du)?),
                None,
                Some(make(1.0 + h * p.k2, h * p.dv)?),
            ),
            Scheme::Imsp => (Some(make(1.0, h * p.du)?), Some(make(1.0, h * p.dv)?), None),
        };
        Ok(Self {
            disc,
            u_diffusion,
            v_diffusion,
            v_implicit,
            k2: p.k2,
        })
    }
}

/// The implicit `v` updates are linear solves only because `g` is affine
/// in `v` with slope `-k2`.
fn check_v_kinetics_affine(p: &ModelParams) -> Result<()> {
    for &u in &[0.0, 0.7, 3.0] {
        let g = |v: f64| reaction_rhs(u, v, p).1;
        let slope = g(1.0) - g(0.0);
        let curvature = g(2.0) - 2.0 * g(1.0) + g(0.0);
        if curvature.abs() > 1e-12 * (1.0 + g(0.0).abs()) || (slope + p.k2).abs() > 1e-12 * p.k2 {
            return Err(Error::InvalidParams(
                "v kinetics must be affine in v with slope -k2".into(),
            ));
        }
    }
    Ok(())
}

/// Reusable work buffers for stepping one trajectory.
struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
        }
    }
}

/// `out = u + h f_β(u, v)` pointwise plus the chemotaxis stencil;
/// `tmp`/`tmp2` are scratch.
fn explicit_u_update(
    ctx: &LinearSolveContext,
    p: &ModelParams,
    h: f64,
    u: &[f64],
    v: &[f64],
    out: &mut [f64],
    tmp: &mut [f64],
) {
    ctx.disc.chemotaxis_divergence_into(u, v, out, tmp);
    for k in 0..u.len() {
        let (f, _) = reaction_rhs(u[k], v[k], p);
        out[k] = u[k] + h * (p.beta * out[k] + f);
    }
}

fn solve(s: &Option<ShiftedLaplacianSolver>, x: &mut [f64]) -> Result<()> {
    s.as_ref()
        .expect("context prepared for this scheme")
        .solve_in_place(x)
}

fn step_in_place(
    state: &mut StateField,
    ctx: &LinearSolveContext,
    cfg: &SimConfig,
    ws: &mut Workspace,
) -> Result<()> {
    let p = &cfg.params;
    let h = cfg.ht;
    let src = p.v_source();
    let n = state.len();
    match cfg.scheme {
        Scheme::SymplecticEuler | Scheme::ImspIe => {
            // v_{n+1}: ((1 + h k2) I - h Dv A) v = v_n + h (k1 u_n + c)
            for k in 0..n {
                state.v[k] += h * (p.k1 * state.u[k] + src);
            }
            solve(&ctx.v_implicit, &mut state.v)?;
            explicit_u_update(ctx, p, h, &state.u, &state.v, &mut ws.a, &mut ws.b);
            if cfg.scheme == Scheme::SymplecticEuler {
                // + h Du A u_n
                ctx.disc.laplacian.mul_vec_into(&state.u, &mut ws.c);
                for k in 0..n {
                    state.u[k] = ws.a[k] + h * p.du * ws.c[k];
                }
            } else {
                solve(&ctx.u_diffusion, &mut ws.a)?;
                state.u.copy_from_slice(&ws.a);
            }
        }
        Scheme::Imsp => {
            let denom = 1.0 + h * ctx.k2;
            for k in 0..n {
                state.v[k] = (state.v[k] + h * (p.k1 * state.u[k] + src)) / denom;
            }
            explicit_u_update(ctx, p, h, &state.u, &state.v, &mut ws.a, &mut ws.b);
            solve(&ctx.u_diffusion, &mut ws.a)?;
            state.u.copy_from_slice(&ws.a);
            solve(&ctx.v_diffusion, &mut state.v)?;
        }
    }
    Ok(())
}

fn checked_step(
    state: &StateField,
    ctx: &LinearSolveContext,
    cfg: &SimConfig,
    scheme: Scheme,
) -> Result<StateField> {
    if cfg.scheme != scheme {
        return Err(Error::InvalidConfig(format!(
            "context prepared for {}, asked to step {}",
            cfg.scheme.name(),
            scheme.name()
        )));
    }
    cfg.grid.check_len(&state.u)?;
    cfg.grid.check_len(&state.v)?;
    let mut next = state.clone();
    let mut ws = Workspace::new(state.len());
    step_in_place(&mut next, ctx, cfg, &mut ws)?;
    next.check_finite().map_err(|_| Error::BlowUp { step: 1 })?;
    Ok(next)
}

pub fn step_symplectic_euler(
    state: &StateField,
    ctx: &LinearSolveContext,
    cfg: &SimConfig,
) -> Result<StateField> {
    checked_step(state, ctx, cfg, Scheme::SymplecticEuler)
}

pub fn step_imsp_ie(state: &StateField, ctx: &LinearSolveContext, cfg: &SimConfig) -> Result<StateField> {
    checked_step(state, ctx, cfg, Scheme::ImspIe)
}

pub fn step_imsp(state: &StateField, ctx: &LinearSolveContext, cfg: &SimConfig) -> Result<StateField> {
    checked_step(state, ctx, cfg, Scheme::Imsp)
}

/// Result of a full run.
#[derive(Clone, Debug)]
pub struct SimOutput {
    pub snapshots: SnapshotMatrix,
    /// Times of the recorded columns.
    pub times: Vec<f64>,
    pub mean_u: Vec<f64>,
    pub mean_v: Vec<f64>,
    /// State after the last step (recorded or not).
    pub final_state: StateField,
    pub steps: usize,
    /// Wall-clock seconds spent in the time loop.
    pub wall_seconds: f64,
}

impl SimOutput {
    pub fn mean_series_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,mean_u,mean_v\n");
        for ((t, mu), mv) in self.times.iter().zip(&self.mean_u).zip(&self.mean_v) {
            let _ = writeln!(s, "{t},{mu:.17e},{mv:.17e}");
        }
        s
    }

    pub fn manifest(&self, cfg: &SimConfig) -> Manifest {
        let mut m = cfg.to_manifest();
        m.set("m", self.snapshots.m())
            .set("dt_snap", self.snapshots.dt_snap())
            .set("wall_seconds", format!("{:.6}", self.wall_seconds));
        m
    }
}

/// Integrate from [`initial_condition`] to `cfg.t_final`, recording every
/// `snapshot_stride`-th state including the initial one.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let ctx = LinearSolveContext::new(cfg)?;
    let mut state = initial_condition(cfg);
    simulate_from(cfg, &ctx, &mut state)
}

fn simulate_from(
    cfg: &SimConfig,
    ctx: &LinearSolveContext,
    state: &mut StateField,
) -> Result<SimOutput> {
    let grid = cfg.grid;
    let n = grid.len();
    let steps = cfg.steps();
    let m = cfg.snapshot_count();
    let mut data = Vec::with_capacity(2 * n * m);
    let mut times = Vec::with_capacity(m);
    let mut mean_u = Vec::with_capacity(m);
    let mut mean_v = Vec::with_capacity(m);
    let mut record = |s: &StateField, step: usize| -> Result<()> {
        data.extend_from_slice(&s.u);
        data.extend_from_slice(&s.v);
        times.push(step as f64 * cfg.ht);
        mean_u.push(spatial_mean(&s.u, &grid)?);
        mean_v.push(spatial_mean(&s.v, &grid)?);
        Ok(())
    };
    let mut ws = Workspace::new(n);
    let started = Instant::now();
    record(state, 0)?;
    for step in 1..=steps {
        step_in_place(state, ctx, cfg, &mut ws).map_err(|e| Error::StepFailed {
            step,
            source: Box::new(e),
        })?;
        if state.check_finite().is_err() {
            return Err(Error::BlowUp { step });
        }
        if step % cfg.snapshot_stride == 0 {
            record(state, step)?;
        }
    }
    let wall_seconds = started.elapsed().as_secs_f64();
    let mut snapshots =
        SnapshotMatrix::from_column_major(data, grid, 0.0, cfg.ht * cfg.snapshot_stride as f64)?;
    snapshots.manifest = cfg.to_manifest();
    Ok(SimOutput {
        snapshots,
        times,
        mean_u,
        mean_v,
        final_state: state.clone(),
        steps,
        wall_seconds,
    })
}
