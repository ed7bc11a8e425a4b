//! Library-versus-oracle plumbing for the scheme comparisons.

use chemopattern::discretization::StateField;
use chemopattern::integrators::{
    step_imsp, step_imsp_ie, step_symplectic_euler, InitialCondition, LinearSolveContext, Scheme,
    SimConfig,
};
use chemopattern::linsolve::SolverKind;
use chemopattern::models::{equilibrium, ModelKind, ModelParams};
use chemopattern::Grid2D;

use super::{lcg_field, max_abs_diff, DenseGrid, Kin, Oracle, OracleScheme};

pub const SCHEMES: [Scheme; 3] = [Scheme::SymplecticEuler, Scheme::ImspIe, Scheme::Imsp];

pub fn kin(p: &ModelParams) -> Kin {
    match p.kind {
        ModelKind::Momos => Kin::Momos {
            k1: p.k1,
            k2: p.k2,
            q: p.q,
            c: p.c.unwrap(),
        },
        ModelKind::Mimura => Kin::Mimura {
            k1: p.k1,
            k2: p.k2,
            q: p.q,
        },
    }
}

pub fn config(grid: Grid2D, params: ModelParams, scheme: Scheme, ht: f64) -> SimConfig {
    SimConfig {
        grid,
        params,
        scheme,
        ht,
        t_final: 10.0 * ht,
        snapshot_stride: 1,
        ic: InitialCondition {
            amp_u: 0.0,
            amp_v: 0.0,
            seed: 0,
        },
        solver: SolverKind::Direct,
    }
}

pub fn lib_step(s: &StateField, ctx: &LinearSolveContext, cfg: &SimConfig) -> StateField {
    match cfg.scheme {
        Scheme::SymplecticEuler => step_symplectic_euler(s, ctx, cfg),
        Scheme::ImspIe => step_imsp_ie(s, ctx, cfg),
        Scheme::Imsp => step_imsp(s, ctx, cfg),
    }
    .unwrap()
}

pub fn oracle_scheme(s: Scheme) -> OracleScheme {
    match s {
        Scheme::SymplecticEuler => OracleScheme::Se,
        Scheme::ImspIe => OracleScheme::ImspIe,
        Scheme::Imsp => OracleScheme::Imsp,
    }
}

/// Worst relative deviation between the library and the dense oracle over
/// `steps` steps from a strongly perturbed equilibrium.
pub fn oracle_gap(lx: f64, nx: usize, ny: usize, params: ModelParams, scheme: Scheme, ht: f64, steps: usize) -> f64 {
    let grid = Grid2D::new(lx, lx, nx, ny).unwrap();
    let cfg = config(grid, params, scheme, ht);
    let ctx = LinearSolveContext::new(&cfg).unwrap();
    let dg = DenseGrid::new(lx, lx, nx, ny);
    let oracle = Oracle {
        a: dg.laplacian(),
        grid: dg,
        kin: kin(&params),
        du: params.du,
        dv: params.dv,
        beta: params.beta,
        h: ht,
    };
    let e = equilibrium(&params);
    let n = nx * ny;
    let u0: Vec<f64> = lcg_field(n, 7).iter().map(|r| e.u_star * (1.0 + 0.2 * (r - 0.5))).collect();
    let v0: Vec<f64> = lcg_field(n, 11).iter().map(|r| e.v_star * (1.0 + 0.2 * (r - 0.5))).collect();
    let mut lib = StateField::new(&grid, u0.clone(), v0.clone()).unwrap();
    let (mut ou, mut ov) = (u0, v0);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        lib = lib_step(&lib, &ctx, &cfg);
        let (nu, nv) = oracle.step(oracle_scheme(scheme), &ou, &ov);
        ou = nu;
        ov = nv;
        let su = ou.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let sv = ov.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        worst = worst.max(max_abs_diff(&lib.u, &ou) / su).max(max_abs_diff(&lib.v, &ov) / sv);
    }
    worst
}
