//! Batch front end: `simulate`, `reconstruct` and `bifurcation`.
//!
//! Every command writes its artifacts into an existing output directory and
//! returns the text summary printed on stdout.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{grid_csv, load_dataset, save_dataset, write_atomic};
use crate::dmd::{DmdOptions, RankPolicy, SvdMethod};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::integrators::{simulate, Scheme};
use crate::linsolve::SolverKind;
use crate::manifest::Manifest;
use crate::models::{bifurcation_scan, instability_conditions, ModelKind, ScanRange};
use crate::pdmd::run_pdmd;
use crate::presets::{preset, ExperimentPreset, PresetName};

pub const DATASET_FILE: &str = "snapshots.chsnap";
pub const MEAN_FILE: &str = "mean.csv";
pub const FINAL_STATE_FILE: &str = "final_state.csv";
pub const SUMMARY_FILE: &str = "pdmd.manifest";
pub const SEGMENTS_FILE: &str = "segments.csv";
pub const EPS_FILE: &str = "eps.csv";
pub const RECONSTRUCTED_FILE: &str = "reconstructed_final.csv";
pub const MASK_FILE: &str = "bifurcation.csv";

#[derive(Debug, Parser)]
#[command(
    name = "chemopattern",
    version,
    about = "Chemotaxis pattern simulation and piecewise DMD reconstruction",
    after_help = "Datasets are held in memory: 2*nx*ny*m*8 bytes (about 0.7 GB for \
                  momos-stripes, 4 GB for momos-spots and mimura-hexagons at full length)."
)]
pub struct Cli {
    /// Worker threads for linear algebra and scans.
    #[arg(long, global = true, env = "CHEMOPATTERN_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a model and store the snapshot dataset.
    Simulate(SimulateArgs),
    /// Run piecewise DMD on a stored dataset.
    Reconstruct(ReconstructArgs),
    /// Scan the (beta, q) plane for chemotaxis-driven instability.
    Bifurcation(BifurcationArgs),
}

fn parse_pair<T: FromStr>(s: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got '{s}'"))?;
    let p = |x: &str| {
        x.trim()
            .parse::<T>()
            .map_err(|_| format!("cannot parse '{x}'"))
    };
    Ok((p(a)?, p(b)?))
}

fn parse_usize_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_pair(s)
}

fn parse_f64_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_pair(s)
}

/// Model parameter overrides shared by `simulate` and `bifurcation`.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Start from a published experiment.
    #[arg(long)]
    pub preset: Option<String>,
    /// momos or mimura; without a preset starts from that model's
    /// published parameters (stripes for momos, hexagons for mimura).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "Du")]
    pub du: Option<f64>,
    #[arg(long = "Dv")]
    pub dv: Option<f64>,
}

impl ParamArgs {
    fn base(&self) -> Result<ExperimentPreset> {
        let name = match (&self.preset, &self.model) {
            (Some(p), _) => p.parse::<PresetName>()?,
            (None, Some(m)) => match m.parse::<ModelKind>()? {
                ModelKind::Momos => PresetName::MomosStripes,
                ModelKind::Mimura => PresetName::MimuraHexagons,
            },
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "give --preset or --model".into(),
                ))
            }
        };
        let mut p = preset(name);
        if let (Some(_), Some(m)) = (&self.preset, &self.model) {
            if m.parse::<ModelKind>()? != p.sim.params.kind {
                return Err(Error::InvalidConfig(format!(
                    "--model {m} contradicts preset {}",
                    name.as_str()
                )));
            }
        }
        let params = &mut p.sim.params;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut params.beta, self.beta);
        set(&mut params.q, self.q);
        set(&mut params.k1, self.k1);
        set(&mut params.k2, self.k2);
        set(&mut params.du, self.du);
        set(&mut params.dv, self.dv);
        if let Some(c) = self.c {
            if params.kind != ModelKind::Momos {
                return Err(Error::InvalidParams(
                    "--c only applies to the momos model".into(),
                ));
            }
            params.c = Some(c);
        }
        p.sim.params = params.validated()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// se, imsp-ie or imsp
    #[arg(long)]
    pub scheme: Option<String>,
    /// Grid points nx,ny.
    #[arg(long, value_parser = parse_usize_pair)]
    pub grid: Option<(usize, usize)>,
    /// Domain size Lx,Ly.
    #[arg(long, value_parser = parse_f64_pair)]
    pub domain: Option<(f64, f64)>,
    #[arg(long)]
    pub ht: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Record every stride-th step.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Perturbation amplitude of u.
    #[arg(long)]
    pub amp_u: Option<f64>,
    /// Perturbation amplitude of v.
    #[arg(long)]
    pub amp_v: Option<f64>,
    /// Use conjugate gradients instead of the banded direct solver.
    #[arg(long)]
    pub cg: bool,
    /// Refuse to run unless the parameters satisfy the instability conditions.
    #[arg(long)]
    pub expect_pattern: bool,
    /// Existing output directory.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Dataset written by `simulate`.
    pub dataset: PathBuf,
    /// Per-segment max relative error threshold.
    #[arg(long, default_value_t = 1e-1)]
    pub tol: f64,
    /// Global relative Frobenius threshold.
    #[arg(long = "tolbar", default_value_t = 1e-3)]
    pub tol_bar: f64,
    #[arg(long = "N0", default_value_t = 1)]
    pub n0: usize,
    /// Partition cap; defaults to min(64, m/2).
    #[arg(long = "Nmax")]
    pub n_max: Option<usize>,
    /// Reuse fits of segments whose boundaries recur across passes.
    #[arg(long)]
    pub reuse_segments: bool,
    /// Use the randomized SVD with this seed.
    #[arg(long)]
    pub randomized_seed: Option<u64>,
    /// Existing output directory.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BifurcationArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// beta range lo,hi
    #[arg(long, value_parser = parse_f64_pair)]
    pub beta_range: (f64, f64),
    /// q range lo,hi
    #[arg(long, value_parser = parse_f64_pair)]
    pub q_range: (f64, f64),
    /// Cells along beta,q.
    #[arg(long, value_parser = parse_usize_pair, default_value = "200,200")]
    pub resolution: (usize, usize),
    /// Existing output directory.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        ))
    }
}

/// Configure rayon and faer worker counts.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(0) => return Err(Error::InvalidConfig("--threads must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    check_out_dir(&args.out)?;
    let mut p = args.params.base()?;
    let cfg = &mut p.sim;
    if let Some(s) = &args.scheme {
        cfg.scheme = s.parse::<Scheme>()?;
    }
    if args.grid.is_some() || args.domain.is_some() {
        let (nx, ny) = args.grid.unwrap_or((cfg.grid.nx(), cfg.grid.ny()));
        let (lx, ly) = args.domain.unwrap_or((cfg.grid.lx(), cfg.grid.ly()));
        cfg.grid = Grid2D::new(lx, ly, nx, ny)?;
    }
    if let Some(h) = args.ht {
        cfg.ht = h;
    }
    if let Some(t) = args.t_final {
        cfg.t_final = t;
    }
    if let Some(s) = args.stride {
        cfg.snapshot_stride = s;
    }
    if let Some(s) = args.seed {
        cfg.ic.seed = s;
    }
    if let Some(a) = args.amp_u {
        cfg.ic.amp_u = a;
    }
    if let Some(a) = args.amp_v {
        cfg.ic.amp_v = a;
    }
    if args.cg {
        cfg.solver = SolverKind::ConjugateGradient;
    }
    cfg.validate()?;
    let report = instability_conditions(&cfg.params);
    if args.expect_pattern && !report.unstable {
        return Err(Error::InvalidParams(format!(
            "--expect-pattern: beta = {} does not exceed the threshold {:.10}",
            cfg.params.beta, report.beta_threshold
        )));
    }
    let out = simulate(cfg)?;
    let mut x = out.snapshots.clone();
    x.manifest = out.manifest(cfg);
    x.manifest.set("preset", p.name.as_str());
    let path = args.out.join(DATASET_FILE);
    save_dataset(&x, &path)?;
    write_atomic(&args.out.join(MEAN_FILE), out.mean_series_csv().as_bytes())?;
    write_atomic(
        &args.out.join(FINAL_STATE_FILE),
        grid_csv(&cfg.grid, &out.final_state.u, &out.final_state.v).as_bytes(),
    )?;
    Ok(format!(
        "dataset {} : {} x {} ({} steps, {:.3} s)\nunstable = {} (threshold {:.10})\n",
        path.display(),
        x.rows(),
        x.m(),
        out.steps,
        out.wall_seconds,
        report.unstable,
        report.beta_threshold
    ))
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> Result<String> {
    check_out_dir(&args.out)?;
    let x = load_dataset(&args.dataset)?;
    let m = x.m();
    let mut cfg = crate::pdmd::PDMDConfig::new(args.tol, args.tol_bar);
    cfg.n0 = args.n0;
    cfg.n_max = args.n_max.unwrap_or((m / 2).min(64));
    cfg.reuse_segments = args.reuse_segments;
    cfg.dmd = DmdOptions {
        rank: RankPolicy::Numerical,
        svd: args
            .randomized_seed
            .map_or(SvdMethod::Deterministic, |seed| SvdMethod::Randomized { seed }),
    };
    let result = run_pdmd(&x, &cfg)?;
    let integration = x.manifest.get_f64("wall_seconds");
    let mut summary = Manifest::new();
    summary
        .set("dataset", args.dataset.display())
        .set("tol", args.tol)
        .set("tol_bar", args.tol_bar)
        .set("N0", args.n0)
        .set("N_max", cfg.n_max)
        .set("reuse_segments", args.reuse_segments)
        .set(
            "svd",
            args.randomized_seed
                .map_or("deterministic".to_string(), |s| format!("randomized seed {s}")),
        );
    summary.extend(&result.manifest(integration));
    write_atomic(&args.out.join(SUMMARY_FILE), summary.to_string().as_bytes())?;
    write_atomic(&args.out.join(SEGMENTS_FILE), result.segments_csv().as_bytes())?;
    write_atomic(&args.out.join(EPS_FILE), result.eps_csv(&x).as_bytes())?;
    let last = result.reconstruct_column(m)?;
    let n = x.n();
    write_atomic(
        &args.out.join(RECONSTRUCTED_FILE),
        grid_csv(x.grid(), &last[..n], &last[n..]).as_bytes(),
    )?;
    let mut text = format!(
        "N={}\nE={:.6e}\nmax err_i={:.6e}\nrestarts={}\nreconstruction seconds={:.3} (all passes {:.3})\n",
        result.n,
        result.global_error,
        result.max_segment_error(),
        result.restarts,
        result.final_pass_seconds,
        result.total_seconds
    );
    if let Some(t) = integration {
        text.push_str(&format!(
            "speed-up={:.2}x (integration {:.3} s)\n",
            t / result.final_pass_seconds,
            t
        ));
    }
    Ok(text)
}

pub fn cmd_bifurcation(args: &BifurcationArgs) -> Result<String> {
    check_out_dir(&args.out)?;
    let base = args.params.base()?.sim.params;
    let mask = bifurcation_scan(
        &base,
        ScanRange::new(args.beta_range.0, args.beta_range.1),
        ScanRange::new(args.q_range.0, args.q_range.1),
        args.resolution,
    )?;
    write_atomic(&args.out.join(MASK_FILE), mask.to_csv().as_bytes())?;
    let unstable = mask.mask.iter().flatten().filter(|&&b| b).count();
    Ok(format!(
        "{} model, {} of {} cells unstable\n",
        base.kind.name(),
        unstable,
        args.resolution.0 * args.resolution.1
    ))
}

pub fn run(cli: &Cli) -> Result<String> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Bifurcation(a) => cmd_bifurcation(a),
    }
}
