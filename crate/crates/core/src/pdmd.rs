//! Piecewise DMD: split the snapshot window into `N` segments, fit one DMD
//! model per segment, and grow `N` until every segment and the whole
//! reconstruction meet their error thresholds.
//!
//! ```text
//! err(i) = max_{k in segment i} ‖x_k - x̃_k‖_∞ / ‖x_k‖_∞      <= tol
//! E(N)   = ‖X - X̃‖_F / ‖X‖_F                                  <= tol_bar
//! ε(t_k) = ‖x_k - x̃_k‖_2 / ‖x_k‖_2
//! ```
//!
//! A failing segment aborts the pass at once and the next pass starts over
//! with `N + 1`. The reconstruction itself is not stored: the result keeps
//! the fitted models and rebuilds columns on demand.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

use faer::{Mat, MatRef};

use crate::dataset::SnapshotMatrix;
use crate::dmd::{fit_dmd, DMDModel, DmdOptions};
use crate::error::{Error, Result};
use crate::manifest::Manifest;

/// One segment of a partition. `columns` is 0-based and half-open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    /// 1-based segment number.
    pub index: usize,
    pub columns: Range<usize>,
}

impl Segment {
    /// First column, 1-based.
    pub fn first(&self) -> usize {
        self.columns.start + 1
    }

    /// Last column, 1-based inclusive.
    pub fn last(&self) -> usize {
        self.columns.end
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// `N` segments of `ν = floor(m/N)` columns, the last one taking the
/// remainder.
pub fn partition(m: usize, n: usize) -> Result<Vec<Segment>> {
    if n == 0 {
        return Err(Error::InvalidConfig("partition count must be >= 1".into()));
    }
    let nu = m / n;
    if nu < 2 {
        return Err(Error::Degenerate(format!(
            "{m} columns split into {n} segments leaves fewer than 2 per segment"
        )));
    }
    Ok((0..n)
        .map(|i| Segment {
            index: i + 1,
            columns: i * nu..if i + 1 == n { m } else { (i + 1) * nu },
        })
        .collect())
}

fn check_shapes(x: MatRef<'_, f64>, xt: MatRef<'_, f64>) -> Result<()> {
    if x.nrows() != xt.nrows() || x.ncols() != xt.ncols() {
        return Err(Error::LengthMismatch {
            expected: x.nrows() * x.ncols(),
            actual: xt.nrows() * xt.ncols(),
        });
    }
    Ok(())
}

/// Per-column residual figures.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct ColumnFit {
    /// `‖x - x̃‖_∞ / ‖x‖_∞`
    rel_inf: f64,
    /// `‖x - x̃‖_2²`
    residual_sq: f64,
    /// `‖x‖_2²`
    norm_sq: f64,
}

/// `offset` is the 0-based dataset index of the first column, used only in
/// error reports.
fn column_fits(x: MatRef<'_, f64>, xt: MatRef<'_, f64>, offset: usize) -> Result<Vec<ColumnFit>> {
    check_shapes(x, xt)?;
    (0..x.ncols())
        .map(|j| {
            let (a, b) = (x.col(j), xt.col(j));
            let mut fit = ColumnFit::default();
            let (mut xmax, mut dmax) = (0.0f64, 0.0f64);
            for (xi, yi) in a.iter().zip(b.iter()) {
                let d = xi - yi;
                xmax = xmax.max(xi.abs());
                dmax = dmax.max(d.abs());
                fit.residual_sq += d * d;
                fit.norm_sq += xi * xi;
            }
            if xmax == 0.0 {
                return Err(Error::ZeroNormColumn {
                    column: offset + j + 1,
                });
            }
            fit.rel_inf = dmax / xmax;
            Ok(fit)
        })
        .collect()
}

/// Worst column-wise relative max-norm error.
pub fn segment_error(x: MatRef<'_, f64>, xt: MatRef<'_, f64>) -> Result<f64> {
    Ok(column_fits(x, xt, 0)?
        .iter()
        .map(|f| f.rel_inf)
        .fold(0.0, f64::max))
}

/// Relative Frobenius error.
pub fn global_error(x: MatRef<'_, f64>, xt: MatRef<'_, f64>) -> Result<f64> {
    check_shapes(x, xt)?;
    let nx = x.norm_l2();
    if nx == 0.0 {
        return Err(Error::Degenerate("reference matrix has zero norm".into()));
    }
    Ok((x - xt).norm_l2() / nx)
}

/// Column-wise relative 2-norm error.
pub fn error_over_time(x: MatRef<'_, f64>, xt: MatRef<'_, f64>) -> Result<Vec<f64>> {
    Ok(column_fits(x, xt, 0)?
        .iter()
        .map(|f| (f.residual_sq / f.norm_sq).sqrt())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PDMDConfig {
    pub n0: usize,
    pub tol: f64,
    pub tol_bar: f64,
    pub n_max: usize,
    pub dmd: DmdOptions,
    /// Keep fits of segments whose boundaries recur in a later pass.
    pub reuse_segments: bool,
}

impl PDMDConfig {
    pub fn new(tol: f64, tol_bar: f64) -> Self {
        Self {
            n0: 1,
            tol,
            tol_bar,
            n_max: 64,
            dmd: DmdOptions::default(),
            reuse_segments: false,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.tol > 0.0 && self.tol_bar > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be > 0, got tol={} tol_bar={}",
                self.tol, self.tol_bar
            )));
        }
        if self.n0 == 0 || self.n0 > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= N0 <= N_max, got N0={} N_max={}",
                self.n0, self.n_max
            )));
        }
        if self.n_max > m / 2 {
            return Err(Error::InvalidConfig(format!(
                "N_max={} exceeds m/2 = {} for m={m}",
                self.n_max,
                m / 2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentReport {
    pub segment: Segment,
    pub rank: usize,
    pub err: f64,
    pub defective: bool,
}

/// Outcome of a successful pDMD run.
#[derive(Clone, Debug)]
pub struct PDMDResult {
    pub n: usize,
    pub segments: Vec<SegmentReport>,
    pub models: Vec<DMDModel>,
    pub global_error: f64,
    /// ε(t_k) for every column.
    pub eps: Vec<f64>,
    /// Partition counts tried, in order.
    pub visited: Vec<usize>,
    pub restarts: usize,
    /// Wall-clock seconds of the successful pass.
    pub final_pass_seconds: f64,
    /// Wall-clock seconds of all passes.
    pub total_seconds: f64,
    rows: usize,
    m: usize,
}

impl PDMDResult {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_segment_error(&self) -> f64 {
        self.segments.iter().map(|s| s.err).fold(0.0, f64::max)
    }

    /// Reconstructed column at 1-based dataset index `k`.
    pub fn reconstruct_column(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.m {
            return Err(Error::IndexOutOfRange { index: k, len: self.m });
        }
        let model = self
            .models
            .iter()
            .find(|md| k - 1 < md.start() + md.len())
            .expect("segments tile the dataset");
        model.reconstruct_with_residual(k - model.start()).map(|(x, _)| x)
    }

    /// Materialize the full `rows × m` reconstruction.
    pub fn reconstruct(&self) -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(self.rows, self.m);
        for md in &self.models {
            out.as_mut()
                .subcols_mut(md.start(), md.len())
                .copy_from(md.reconstruct_block());
        }
        out
    }

    /// `i,start,end,rank,err_i` with 1-based inclusive column bounds.
    pub fn segments_csv(&self) -> String {
        let mut s = String::from("i,start,end,rank,err_i\n");
        for r in &self.segments {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6e}",
                r.segment.index,
                r.segment.first(),
                r.segment.last(),
                r.rank,
                r.err
            );
        }
        s
    }

    /// `t,eps` using the dataset's snapshot times.
    pub fn eps_csv(&self, x: &SnapshotMatrix) -> String {
        let mut s = String::from("t,eps\n");
        for (k, e) in self.eps.iter().enumerate() {
            let _ = writeln!(s, "{},{:.6e}", x.time(k), e);
        }
        s
    }

    /// Summary figures; the speed-up ratio is included when the
    /// integration wall-clock is known.
    pub fn manifest(&self, integration_seconds: Option<f64>) -> Manifest {
        let mut m = Manifest::new();
        m.set("N", self.n)
            .set("E", format!("{:.6e}", self.global_error))
            .set("max_err_i", format!("{:.6e}", self.max_segment_error()))
            .set("restarts", self.restarts)
            .set(
                "visited",
                self.visited
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            )
            .set("final_pass_seconds", format!("{:.6}", self.final_pass_seconds))
            .set("total_seconds", format!("{:.6}", self.total_seconds));
        if let Some(t) = integration_seconds {
            m.set("integration_seconds", format!("{t:.6}")).set(
                "speedup_final_pass",
                format!("{:.3}", t / self.final_pass_seconds),
            );
            m.set(
                "speedup_total",
                format!("{:.3}", t / self.total_seconds),
            );
        }
        m
    }
}

/// How a rejected pass failed, for the cap-exceeded report.
#[derive(Clone, Copy, Debug)]
enum PassSummary {
    SegmentFailed { n: usize, segment: usize, err: f64 },
    GlobalFailed { n: usize, global_error: f64 },
}

impl PassSummary {
    /// Passes that cleared every segment rank above those that did not;
    /// then smaller errors win.
    fn score(&self) -> (u8, f64) {
        match *self {
            PassSummary::GlobalFailed { global_error, .. } => (0, global_error),
            PassSummary::SegmentFailed { err, .. } => (1, err),
        }
    }

    fn keep_best(best: &mut Option<PassSummary>, candidate: PassSummary) {
        let better = best.is_none_or(|b| {
            let (cb, eb) = b.score();
            let (cc, ec) = candidate.score();
            cc < cb || (cc == cb && ec < eb)
        });
        if better {
            *best = Some(candidate);
        }
    }
}

impl std::fmt::Display for PassSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PassSummary::SegmentFailed { n, segment, err } => {
                write!(f, "N={n}, segment {segment} err={err:.3e}")
            }
            PassSummary::GlobalFailed { n, global_error } => {
                write!(f, "N={n}, all segments within tol, E={global_error:.3e}")
            }
        }
    }
}

#[derive(Clone)]
struct SegmentOutcome {
    model: DMDModel,
    fits: Vec<ColumnFit>,
    err: f64,
}

fn fit_segment(x: MatRef<'_, f64>, seg: &Segment, opts: &DmdOptions) -> Result<SegmentOutcome> {
    let block = x.subcols(seg.columns.start, seg.len());
    let model = fit_dmd(block, seg.columns.start, opts)?;
    let xt = model.reconstruct_block();
    let fits = column_fits(block, xt.as_ref(), seg.columns.start)?;
    let err = fits.iter().map(|f| f.rel_inf).fold(0.0, f64::max);
    Ok(SegmentOutcome { model, fits, err })
}

/// Run piecewise DMD on a `rows × m` matrix.
pub fn run_pdmd_matrix(x: MatRef<'_, f64>, cfg: &PDMDConfig) -> Result<PDMDResult> {
    let m = x.ncols();
    cfg.validate(m)?;
    let started = Instant::now();
    let mut cache: HashMap<(usize, usize), SegmentOutcome> = HashMap::new();
    let mut visited = Vec::new();
    let mut best: Option<PassSummary> = None;
    let mut n = cfg.n0;
    loop {
        if n > cfg.n_max {
            return Err(Error::PartitionCapExceeded {
                n,
                n_max: cfg.n_max,
                best: best.map_or_else(|| "none".to_string(), |b| b.to_string()),
            });
        }
        if let Some(&prev) = visited.last() {
            debug_assert_eq!(n, prev + 1);
        }
        visited.push(n);
        let pass_started = Instant::now();
        let segments = partition(m, n)?;
        let mut outcomes = Vec::with_capacity(n);
        let mut failed = None;
        for seg in &segments {
            let key = (seg.columns.start, seg.len());
            let outcome = match cache.get(&key) {
                Some(o) => o.clone(),
                None => {
                    let o = fit_segment(x, seg, &cfg.dmd)?;
                    if cfg.reuse_segments {
                        cache.insert(key, o.clone());
                    }
                    o
                }
            };
            if outcome.err > cfg.tol {
                failed = Some((seg.index, outcome.err));
                break;
            }
            outcomes.push(outcome);
        }
        if let Some((i, err)) = failed {
            PassSummary::keep_best(&mut best, PassSummary::SegmentFailed { n, segment: i, err });
            log::info!("N={n}: segment {i} error {err:.3e} > tol {:.1e}, restarting", cfg.tol);
            n += 1;
            continue;
        }
        let (res, nrm) = outcomes
            .iter()
            .flat_map(|o| o.fits.iter())
            .fold((0.0, 0.0), |(r, q), f| (r + f.residual_sq, q + f.norm_sq));
        let e = (res / nrm).sqrt();
        if !(e <= cfg.tol_bar) {
            PassSummary::keep_best(&mut best, PassSummary::GlobalFailed { n, global_error: e });
            log::info!("N={n}: global error {e:.3e} > tol_bar {:.1e}, restarting", cfg.tol_bar);
            n += 1;
            continue;
        }
        let final_pass_seconds = pass_started.elapsed().as_secs_f64();
        let eps = outcomes
            .iter()
            .flat_map(|o| o.fits.iter())
            .map(|f| (f.residual_sq / f.norm_sq).sqrt())
            .collect();
        let segments: Vec<SegmentReport> = segments
            .into_iter()
            .zip(&outcomes)
            .map(|(segment, o)| SegmentReport {
                segment,
                rank: o.model.rank(),
                err: o.err,
                defective: o.model.is_defective(),
            })
            .collect();
        log::info!("N={n}: accepted with E={e:.3e}");
        return Ok(PDMDResult {
            n,
            segments,
            models: outcomes.into_iter().map(|o| o.model).collect(),
            global_error: e,
            eps,
            restarts: visited.len() - 1,
            visited,
            final_pass_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
            rows: x.nrows(),
            m,
        });
    }
}

pub fn run_pdmd(x: &SnapshotMatrix, cfg: &PDMDConfig) -> Result<PDMDResult> {
    run_pdmd_matrix(x.view(), cfg)
}
