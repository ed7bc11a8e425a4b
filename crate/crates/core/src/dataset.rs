//! Coupled snapshot matrices and their on-disk format.
//!
//! Column `k` of a dataset is `[u_k; v_k]` (u block first). Columns are
//! stored contiguously (column-major), so a column is a plain slice and the
//! whole matrix can be viewed as a `faer::MatRef` without copying.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! b"CHSNAP01"             8 bytes
//! nx, ny, m               u64 each
//! t0, dt_snap, Lx, Ly     f64 each
//! payload                 2*nx*ny*m f64, column-major
//! ```
//!
//! A text manifest with run provenance sits next to the file as
//! `<path>.manifest`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::MatRef;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::manifest::Manifest;

pub const MAGIC: &[u8; 8] = b"CHSNAP01";
const HEADER_LEN: u64 = 8 + 3 * 8 + 4 * 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix {
    data: Vec<f64>,
    grid: Grid2D,
    m: usize,
    t0: f64,
    dt_snap: f64,
    pub manifest: Manifest,
}

impl SnapshotMatrix {
    /// Wrap column-major data of shape `2n x m`.
    pub fn from_column_major(data: Vec<f64>, grid: Grid2D, t0: f64, dt_snap: f64) -> Result<Self> {
        let rows = 2 * grid.len();
        if data.len() % rows != 0 {
            return Err(Error::LengthMismatch {
                expected: rows * (data.len() / rows + 1),
                actual: data.len(),
            });
        }
        let m = data.len() / rows;
        if m < 2 {
            return Err(Error::Degenerate(format!(
                "a dataset needs at least 2 snapshots, got {m}"
            )));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !(t0.is_finite() && dt_snap.is_finite() && dt_snap > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bad time metadata t0={t0}, dt_snap={dt_snap}"
            )));
        }
        Ok(Self {
            data,
            grid,
            m,
            t0,
            dt_snap,
            manifest: Manifest::new(),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Nodes per field.
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn rows(&self) -> usize {
        2 * self.grid.len()
    }

    /// Snapshot count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt_snap(&self) -> f64 {
        self.dt_snap
    }

    /// Time of 0-based column `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_snap
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let r = self.rows();
        &self.data[k * r..(k + 1) * r]
    }

    pub fn u(&self, k: usize) -> &[f64] {
        &self.column(k)[..self.n()]
    }

    pub fn v(&self, k: usize) -> &[f64] {
        &self.column(k)[self.n()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.rows(), self.m)
    }

    /// Columns `start .. start + len` (0-based).
    pub fn block(&self, start: usize, len: usize) -> MatRef<'_, f64> {
        self.view().subcols(start, len)
    }

    /// Inverse of [`stack_snapshots`].
    pub fn split(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (0..self.m)
            .map(|k| (self.u(k).to_vec(), self.v(k).to_vec()))
            .unzip()
    }

    /// Column `k` reshaped onto the grid as `x,y,u,v` CSV.
    pub fn column_csv(&self, k: usize) -> String {
        grid_csv(&self.grid, self.u(k), self.v(k))
    }
}

/// `x,y,u,v` rows in x-fastest node order.
pub fn grid_csv(grid: &Grid2D, u: &[f64], v: &[f64]) -> String {
    let mut s = String::with_capacity(grid.len() * 64);
    s.push_str("x,y,u,v\n");
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        let _ = writeln!(s, "{},{},{:e},{:e}", grid.x(i), grid.y(j), u[k], v[k]);
    }
    s
}

/// Stack paired `u`/`v` sequences into a `2n x m` coupled matrix.
pub fn stack_snapshots(
    us: &[Vec<f64>],
    vs: &[Vec<f64>],
    grid: Grid2D,
    t0: f64,
    dt_snap: f64,
) -> Result<SnapshotMatrix> {
    if us.len() != vs.len() {
        return Err(Error::LengthMismatch {
            expected: us.len(),
            actual: vs.len(),
        });
    }
    let n = grid.len();
    let mut data = Vec::with_capacity(2 * n * us.len());
    for (u, v) in us.iter().zip(vs) {
        grid.check_len(u)?;
        grid.check_len(v)?;
        data.extend_from_slice(u);
        data.extend_from_slice(v);
    }
    SnapshotMatrix::from_column_major(data, grid, t0, dt_snap)
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".manifest");
    PathBuf::from(p)
}

/// Write `contents` through a temporary sibling and rename into place.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(contents))
}

pub(crate) fn write_atomic_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        body(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn save_dataset(x: &SnapshotMatrix, path: &Path) -> Result<()> {
    write_atomic_with(path, |w| {
        w.write_all(MAGIC)?;
        for d in [x.grid.nx(), x.grid.ny(), x.m] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for f in [x.t0, x.dt_snap, x.grid.lx(), x.grid.ly()] {
            w.write_all(&f.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in x.data.chunks(4096) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    })?;
    write_atomic(&manifest_path(path), x.manifest.to_string().as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<SnapshotMatrix> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| bad("file shorter than the magic".into()))?;
    if &magic != MAGIC {
        return Err(bad(format!("wrong magic {magic:?}")));
    }
    let mut header = [0u8; (HEADER_LEN - 8) as usize];
    r.read_exact(&mut header)
        .map_err(|_| bad("truncated header".into()))?;
    let word = |i: usize| <[u8; 8]>::try_from(&header[8 * i..8 * i + 8]).unwrap();
    let (nx, ny, m) = (
        u64::from_le_bytes(word(0)),
        u64::from_le_bytes(word(1)),
        u64::from_le_bytes(word(2)),
    );
    let (t0, dt_snap, lx, ly) = (
        f64::from_le_bytes(word(3)),
        f64::from_le_bytes(word(4)),
        f64::from_le_bytes(word(5)),
        f64::from_le_bytes(word(6)),
    );
    let count = 2u64
        .checked_mul(nx)
        .and_then(|x| x.checked_mul(ny))
        .and_then(|x| x.checked_mul(m))
        .ok_or_else(|| bad("dimension overflow".into()))?;
    let expected = count
        .checked_mul(8)
        .and_then(|x| x.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("dimension overflow".into()))?;
    if file_len != expected {
        return Err(bad(format!(
            "payload size mismatch: header implies {expected} bytes, file has {file_len}"
        )));
    }
    let grid = Grid2D::new(lx, ly, nx as usize, ny as usize)?;
    let mut data = vec![0.0f64; count as usize];
    let mut buf = vec![0u8; 8 * 4096];
    for chunk in data.chunks_mut(4096) {
        let bytes = &mut buf[..8 * chunk.len()];
        r.read_exact(bytes)
            .map_err(|e| Error::io(path, e))?;
        for (v, b) in chunk.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().unwrap());
        }
    }
    let mut x = SnapshotMatrix::from_column_major(data, grid, t0, dt_snap)?;
    let side = manifest_path(path);
    if side.exists() {
        x.manifest = Manifest::read(&side)?;
    }
    Ok(x)
}
