//! Compressed sparse row storage for the finite-difference operators.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    /// Set when the sparsity pattern is structurally symmetric.
    pub structurally_symmetric: bool,
}

impl SparseOperator {
    /// Build from per-row `(column, value)` lists. Columns within a row are
    /// sorted and duplicates summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: rows.len(),
            });
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= n {
                    return Err(Error::InvalidConfig(format!(
                        "column {c} out of bounds for {n}x{n} operator"
                    )));
                }
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        let mut op = Self {
            n,
            indptr,
            indices,
            values,
            structurally_symmetric: false,
        };
        op.structurally_symmetric = op.pattern_is_symmetric();
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let rows = (0..self.n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> =
                    self.row(i).map(|(j, v)| (j, beta * v)).collect();
                row.push((i, alpha));
                row
            })
            .collect();
        Self::from_rows(self.n, rows).expect("shifted operator keeps its shape")
    }

    /// Row-major dense copy; intended for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    fn pattern_is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, _)| {
                self.indices[self.indptr[j]..self.indptr[j + 1]]
                    .binary_search(&i)
                    .is_ok()
            })
        })
    }
}
