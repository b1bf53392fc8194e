//! Row-compressed complex matrix with column index sets, the graph on which
//! the message-passing detectors run.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// Square sparse matrix. Rows hold `(column, value)` pairs sorted by
/// column; `col_sets[c]` lists the entry ids (positions in the row-major
/// entry arrays) of column `c`, ordered by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannelMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    col_sets: Vec<Vec<usize>>,
    /// Entries dropped as negligible when the matrix was built.
    pub pruned: usize,
}

impl SparseChannelMatrix {
    /// Builds from per-row entry lists. Duplicate columns within a row are
    /// summed; exact zeros are kept out.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Result<Self> {
        check_len(dim, rows.len())?;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= dim {
                    return Err(Error::Dimension { expected: dim, actual: c + 1 });
                }
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut m = SparseChannelMatrix {
            dim,
            row_ptr,
            cols,
            vals,
            col_sets: Vec::new(),
            pruned: 0,
        };
        m.retain(|_, _, v| v != Complex64::new(0.0, 0.0));
        Ok(m)
    }

    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            if r >= dim {
                return Err(Error::Dimension { expected: dim, actual: r + 1 });
            }
            rows[r].push((c, v));
        }
        Self::from_rows(dim, rows)
    }

    /// Keeps entries whose magnitude is at least `tol`.
    pub fn from_dense(m: &DMatrix<Complex64>, tol: f64) -> Result<Self> {
        check_len(m.nrows(), m.ncols())?;
        let rows = (0..m.nrows())
            .map(|r| {
                (0..m.ncols())
                    .filter(|&c| m[(r, c)].norm() >= tol && m[(r, c)].norm() > 0.0)
                    .map(|c| (c, m[(r, c)]))
                    .collect()
            })
            .collect();
        Self::from_rows(m.nrows(), rows)
    }

    fn rebuild_cols(&mut self) {
        let mut col_sets = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                col_sets[self.cols[e]].push(e);
            }
        }
        self.col_sets = col_sets;
    }

    /// Drops entries for which `keep(row, col, value)` is false.
    pub fn retain(&mut self, mut keep: impl FnMut(usize, usize, Complex64) -> bool) {
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        row_ptr.push(0);
        for r in 0..self.dim {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                if keep(r, self.cols[e], self.vals[e]) {
                    cols.push(self.cols[e]);
                    vals.push(self.vals[e]);
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
        self.rebuild_cols();
    }

    /// Drops entries below `rel_tol` times the largest magnitude and
    /// records how many were removed.
    pub fn prune_relative(&mut self, rel_tol: f64) {
        let max = self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tol = rel_tol * max;
        let before = self.nnz();
        self.retain(|_, _, v| v.norm() >= tol);
        self.pruned += before - self.nnz();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored entries (D').
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entry ids of row `d`.
    pub fn row_range(&self, d: usize) -> std::ops::Range<usize> {
        self.row_ptr[d]..self.row_ptr[d + 1]
    }

    /// Column indices I(d) of row `d`.
    pub fn row_cols(&self, d: usize) -> &[usize] {
        &self.cols[self.row_range(d)]
    }

    pub fn row_vals(&self, d: usize) -> &[Complex64] {
        &self.vals[self.row_range(d)]
    }

    /// Entry ids of column `c`, giving J(c) through [`Self::entry_row`].
    pub fn col_entries(&self, c: usize) -> &[usize] {
        &self.col_sets[c]
    }

    pub fn entry_col(&self, e: usize) -> usize {
        self.cols[e]
    }

    pub fn entry_val(&self, e: usize) -> Complex64 {
        self.vals[e]
    }

    /// Row of an entry id (binary search over the row pointers).
    pub fn entry_row(&self, e: usize) -> usize {
        self.row_ptr.partition_point(|&p| p <= e) - 1
    }

    /// Rows J(c) of column `c`.
    pub fn col_rows(&self, c: usize) -> Vec<usize> {
        self.col_sets[c].iter().map(|&e| self.entry_row(e)).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_range(r);
        match self.cols[range.clone()].binary_search(&c) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn max_row_degree(&self) -> usize {
        (0..self.dim).map(|d| self.row_range(d).len()).max().unwrap_or(0)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|d| {
                self.row_range(d)
                    .map(|e| self.vals[e] * x[self.cols[e]])
                    .sum()
            })
            .collect()
    }

    pub fn scale(&mut self, a: f64) {
        self.vals.iter_mut().for_each(|v| *v *= a);
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for e in self.row_range(r) {
                m[(r, self.cols[e])] = self.vals[e];
            }
        }
        m
    }

    /// `(row, col, re, im)` lines, one per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut out = format!("# dim {}\n", self.dim);
        for r in 0..self.dim {
            for e in self.row_range(r) {
                let v = self.vals[e];
                writeln!(out, "{} {} {:e} {:e}", r, self.cols[e], v.re, v.im).unwrap();
            }
        }
        out
    }

    pub fn from_triplet_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut trip = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# dim") {
                dim = Some(rest.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad triplet line `{line}`")));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            let r = f[0].parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let c = f[1].parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            trip.push((r, c, Complex64::new(p(f[2])?, p(f[3])?)));
        }
        let dim = dim.ok_or_else(|| Error::Parse("missing `# dim` header".into()))?;
        Self::from_triplets(dim, &trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn index_sets_are_consistent() {
        let m = SparseChannelMatrix::from_triplets(
            3,
            &[(0, 0, c(1.0)), (0, 2, c(2.0)), (1, 1, c(3.0)), (2, 0, c(4.0)), (2, 2, c(5.0))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.row_cols(0), &[0, 2]);
        assert_eq!(m.col_rows(0), vec![0, 2]);
        assert_eq!(m.col_rows(1), vec![1]);
        let total: usize = (0..3).map(|c| m.col_entries(c).len()).sum();
        assert_eq!(total, m.nnz());
        for d in 0..3 {
            for &cc in m.row_cols(d) {
                assert!(m.col_rows(cc).contains(&d));
            }
        }
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = SparseChannelMatrix::from_triplets(2, &[(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(0.0))]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
    }

    #[test]
    fn triplet_text_roundtrip() {
        let m = SparseChannelMatrix::from_triplets(
            2,
            &[(0, 0, Complex64::new(1.5, -0.25)), (1, 0, Complex64::new(-3.0, 1e-7))],
        )
        .unwrap();
        let back = SparseChannelMatrix::from_triplet_text(&m.to_triplet_text()).unwrap();
        assert_eq!(m, back);
        assert!(SparseChannelMatrix::from_triplet_text("0 0 1 1").is_err());
    }

    #[test]
    fn prune_counts() {
        let mut m = SparseChannelMatrix::from_triplets(2, &[(0, 0, c(1.0)), (1, 1, c(1e-9))]).unwrap();
        m.prune_relative(1e-6);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.pruned, 1);
    }
}
