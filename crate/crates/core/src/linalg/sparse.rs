use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel work item in products.
const ROW_CHUNK: usize = 4096;

/// Symmetric matrix in compressed-row form. Both triangles are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

fn check_dim(n: usize) -> Result<()> {
    if n > u32::MAX as usize {
        return Err(Error::ResourceLimit(format!("matrix dimension {n} exceeds 32-bit indexing")));
    }
    Ok(())
}

impl SparseSym {
    /// Build from `(row, col, value)` triplets. Duplicates are summed in the
    /// order they appear, so the result is independent of how the triplets
    /// were produced as long as their order is fixed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        check_dim(n)?;
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i.max(j) + 1 });
            }
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // bucket by row, stable
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        let mut fill = counts.clone();
        for &(i, j, v) in triplets {
            bucket[fill[i]] = (j, v);
            fill[i] += 1;
        }

        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = bucket[counts[i]..counts[i + 1]].to_vec();
                row.sort_by_key(|&(j, _)| j);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (j, v) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += v,
                        _ => merged.push((j, v)),
                    }
                }
                merged
            })
            .collect();

        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows {
            for (j, v) in row {
                col_indices.push(j as u32);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self { n, row_offsets, col_indices, values })
    }

    /// Wrap compressed-row arrays. Column indices must be sorted per row.
    pub fn from_csr(n: usize, row_offsets: Vec<usize>, col_indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        let bad = row_offsets.len() != n + 1
            || row_offsets[0] != 0
            || row_offsets[n] != col_indices.len()
            || values.len() != col_indices.len()
            || row_offsets.windows(2).any(|w| w[0] > w[1])
            || (0..n).any(|i| {
                let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
                cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&j| j as usize >= n)
            });
        if bad {
            return Err(Error::Config("malformed compressed-row arrays".into()));
        }
        Ok(Self { n, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let mut t = Vec::new();
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()].iter().map(|&j| j as usize).zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|M_ij - M_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, _)| {
                let r = self.row_offsets[j]..self.row_offsets[j + 1];
                self.col_indices[r].binary_search(&(i as u32)).is_ok()
            })
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = M x` without length checks beyond debug assertions.
    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_dot(x, y);
    }

    /// `y = M x`, returning `x . y`. Partial sums are formed over fixed row
    /// chunks, so the result does not depend on the thread count.
    pub(crate) fn matvec_dot(&self, x: &[f64], y: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        let chunk = |(c, ys): (usize, &mut [f64])| -> f64 {
            let first = c * ROW_CHUNK;
            let mut acc = 0.0;
            for (k, yi) in ys.iter_mut().enumerate() {
                let i = first + k;
                let r = self.row_offsets[i]..self.row_offsets[i + 1];
                let v = self.values[r.clone()]
                    .iter()
                    .zip(&self.col_indices[r])
                    .fold(0.0, |s, (v, &j)| s + v * x[j as usize]);
                *yi = v;
                acc += x[i] * v;
            }
            acc
        };
        let partial: Vec<f64> = if self.n > ROW_CHUNK && rayon::current_num_threads() > 1 {
            y.par_chunks_mut(ROW_CHUNK).enumerate().map(chunk).collect()
        } else {
            y.chunks_mut(ROW_CHUNK).enumerate().map(chunk).collect()
        };
        partial.iter().sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        a
    }
}
