use super::SparseSym;
use crate::error::{Error, Result};

/// Symmetric multiplicative Schwarz preconditioner (block symmetric
/// Gauss-Seidel) over small overlapping index blocks, typically the dof sets
/// of the mesh cells.
///
/// Each block is inverted exactly through a dense Cholesky factor. Nearly
/// dependent basis functions living on the same small cut end up in one
/// block, which diagonal scaling cannot resolve. A block whose factorization
/// fails in floating point falls back to its diagonal.
#[derive(Debug, Clone)]
pub struct CellBlocks {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    factor_offsets: Vec<usize>,
    factors: Vec<f64>,
    max_block: usize,
}

impl CellBlocks {
    pub fn new<'a>(m: &SparseSym, blocks: impl IntoIterator<Item = &'a [usize]>) -> Result<Self> {
        let n = m.dim();
        let diag = m.diagonal();
        if let Some(&bad) = diag.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::BreakdownNonSpd(bad));
        }
        let mut out =
            Self { n, offsets: vec![0], indices: Vec::new(), factor_offsets: vec![0], factors: Vec::new(), max_block: 1 };
        let mut covered = vec![false; n];
        for block in blocks {
            if block.is_empty() {
                continue;
            }
            if let Some(&i) = block.iter().find(|&&i| i >= n) {
                return Err(Error::DimensionMismatch { expected: n, got: i + 1 });
            }
            block.iter().for_each(|&i| covered[i] = true);
            out.push(m, &diag, block);
        }
        // Indices outside every block get a plain diagonal block.
        for i in 0..n {
            if !covered[i] {
                out.push(m, &diag, &[i]);
            }
        }
        Ok(out)
    }

    fn push(&mut self, m: &SparseSym, diag: &[f64], block: &[usize]) {
        let k = block.len();
        let mut a = Vec::with_capacity(k * k);
        for &i in block {
            a.extend(block.iter().map(|&j| m.get(i, j)));
        }
        if !cholesky(&mut a, k) {
            a.iter_mut().for_each(|v| *v = 0.0);
            for (t, &i) in block.iter().enumerate() {
                a[t * k + t] = diag[i].sqrt();
            }
        }
        self.indices.extend(block.iter().map(|&i| i as u32));
        self.offsets.push(self.indices.len());
        self.factors.extend_from_slice(&a);
        self.factor_offsets.push(self.factors.len());
        self.max_block = self.max_block.max(k);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `z = B r`: one forward and one backward sweep over the blocks, each
    /// solving exactly for the current residual. `m` must be the matrix the
    /// blocks were built from. The visiting order is fixed, so the result is
    /// reproducible.
    pub fn apply(&self, m: &SparseSym, r: &[f64], z: &mut [f64]) {
        let nb = self.num_blocks();
        let (ro, ci, va) = (m.row_offsets(), m.col_indices(), m.values());
        let mut res = r.to_vec();
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![0.0; self.max_block];
        for step in 0..2 * nb {
            let b = if step < nb { step } else { 2 * nb - 1 - step };
            let idx = &self.indices[self.offsets[b]..self.offsets[b + 1]];
            let l = &self.factors[self.factor_offsets[b]..self.factor_offsets[b + 1]];
            let k = idx.len();
            let y = &mut buf[..k];
            for (yi, &i) in y.iter_mut().zip(idx) {
                *yi = res[i as usize];
            }
            cholesky_solve(l, k, y);
            for (&yi, &i) in y.iter().zip(idx) {
                let i = i as usize;
                z[i] += yi;
                for e in ro[i]..ro[i + 1] {
                    res[ci[e] as usize] -= va[e] * yi;
                }
            }
        }
    }
}

// In-place lower Cholesky of a dense row-major `k x k` matrix.
fn cholesky(a: &mut [f64], k: usize) -> bool {
    for j in 0..k {
        let mut s = a[j * k + j];
        for t in 0..j {
            s -= a[j * k + t] * a[j * k + t];
        }
        if !(s > 0.0) {
            return false;
        }
        let l = s.sqrt();
        a[j * k + j] = l;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for t in 0..j {
                s -= a[i * k + t] * a[j * k + t];
            }
            a[i * k + j] = s / l;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], k: usize, y: &mut [f64]) {
    for i in 0..k {
        let mut s = y[i];
        for t in 0..i {
            s -= l[i * k + t] * y[t];
        }
        y[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = y[i];
        for t in i + 1..k {
            s -= l[t * k + i] * y[t];
        }
        y[i] = s / l[i * k + i];
    }
}
