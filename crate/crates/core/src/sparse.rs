//! Minimal compressed-sparse-row complex matrices for commutator algebra on
//! symmetry sectors.

use nalgebra::DMatrix;

use crate::state::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        CsrMatrix {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` entries, summing duplicates
    /// and dropping exact zeros.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; dim + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            dim,
            indptr,
            indices,
            values,
        }
        .pruned()
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), entries)
    }

    fn pruned(self) -> Self {
        let mut out = CsrMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != C64::new(0.0, 0.0) {
                    out.indices.push(self.indices[k]);
                    out.values.push(self.values[k]);
                }
            }
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn scaled(&self, a: C64) -> Self {
        CsrMatrix {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
        .pruned()
    }

    /// `a * self + b * other`.
    pub fn add_scaled(&self, a: C64, other: &CsrMatrix, b: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut acc = RowAccumulator::new(self.dim);
        let mut out = CsrMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                acc.add(c, v * a);
            }
            for (c, v) in other.row(r) {
                acc.add(c, v * b);
            }
            acc.drain_into(&mut out);
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut acc = RowAccumulator::new(self.dim);
        let mut out = CsrMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    acc.add(c, a * b);
                }
            }
            acc.drain_into(&mut out);
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &CsrMatrix) -> Self {
        let one = C64::new(1.0, 0.0);
        self.matmul(other).add_scaled(one, &other.matmul(self), -one)
    }

    pub fn adjoint(&self) -> Self {
        let entries = (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v.conj())))
            .collect();
        Self::from_triplets(self.dim, entries)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `self - self^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let one = C64::new(1.0, 0.0);
        self.add_scaled(one, &self.adjoint(), -one).max_abs()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }
}

/// Dense scratch row with a list of touched columns.
struct RowAccumulator {
    values: Vec<C64>,
    touched: Vec<usize>,
    used: Vec<bool>,
}

impl RowAccumulator {
    fn new(dim: usize) -> Self {
        RowAccumulator {
            values: vec![C64::new(0.0, 0.0); dim],
            touched: Vec::new(),
            used: vec![false; dim],
        }
    }

    fn add(&mut self, c: usize, v: C64) {
        if !self.used[c] {
            self.used[c] = true;
            self.touched.push(c);
        }
        self.values[c] += v;
    }

    fn drain_into(&mut self, out: &mut CsrMatrix) {
        self.touched.sort_unstable();
        for &c in &self.touched {
            let v = std::mem::replace(&mut self.values[c], C64::new(0.0, 0.0));
            self.used[c] = false;
            if v != C64::new(0.0, 0.0) {
                out.indices.push(c);
                out.values.push(v);
            }
        }
        self.touched.clear();
    }
}
