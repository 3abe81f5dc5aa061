//! Symmetric sparse matrices stored by their lower triangle ("Morse storage").

use std::io::Write;

use nalgebra::DMatrix;

/// Lower-triangular compressed rows of a symmetric matrix: row i holds columns
/// j ≤ i, sorted and unique, the diagonal last.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Zero matrix on the pattern given by per-row column lists (any order,
    /// duplicates allowed, columns > row ignored). The diagonal is always included.
    pub fn from_pattern(n: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, r) in rows.iter().enumerate().take(n) {
            let mut cols: Vec<usize> = r.iter().copied().filter(|&j| j < i).collect();
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            col_idx.push(i);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn zeros_like(&self) -> Self {
        SparseSymMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    /// Storage position of (i, j), i ≥ j.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds v at (i, j); panics if (i, j) is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.values[self.row_ptr[i + 1] - 1]).collect()
    }

    /// y = A x.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let xi = x[i];
            let mut acc = 0.0;
            for p in lo..hi - 1 {
                let j = self.col_idx[p];
                let a = self.values[p];
                acc += a * x[j];
                y[j] += a * xi;
            }
            y[i] += acc + self.values[hi - 1] * xi;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// self + s·other on the same pattern.
    pub fn add_scaled(&self, other: &SparseSymMatrix, s: f64) -> SparseSymMatrix {
        assert_eq!(self.col_idx, other.col_idx, "patterns differ");
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v += s * o;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                d[(i, j)] = self.values[p];
                d[(j, i)] = self.values[p];
            }
        }
        d
    }

    /// Matrix Market coordinate format, `symmetric`, 1-based, lower triangle.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.values.len())?;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {:.17e}", i + 1, self.col_idx[p] + 1, self.values[p])?;
            }
        }
        Ok(())
    }

    /// Structural checks: sorted unique columns ≤ row, diagonal present.
    pub fn check_structure(&self) -> bool {
        (0..self.n).all(|i| {
            let r = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            !r.is_empty() && r.windows(2).all(|w| w[0] < w[1]) && *r.last().unwrap() == i
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
