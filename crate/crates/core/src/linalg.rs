//! Minimal dense row-major matrix support.
//!
//! The network solver needs exactly four things: matrix-vector products,
//! a Gram accumulation `G += AᵀA` over sample blocks, a symmetric
//! positive-definite solve, and conversion to `nalgebra` for the SVD
//! route. Everything is `f64` row-major.
//!
//! Determinism note: `gram_accumulate` partitions work over *output*
//! rows, so each entry of `G` is always summed over samples in ascending
//! order no matter how many threads run. Parallel and sequential builds
//! produce bitwise-identical results.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                expected: rows * cols,
                got: data.len(),
                context: "matrix backing storage",
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                got: x.len(),
                context: "matvec operand",
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `g += aᵀ a` where `a` is a block of samples (one sample per row) and
/// `g` is `k×k` for `k = a.cols()`. Only the upper triangle is touched;
/// call [`mirror_upper`] after the last block.
pub fn gram_accumulate(exec: Exec, g: &mut Mat, a: &Mat) {
    let k = a.cols();
    assert_eq!(g.rows, k);
    assert_eq!(g.cols, k);
    let chunk_rows = exec::balanced_chunk(k);
    exec::for_each_chunk_mut(exec, &mut g.data, chunk_rows * k, |start, slice| {
        let row0 = start / k;
        let nrows = slice.len() / k;
        for i in 0..a.rows() {
            let ai = a.row(i);
            for j in 0..nrows {
                let coeff = ai[row0 + j];
                if coeff == 0.0 {
                    continue;
                }
                // Upper triangle only: columns row0+j .. k.
                let col0 = row0 + j;
                let out = &mut slice[j * k + col0..(j + 1) * k];
                for (o, v) in out.iter_mut().zip(&ai[col0..]) {
                    *o += coeff * v;
                }
            }
        }
    });
}

/// Copies the upper triangle of `g` onto the lower one.
pub fn mirror_upper(g: &mut Mat) {
    let n = g.rows;
    for r in 1..n {
        for c in 0..r {
            g.data[r * n + c] = g.data[c * n + r];
        }
    }
}

/// Convenience wrapper: full `aᵀa` in one call.
pub fn gram(exec: Exec, a: &Mat) -> Mat {
    let mut g = Mat::zeros(a.cols(), a.cols());
    gram_accumulate(exec, &mut g, a);
    mirror_upper(&mut g);
    g
}

/// Cholesky factorization of a symmetric positive-definite matrix,
/// stored as the lower triangle.
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(g: &Mat) -> Result<Self> {
        if g.rows != g.cols {
            return Err(Error::DimMismatch {
                expected: g.rows,
                got: g.cols,
                context: "cholesky of non-square matrix",
            });
        }
        let n = g.rows;
        let mut l = vec![0.0f64; n * n];
        for j in 0..n {
            let mut diag = g.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::Training(format!(
                    "gram matrix not positive definite at pivot {j} (value {diag:e})"
                )));
            }
            let djj = diag.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Solves `G x = b` in place.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::DimMismatch {
                expected: self.n,
                got: b.len(),
                context: "cholesky solve rhs",
            });
        }
        let n = self.n;
        let l = &self.l;
        // Forward: L y = b.
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        // Backward: Lᵀ x = y.
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        Ok(())
    }
}
