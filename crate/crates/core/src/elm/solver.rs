//! Output-weight solvers for the single-hidden-layer network.
//!
//! Two algebraic routes compute the same least-squares fit
//! `Y = argmin ||Y H - T||_F`:
//!
//! * `svd` — explicit Moore-Penrose pseudoinverse `Y = T H^+` with
//!   singular values below `1e-10 * sigma_max` truncated. Exact
//!   minimum-norm solution; the correctness reference. Backed by
//!   nalgebra's SVD.
//! * `ridge(lambda)` — normal equations on the hidden side,
//!   `Y = T Hᵀ (H Hᵀ + lambda I)^(-1)`, built from a hand-rolled blocked
//!   Gram accumulation and Cholesky solve. Scales to sample counts far
//!   beyond what an explicit pseudoinverse tolerates and converges to
//!   the svd solution as lambda -> 0.
//!
//! Keeping the routes on independent code paths lets the test suite use
//! each to check the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{gram, Cholesky, Mat};

/// Relative singular-value cutoff for the pseudoinverse.
pub const SVD_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Default ridge regularization strength.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

/// Output-weight solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Truncated-SVD pseudoinverse (reference route).
    Svd,
    /// Regularized Gram solve (scale route) with the given lambda.
    Ridge(f64),
}

impl Solver {
    /// The default choice: ridge once the sample count dwarfs the hidden
    /// width, svd otherwise.
    pub fn auto_for(n_samples: usize, n_hidden: usize) -> Solver {
        if n_samples > 10 * n_hidden {
            Solver::Ridge(DEFAULT_RIDGE_LAMBDA)
        } else {
            Solver::Svd
        }
    }

    pub fn label(&self) -> String {
        match self {
            Solver::Svd => "svd".to_string(),
            Solver::Ridge(l) => format!("ridge({l:e})"),
        }
    }
}

/// `Y = T H^+` via truncated SVD. `h` is hidden×samples, `t` is
/// classes×samples; the result is classes×hidden.
pub fn solve_svd(h: &Mat, t: &Mat) -> Result<Mat> {
    if h.cols() != t.cols() {
        return Err(Error::DimMismatch {
            expected: h.cols(),
            got: t.cols(),
            context: "label matrix sample count",
        });
    }
    let hn = h.to_nalgebra();
    let svd = hn.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if !sigma_max.is_finite() {
        return Err(Error::Training(
            "hidden matrix has non-finite singular values".into(),
        ));
    }
    let eps = SVD_RELATIVE_TOLERANCE * sigma_max;
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| Error::Training(format!("pseudoinverse failed: {e}")))?;
    let upsilon = t.to_nalgebra() * pinv;
    Ok(Mat::from_nalgebra(&upsilon))
}

/// Accumulator for the ridge route, fed sample blocks so the full
/// hidden×samples matrix never has to exist in memory.
pub struct RidgeAccumulator {
    n_hidden: usize,
    n_classes: usize,
    gram: Mat,
    cross: Mat, // classes × hidden, T Hᵀ
    n_samples: usize,
}

impl RidgeAccumulator {
    pub fn new(n_hidden: usize, n_classes: usize) -> Self {
        RidgeAccumulator {
            n_hidden,
            n_classes,
            gram: Mat::zeros(n_hidden, n_hidden),
            cross: Mat::zeros(n_classes, n_hidden),
            n_samples: 0,
        }
    }

    /// Feeds a block of hidden activations (one sample per row of
    /// `activations`) with their one-hot label indices.
    pub fn push_block(&mut self, exec: Exec, activations: &Mat, labels: &[usize]) -> Result<()> {
        if activations.cols() != self.n_hidden {
            return Err(Error::DimMismatch {
                expected: self.n_hidden,
                got: activations.cols(),
                context: "activation block width",
            });
        }
        if labels.len() != activations.rows() {
            return Err(Error::DimMismatch {
                expected: activations.rows(),
                got: labels.len(),
                context: "label block length",
            });
        }
        crate::linalg::gram_accumulate(exec, &mut self.gram, activations);
        // T is one-hot, so T Hᵀ just sums activation rows into their
        // label's row. Sequential in sample order keeps it deterministic.
        for (i, &label) in labels.iter().enumerate() {
            if label >= self.n_classes {
                return Err(Error::invalid(format!(
                    "label {label} outside {} classes",
                    self.n_classes
                )));
            }
            let row = activations.row(i);
            let out = self.cross.row_mut(label);
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        self.n_samples += labels.len();
        Ok(())
    }

    /// Solves `(G + lambda I) Yᵀ = (T Hᵀ)ᵀ` and returns Y.
    pub fn solve(mut self, lambda: f64) -> Result<Mat> {
        if self.n_samples == 0 {
            return Err(Error::Training("no samples accumulated".into()));
        }
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::invalid("ridge lambda must be non-negative"));
        }
        crate::linalg::mirror_upper(&mut self.gram);
        for i in 0..self.n_hidden {
            let v = self.gram.get(i, i);
            self.gram.set(i, i, v + lambda);
        }
        let chol = Cholesky::factor(&self.gram)?;
        let mut upsilon = Mat::zeros(self.n_classes, self.n_hidden);
        let mut rhs = vec![0.0f64; self.n_hidden];
        for c in 0..self.n_classes {
            rhs.copy_from_slice(self.cross.row(c));
            chol.solve(&mut rhs)?;
            upsilon.row_mut(c).copy_from_slice(&rhs);
        }
        Ok(upsilon)
    }
}

/// One-shot ridge solve for an explicit hidden matrix (hidden×samples).
/// Test and reference convenience; production training streams blocks
/// through [`RidgeAccumulator`] directly.
pub fn solve_ridge(exec: Exec, h: &Mat, t: &Mat, lambda: f64) -> Result<Mat> {
    if h.cols() != t.cols() {
        return Err(Error::DimMismatch {
            expected: h.cols(),
            got: t.cols(),
            context: "label matrix sample count",
        });
    }
    // h is hidden×samples; the accumulator wants samples×hidden rows.
    let a = Mat::from_fn(h.cols(), h.rows(), |i, j| h.get(j, i));
    let labels: Vec<usize> = (0..t.cols())
        .map(|i| {
            (0..t.rows())
                .find(|&c| t.get(c, i) == 1.0)
                .unwrap_or(usize::MAX)
        })
        .collect();
    if labels.contains(&usize::MAX) {
        // Not one-hot: fall back to a dense normal-equation solve.
        let mut g = gram(exec, &a);
        for i in 0..g.rows() {
            let v = g.get(i, i);
            g.set(i, i, v + lambda);
        }
        let chol = Cholesky::factor(&g)?;
        let mut upsilon = Mat::zeros(t.rows(), h.rows());
        for c in 0..t.rows() {
            // rhs = (T Hᵀ) row c = sum_i T[c,i] * H[:,i].
            let mut rhs = vec![0.0f64; h.rows()];
            for i in 0..h.cols() {
                let w = t.get(c, i);
                if w != 0.0 {
                    for (k, r) in rhs.iter_mut().enumerate() {
                        *r += w * h.get(k, i);
                    }
                }
            }
            chol.solve(&mut rhs)?;
            upsilon.row_mut(c).copy_from_slice(&rhs);
        }
        return Ok(upsilon);
    }
    let mut acc = RidgeAccumulator::new(h.rows(), t.rows());
    acc.push_block(exec, &a, &labels)?;
    acc.solve(lambda)
}
