//! Synchronization metric: sliding cross-correlation against the clean
//! preamble, unit-norm scaling, and the classical argmax estimator.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A unit-norm synchronization metric vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    values: Vec<f64>,
    degenerate: bool,
}

impl MetricVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the raw metric was identically zero and could not be
    /// normalized.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sliding correlation energy against the known training sequence:
///
///   metric[t] = | s^H y[t .. t+Ns] |^2,  t = 0 .. M-Ns-1
///
/// The reference `s` is the clean (undistorted) preamble.
pub fn cross_corr_metric(y: &[Complex64], s: &[Complex64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::invalid("training sequence is empty"));
    }
    if y.len() <= s.len() {
        return Err(Error::DimMismatch {
            expected: s.len() + 1,
            got: y.len(),
            context: "received window shorter than preamble + 1",
        });
    }
    let n_s = s.len();
    let out_len = y.len() - n_s;
    let mut metric = Vec::with_capacity(out_len);
    for t in 0..out_len {
        let mut acc = Complex64::new(0.0, 0.0);
        for (sv, yv) in s.iter().zip(&y[t..t + n_s]) {
            acc += sv.conj() * yv;
        }
        metric.push(acc.norm_sqr());
    }
    Ok(metric)
}

/// Scales a raw metric to unit Euclidean norm. An all-zero input comes
/// back all-zero with the degenerate flag set instead of erroring, so
/// Monte Carlo loops never abort.
pub fn normalize_metric(g: &[f64]) -> MetricVector {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return MetricVector {
            values: vec![0.0; g.len()],
            degenerate: true,
        };
    }
    MetricVector {
        values: g.iter().map(|v| v / norm).collect(),
        degenerate: false,
    }
}

/// Index of the largest entry with ties broken toward the smallest index.
pub fn argmax_tie_smallest(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Classical correlation estimate: the argmax of the metric.
pub fn corr_estimate(g: &[f64]) -> Result<usize> {
    argmax_tie_smallest(g).ok_or_else(|| Error::invalid("metric vector is empty"))
}
