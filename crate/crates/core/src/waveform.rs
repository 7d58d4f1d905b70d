//! Transmit-side signal construction: training preamble, payload symbols,
//! and frame assembly.
//!
//! A frame is `[train | guard | data]`: a constant-modulus Zadoff-Chu
//! preamble, a run of empty guard symbols that absorbs channel memory,
//! and a QPSK payload. Training and data segments carry the same average
//! symbol power.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame geometry and symbol power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    n_train: usize,
    n_guard: usize,
    n_data: usize,
    power: f64,
}

impl FrameSpec {
    pub fn new(n_train: usize, n_guard: usize, n_data: usize, power: f64) -> Result<Self> {
        if n_train < 1 {
            return Err(Error::invalid("frame.n_train must be at least 1"));
        }
        if n_guard + n_data < 1 {
            return Err(Error::invalid(
                "frame must extend past the training segment (n_guard + n_data >= 1)",
            ));
        }
        if power <= 0.0 || !power.is_finite() {
            return Err(Error::invalid(format!(
                "frame.power must be positive and finite, got {power}"
            )));
        }
        Ok(FrameSpec {
            n_train,
            n_guard,
            n_data,
            power,
        })
    }

    /// Builds a spec from the total frame length instead of the data count.
    pub fn with_frame_len(
        n_train: usize,
        n_guard: usize,
        frame_len: usize,
        power: f64,
    ) -> Result<Self> {
        let occupied = n_train + n_guard;
        if frame_len <= n_train {
            return Err(Error::invalid(format!(
                "frame.frame_len ({frame_len}) must exceed n_train ({n_train})"
            )));
        }
        if frame_len < occupied {
            return Err(Error::invalid(format!(
                "frame.frame_len ({frame_len}) shorter than train + guard ({occupied})"
            )));
        }
        FrameSpec::new(n_train, n_guard, frame_len - occupied, power)
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_guard(&self) -> usize {
        self.n_guard
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    /// Total frame length.
    pub fn frame_len(&self) -> usize {
        self.n_train + self.n_guard + self.n_data
    }

    /// Size of the offset search window: frame length minus the preamble.
    pub fn search_len(&self) -> usize {
        self.frame_len() - self.n_train
    }

    /// Largest admissible frame-boundary offset.
    pub fn max_offset(&self) -> usize {
        self.search_len() - 1
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// An assembled baseband frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    spec: FrameSpec,
    samples: Vec<Complex64>,
}

impl ComplexFrame {
    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// The training segment.
    pub fn training(&self) -> &[Complex64] {
        &self.samples[..self.spec.n_train]
    }
}

/// Generates a Zadoff-Chu sequence of the given length and root, scaled
/// to per-symbol power `power`.
///
/// Even lengths use the `n²` phase profile, odd lengths `n(n+1)`. The
/// root must be coprime with the length or the sequence loses its flat
/// autocorrelation.
pub fn zadoff_chu(length: usize, root: usize, power: f64) -> Result<Vec<Complex64>> {
    if length < 1 {
        return Err(Error::invalid("zadoff-chu length must be at least 1"));
    }
    if root == 0 || gcd(root, length) != 1 {
        return Err(Error::invalid(format!(
            "zadoff-chu root {root} is not coprime with length {length}"
        )));
    }
    if power.is_nan() || power <= 0.0 {
        return Err(Error::invalid("zadoff-chu power must be positive"));
    }
    let amp = power.sqrt();
    let len = length as f64;
    let seq = (0..length)
        .map(|n| {
            let n = n as f64;
            let quad = if length.is_multiple_of(2) {
                n * n
            } else {
                n * (n + 1.0)
            };
            let phase = -PI * root as f64 * quad / len;
            Complex64::from_polar(amp, phase)
        })
        .collect();
    Ok(seq)
}

/// Draws `count` QPSK symbols with average power `power`.
pub fn random_data_symbols(count: usize, power: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let amp = (power / 2.0).sqrt();
    (0..count)
        .map(|_| {
            let bits: u8 = rng.gen_range(0..4);
            let re = if bits & 1 == 0 { amp } else { -amp };
            let im = if bits & 2 == 0 { amp } else { -amp };
            Complex64::new(re, im)
        })
        .collect()
}

/// Concatenates `[train | guard zeros | data]` into a frame.
pub fn assemble_frame(
    spec: &FrameSpec,
    train: &[Complex64],
    data: &[Complex64],
) -> Result<ComplexFrame> {
    if train.len() != spec.n_train {
        return Err(Error::DimMismatch {
            expected: spec.n_train,
            got: train.len(),
            context: "training segment length",
        });
    }
    if data.len() != spec.n_data {
        return Err(Error::DimMismatch {
            expected: spec.n_data,
            got: data.len(),
            context: "data segment length",
        });
    }
    let mut samples = Vec::with_capacity(spec.frame_len());
    samples.extend_from_slice(train);
    samples.resize(spec.n_train + spec.n_guard, Complex64::new(0.0, 0.0));
    samples.extend_from_slice(data);
    Ok(ComplexFrame {
        spec: *spec,
        samples,
    })
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
