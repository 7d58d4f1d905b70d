//! Channel and hardware impairments: Saleh amplifier nonlinearity,
//! sparse exponentially-decaying multipath, frame-offset embedding, and
//! receiver noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::ComplexFrame;

/// Saleh amplifier coefficients.
///
/// AM/AM:  A(r) = alpha_a * r / (1 + beta_a * r^2)
/// AM/PM:  Phi(r) = alpha_phi * r^2 / (1 + beta_phi * r^2)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpaParams {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub alpha_phi: f64,
    pub beta_phi: f64,
}

impl HpaParams {
    pub fn new(alpha_a: f64, beta_a: f64, alpha_phi: f64, beta_phi: f64) -> Result<Self> {
        let p = HpaParams {
            alpha_a,
            beta_a,
            alpha_phi,
            beta_phi,
        };
        if ![alpha_a, beta_a, alpha_phi, beta_phi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("hpa coefficients must be finite"));
        }
        if beta_a <= 0.0 || beta_phi <= 0.0 {
            return Err(Error::invalid("hpa beta_a and beta_phi must be positive"));
        }
        Ok(p)
    }

    /// The strongly-saturating amplifier preset.
    pub fn hpa1() -> Self {
        HpaParams {
            alpha_a: 1.96,
            beta_a: 0.99,
            alpha_phi: 2.53,
            beta_phi: 2.82,
        }
    }

    /// The weakly-saturating amplifier preset.
    pub fn hpa2() -> Self {
        HpaParams {
            alpha_a: 1.66,
            beta_a: 0.06,
            alpha_phi: 0.15,
            beta_phi: 0.35,
        }
    }

    /// Looks up a preset by name ("hpa1" or "hpa2").
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "hpa1" => Some(Self::hpa1()),
            "hpa2" => Some(Self::hpa2()),
            _ => None,
        }
    }

    /// Output amplitude for input amplitude `r`.
    pub fn am_am(&self, r: f64) -> f64 {
        self.alpha_a * r / (1.0 + self.beta_a * r * r)
    }

    /// Phase shift in radians for input amplitude `r`.
    pub fn am_pm(&self, r: f64) -> f64 {
        self.alpha_phi * r * r / (1.0 + self.beta_phi * r * r)
    }

    /// Input amplitude at which the AM/AM curve peaks: 1/sqrt(beta_a).
    pub fn saturation_input(&self) -> f64 {
        1.0 / self.beta_a.sqrt()
    }
}

/// Applies the Saleh nonlinearity sample by sample.
pub fn saleh_distort(x: &[Complex64], params: &HpaParams) -> Vec<Complex64> {
    x.iter()
        .map(|&v| {
            let r = v.norm();
            if r < 1e-300 {
                return Complex64::new(0.0, 0.0);
            }
            let gain = params.am_am(r);
            let phase = v.arg() + params.am_pm(r);
            Complex64::from_polar(gain, phase)
        })
        .collect()
}

/// Statistical description of the multipath channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    n_paths: usize,
    decay: f64,
    sparsity_prob: f64,
    renormalize_after_masking: bool,
}

impl ChannelSpec {
    pub fn new(n_paths: usize, decay: f64, sparsity_prob: f64) -> Result<Self> {
        if n_paths < 1 {
            return Err(Error::invalid("channel.n_paths must be at least 1"));
        }
        if decay < 0.0 || !decay.is_finite() {
            return Err(Error::invalid(format!(
                "channel.decay must be non-negative, got {decay}"
            )));
        }
        if !(0.0..=1.0).contains(&sparsity_prob) {
            return Err(Error::invalid(format!(
                "channel.sparsity_prob must lie in [0,1], got {sparsity_prob}"
            )));
        }
        Ok(ChannelSpec {
            n_paths,
            decay,
            sparsity_prob,
            renormalize_after_masking: false,
        })
    }

    /// Rescales tap variances so the channel keeps unit expected energy
    /// *after* sparsity masking instead of before (off by default).
    pub fn renormalized_after_masking(mut self, on: bool) -> Self {
        self.renormalize_after_masking = on;
        self
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn sparsity_prob(&self) -> f64 {
        self.sparsity_prob
    }

    pub fn renormalize_after_masking(&self) -> bool {
        self.renormalize_after_masking
    }

    /// Per-tap variances: sigma_l^2 = c * exp(-decay * l), normalized so
    /// they sum to one before sparsity masking.
    pub fn tap_variances(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n_paths)
            .map(|l| (-self.decay * l as f64).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        let mut scale = 1.0 / total;
        if self.renormalize_after_masking {
            let p1 = raw[0] / total;
            let expected = p1 + (1.0 - self.sparsity_prob) * (1.0 - p1);
            scale /= expected;
        }
        raw.iter().map(|v| v * scale).collect()
    }

    /// Expected channel energy E{sum |h_l|^2} under sparsity masking.
    pub fn expected_energy(&self) -> f64 {
        let vars = self.tap_variances();
        vars[0] + (1.0 - self.sparsity_prob) * vars[1..].iter().sum::<f64>()
    }
}

/// Draws one channel realization: Rayleigh taps on the decay profile,
/// with every path after the first independently zeroed with probability
/// `sparsity_prob`. The first path always survives.
pub fn draw_channel(spec: &ChannelSpec, rng: &mut impl Rng) -> Vec<Complex64> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let vars = spec.tap_variances();
    vars.iter()
        .enumerate()
        .map(|(l, &var)| {
            let sd = (var / 2.0).sqrt();
            let tap = Complex64::new(unit.sample(rng) * sd, unit.sample(rng) * sd);
            // Stream layout per tap: (re, im), then a mask draw for l > 0.
            if l > 0 && rng.gen_bool(spec.sparsity_prob) {
                Complex64::new(0.0, 0.0)
            } else {
                tap
            }
        })
        .collect()
}

/// A concrete channel draw plus the frame-boundary offset it is
/// embedded at.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    pub offset: usize,
}

/// What the receive window is filled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    /// Only the (distorted) training segment reaches the window; guard
    /// and data symbols are treated as absent.
    TrainingOnly,
    /// The whole distorted frame slides through the window.
    FullFrame,
}

/// Receiver-side configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiveConfig {
    pub snr_db: f64,
    pub window_mode: WindowMode,
    /// Linear amplitude pre-scale applied before the amplifier (input
    /// back-off). 1.0 drives the amplifier at nominal power.
    pub hpa_backoff: f64,
}

impl ReceiveConfig {
    pub fn new(snr_db: f64, window_mode: WindowMode) -> Self {
        ReceiveConfig {
            snr_db,
            window_mode,
            hpa_backoff: 1.0,
        }
    }

    /// Noise variance sigma^2 = P * 10^(-snr/10). An infinite SNR gives
    /// exactly zero noise.
    pub fn noise_variance(&self, power: f64) -> f64 {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            0.0
        } else {
            power * 10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Synthesizes the length-M received window
///
///   y_t = sum_l h_l * x~_{t - tau - l} + n_t
///
/// where `x~` is the amplifier-distorted training segment (training-only
/// mode) or the whole distorted frame (full-frame mode), indices outside
/// `x~` contribute zero, and `n` is circular complex Gaussian noise with
/// total variance sigma^2.
pub fn synthesize_rx(
    frame: &ComplexFrame,
    hpa: Option<&HpaParams>,
    chan: &ChannelRealization,
    cfg: &ReceiveConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    let spec = frame.spec();
    let m = spec.frame_len();
    if chan.offset > spec.max_offset() {
        return Err(Error::invalid(format!(
            "offset {} outside [0, {}]",
            chan.offset,
            spec.max_offset()
        )));
    }
    if chan.taps.is_empty() {
        return Err(Error::invalid("channel realization has no taps"));
    }

    let source: &[Complex64] = match cfg.window_mode {
        WindowMode::TrainingOnly => frame.training(),
        WindowMode::FullFrame => frame.samples(),
    };
    let distorted: Vec<Complex64> = match hpa {
        Some(params) => {
            if cfg.hpa_backoff != 1.0 {
                let scaled: Vec<Complex64> = source.iter().map(|v| v * cfg.hpa_backoff).collect();
                saleh_distort(&scaled, params)
            } else {
                saleh_distort(source, params)
            }
        }
        None => source.to_vec(),
    };

    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for (l, &tap) in chan.taps.iter().enumerate() {
        if tap == Complex64::new(0.0, 0.0) {
            continue;
        }
        let start = chan.offset + l;
        if start >= m {
            break;
        }
        let span = distorted.len().min(m - start);
        for (dst, src) in y[start..start + span].iter_mut().zip(&distorted[..span]) {
            *dst += tap * src;
        }
    }

    let sigma_sq = cfg.noise_variance(spec.power());
    if sigma_sq > 0.0 {
        let sd = (sigma_sq / 2.0).sqrt();
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for v in &mut y {
            *v += Complex64::new(unit.sample(rng) * sd, unit.sample(rng) * sd);
        }
    }
    Ok(y)
}
