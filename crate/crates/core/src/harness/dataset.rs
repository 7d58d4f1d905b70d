//! Labeled-sample synthesis.
//!
//! Every sample owns a counter-derived stream, so datasets are
//! reproducible and independent of execution order. Per-sample draw
//! order: training SNR (uniform policy only), offset, channel taps,
//! payload symbols (full-frame mode only), then noise.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elm::LabeledSample;
use crate::error::Result;
use crate::exec::{self, Exec};
use crate::impairments::{
    draw_channel, synthesize_rx, ChannelRealization, ReceiveConfig, WindowMode,
};
use crate::metrics::{cross_corr_metric, normalize_metric};
use crate::rng::{self, Domain};
use crate::waveform::{assemble_frame, random_data_symbols, zadoff_chu, ComplexFrame};

use super::{ExperimentConfig, TrainSnrPolicy};

/// What the network consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Normalized correlation metric (length M - Ns).
    Metric,
    /// Raw observation, real/imaginary parts stacked and unit-normalized
    /// (length 2M).
    RawObservation,
}

impl FeatureKind {
    pub fn dim(self, cfg: &ExperimentConfig) -> usize {
        match self {
            FeatureKind::Metric => cfg.search_len(),
            FeatureKind::RawObservation => 2 * cfg.frame.frame_len(),
        }
    }
}

/// Maps a complex observation to the ablation input: `[Re(y); Im(y)]`
/// scaled to unit Euclidean norm (all-zero input stays zero).
pub fn raw_observation_feature(y: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * y.len());
    out.extend(y.iter().map(|v| v.re));
    out.extend(y.iter().map(|v| v.im));
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut out {
            *v /= norm;
        }
    }
    out
}

/// Shared per-trial synthesis state.
pub(crate) struct TrialContext {
    pub train_seq: Vec<Complex64>,
    base_frame: ComplexFrame,
    full_frame: bool,
}

impl TrialContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let train_seq = zadoff_chu(cfg.frame.n_train(), cfg.zc_root, cfg.frame.power())?;
        let zeros = vec![Complex64::new(0.0, 0.0); cfg.frame.n_data()];
        let base_frame = assemble_frame(&cfg.frame, &train_seq, &zeros)?;
        Ok(TrialContext {
            train_seq,
            base_frame,
            full_frame: cfg.window_mode == WindowMode::FullFrame,
        })
    }

    /// Draws one trial at the given SNR: offset, channel, payload,
    /// noise. Returns the true offset and the received window.
    pub fn run(
        &self,
        cfg: &ExperimentConfig,
        snr_db: f64,
        rng: &mut ChaCha8Rng,
    ) -> (usize, Vec<Complex64>) {
        let offset = rng.gen_range(0..=cfg.frame.max_offset());
        let taps = draw_channel(&cfg.channel, rng);
        let chan = ChannelRealization { taps, offset };
        let rx_cfg = ReceiveConfig {
            snr_db,
            window_mode: cfg.window_mode,
            hpa_backoff: cfg.hpa_backoff,
        };
        let y = if self.full_frame {
            let data = random_data_symbols(cfg.frame.n_data(), cfg.frame.power(), rng);
            let frame = assemble_frame(&cfg.frame, &self.train_seq, &data)
                .expect("context frame geometry is valid");
            synthesize_rx(&frame, cfg.hpa.as_ref(), &chan, &rx_cfg, rng)
        } else {
            synthesize_rx(&self.base_frame, cfg.hpa.as_ref(), &chan, &rx_cfg, rng)
        }
        .expect("offset drawn in range");
        (offset, y)
    }

    /// The network input of the requested kind for an observation.
    pub fn feature(&self, kind: FeatureKind, y: &[Complex64]) -> Vec<f64> {
        match kind {
            FeatureKind::Metric => {
                let g = cross_corr_metric(y, &self.train_seq)
                    .expect("window longer than preamble by construction");
                normalize_metric(&g).values().to_vec()
            }
            FeatureKind::RawObservation => raw_observation_feature(y),
        }
    }
}

fn draw_train_snr(policy: TrainSnrPolicy, rng: &mut ChaCha8Rng) -> f64 {
    match policy {
        TrainSnrPolicy::FixedDb(db) => db,
        TrainSnrPolicy::UniformRange { lo, hi } => {
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..hi)
            }
        }
    }
}

/// Generates the labeled training set for `cfg`, parallel when enabled.
pub fn generate_dataset(cfg: &ExperimentConfig, kind: FeatureKind) -> Result<Vec<LabeledSample>> {
    generate_dataset_with_exec(Exec::Auto, cfg, kind)
}

/// Sequential variant of [`generate_dataset`]; produces identical
/// samples.
pub fn generate_dataset_seq(
    cfg: &ExperimentConfig,
    kind: FeatureKind,
) -> Result<Vec<LabeledSample>> {
    generate_dataset_with_exec(Exec::Sequential, cfg, kind)
}

pub(crate) fn generate_dataset_with_exec(
    exec: Exec,
    cfg: &ExperimentConfig,
    kind: FeatureKind,
) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    let ctx = TrialContext::new(cfg)?;
    let n_classes = cfg.search_len();
    let samples = exec::map_indexed(exec, cfg.n_train_samples, |i| {
        let mut rng = rng::stream(cfg.seeds.data, Domain::Data, i as u64);
        let snr_db = draw_train_snr(cfg.train_snr, &mut rng);
        let (offset, y) = ctx.run(cfg, snr_db, &mut rng);
        let feature = ctx.feature(kind, &y);
        LabeledSample {
            feature,
            label: offset,
            n_classes,
        }
    });
    Ok(samples)
}
