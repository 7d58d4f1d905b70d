//! Experiment harness: reproducible dataset generation, Monte Carlo
//! sweeps, generalization runs, and result reporting.

pub mod dataset;
pub mod report;
pub mod stats;
pub mod sweep;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::elm::{Activation, Solver};
use crate::error::{Error, Result};
use crate::impairments::{ChannelSpec, HpaParams, WindowMode};
use crate::waveform::FrameSpec;

pub use dataset::{generate_dataset, generate_dataset_seq, raw_observation_feature, FeatureKind};
pub use sweep::{
    run_generalization, run_sweep, run_sweep_seq, train_model, ModelSet, SweepResult, SweepRow,
};

/// Offset estimation methods the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Network fed the normalized correlation metric.
    Prop,
    /// Classical correlation argmax.
    Corr,
    /// Network fed the raw observation (preprocessing ablation).
    FsLearn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Prop => "prop",
            Method::Corr => "corr",
            Method::FsLearn => "fs_learn",
        }
    }

    /// Whether this method requires a trained model.
    pub fn needs_model(self) -> bool {
        !matches!(self, Method::Corr)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prop" => Ok(Method::Prop),
            "corr" => Ok(Method::Corr),
            "fs_learn" | "fslearn" => Ok(Method::FsLearn),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// The three independent seed domains of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub data: u64,
    pub model: u64,
    pub eval: u64,
}

impl Default for SeedSet {
    fn default() -> Self {
        SeedSet {
            data: 1,
            model: 2,
            eval: 3,
        }
    }
}

/// SNR assignment for training samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainSnrPolicy {
    /// Every sample at the same SNR.
    FixedDb(f64),
    /// Per-sample SNR uniform over `[lo, hi]` dB.
    UniformRange { lo: f64, hi: f64 },
}

impl TrainSnrPolicy {
    /// Uniform over the span of an evaluation grid.
    pub fn uniform_over(grid: &[f64]) -> Result<Self> {
        let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("snr grid must be non-empty and finite"));
        }
        Ok(TrainSnrPolicy::UniformRange { lo, hi })
    }
}

/// Output-weight solver selection at the configuration level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Ridge at scale, svd on small sets (see [`Solver::auto_for`]).
    Auto,
    Svd,
    Ridge(f64),
}

impl SolverChoice {
    pub fn resolve(self, n_samples: usize, n_hidden: usize) -> Solver {
        match self {
            SolverChoice::Auto => Solver::auto_for(n_samples, n_hidden),
            SolverChoice::Svd => Solver::Svd,
            SolverChoice::Ridge(l) => Solver::Ridge(l),
        }
    }
}

/// Everything a sweep needs: signal geometry, impairments, network and
/// dataset sizes, the evaluation grid, and the seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub frame: FrameSpec,
    pub zc_root: usize,
    pub channel: ChannelSpec,
    pub hpa: Option<HpaParams>,
    /// Linear amplitude pre-scale ahead of the amplifier.
    pub hpa_backoff: f64,
    pub window_mode: WindowMode,
    pub snr_grid: Vec<f64>,
    pub train_snr: TrainSnrPolicy,
    pub n_train_samples: usize,
    pub n_hidden: usize,
    pub activation: Activation,
    pub solver: SolverChoice,
    pub n_trials_per_snr: usize,
    pub methods: Vec<Method>,
    pub seeds: SeedSet,
}

impl ExperimentConfig {
    /// A configuration with the reference geometry (Ns = 32, M = 160,
    /// guard 8, unit power, L = 8, decay 0.2, HPA preset 1) that callers
    /// specialize.
    pub fn baseline() -> Self {
        let snr_grid = vec![4.0, 8.0, 12.0, 16.0];
        ExperimentConfig {
            frame: FrameSpec::with_frame_len(32, 8, 160, 1.0).expect("valid baseline frame"),
            zc_root: 1,
            channel: ChannelSpec::new(8, 0.2, 0.5).expect("valid baseline channel"),
            hpa: Some(HpaParams::hpa1()),
            hpa_backoff: 1.0,
            window_mode: WindowMode::TrainingOnly,
            train_snr: TrainSnrPolicy::uniform_over(&snr_grid).expect("grid non-empty"),
            snr_grid,
            n_train_samples: 20_000,
            n_hidden: 640,
            activation: Activation::Sigmoid,
            solver: SolverChoice::Auto,
            n_trials_per_snr: 10_000,
            methods: vec![Method::Prop, Method::Corr],
            seeds: SeedSet::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.zc_root == 0 || gcd(self.zc_root, self.frame.n_train()) != 1 {
            return Err(Error::invalid(format!(
                "zc_root {} not coprime with n_train {}",
                self.zc_root,
                self.frame.n_train()
            )));
        }
        if self.snr_grid.is_empty() {
            return Err(Error::invalid("snr_grid must not be empty"));
        }
        if self.snr_grid.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("snr_grid contains NaN"));
        }
        if self.n_train_samples < 1 {
            return Err(Error::invalid("n_train_samples must be at least 1"));
        }
        if self.n_hidden < 1 {
            return Err(Error::invalid("n_hidden must be at least 1"));
        }
        if self.n_trials_per_snr < 1 {
            return Err(Error::invalid("n_trials_per_snr must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods must not be empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::invalid(format!("duplicate method '{}'", m.name())));
            }
        }
        if self.hpa_backoff <= 0.0 || !self.hpa_backoff.is_finite() {
            return Err(Error::invalid("hpa_backoff must be positive and finite"));
        }
        if let TrainSnrPolicy::UniformRange { lo, hi } = self.train_snr {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::invalid(format!(
                    "train_snr range [{lo}, {hi}] is inverted"
                )));
            }
        }
        Ok(())
    }

    /// Search-window size; also the metric length and class count.
    pub fn search_len(&self) -> usize {
        self.frame.search_len()
    }

    /// Stable fingerprint of every field except the seeds.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("seeds");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
