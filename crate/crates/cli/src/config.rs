//! Configuration file schema and resolution.
//!
//! The file is TOML with `[frame]`, `[channel]`, `[hpa]`, `[elm]`, and
//! `[run]` sections. Every field is optional; defaults are the
//! reference setup (Ns = 32, M = 160, guard 8, unit power, L = 8,
//! decay 0.2, sparsity 0.5, HPA preset 1, SNR grid 4..16 dB). Scale
//! parameters (training-set size, hidden width, trials per SNR) default
//! from the selected profile; explicit file values win, and CLI seed
//! flags override file seeds.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use elmfs_core::elm::Activation;
use elmfs_core::harness::{ExperimentConfig, Method, SeedSet, SolverChoice, TrainSnrPolicy};
use elmfs_core::impairments::{ChannelSpec, HpaParams, WindowMode};
use elmfs_core::waveform::FrameSpec;

/// Execution scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Reduced scale: 20k training samples, hidden = 5x window, 10k
    /// trials per SNR point.
    Desk,
    /// Full scale: 100k training samples, hidden = 10x window, 10k
    /// trials per SNR point.
    Paper,
}

impl Profile {
    pub fn n_train_samples(self) -> usize {
        match self {
            Profile::Desk => 20_000,
            Profile::Paper => 100_000,
        }
    }

    pub fn hidden_factor(self) -> usize {
        match self {
            Profile::Desk => 5,
            Profile::Paper => 10,
        }
    }

    pub fn n_trials_per_snr(self) -> usize {
        10_000
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    frame: Option<FrameSection>,
    channel: Option<ChannelSection>,
    hpa: Option<HpaSection>,
    elm: Option<ElmSection>,
    run: Option<RunSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSection {
    n_train: Option<usize>,
    n_guard: Option<usize>,
    frame_len: Option<usize>,
    power: Option<f64>,
    zc_root: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    n_paths: Option<usize>,
    decay: Option<f64>,
    sparsity_prob: Option<f64>,
    renormalize_after_masking: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HpaSection {
    /// "hpa1", "hpa2", or "none"; explicit coefficients override it.
    preset: Option<String>,
    alpha_a: Option<f64>,
    beta_a: Option<f64>,
    alpha_phi: Option<f64>,
    beta_phi: Option<f64>,
    backoff: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElmSection {
    n_hidden: Option<usize>,
    activation: Option<String>,
    solver: Option<String>,
    ridge_lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    snr_grid: Option<Vec<f64>>,
    train_snr: Option<TrainSnrField>,
    n_train_samples: Option<usize>,
    n_trials_per_snr: Option<usize>,
    methods: Option<Vec<String>>,
    window_mode: Option<String>,
    seed_data: Option<u64>,
    seed_model: Option<u64>,
    seed_eval: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TrainSnrField {
    /// "uniform" draws each sample's SNR over the grid span.
    Policy(String),
    /// A number fixes every sample to that SNR in dB.
    Fixed(f64),
    /// `[lo, hi]` draws uniformly over that range.
    Range([f64; 2]),
}

/// A parsed configuration file plus the knobs needed to resolve it.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub experiment: ExperimentConfig,
    /// True when the file pinned `elm.n_hidden` explicitly (sweeps then
    /// keep it fixed instead of rescaling with the frame).
    pub explicit_hidden: bool,
}

/// Seed overrides from the command line.
#[derive(Debug, Default, Clone, Copy)]
pub struct SeedOverrides {
    pub data: Option<u64>,
    pub model: Option<u64>,
    pub eval: Option<u64>,
}

pub fn load_file(path: &Path) -> Result<FileConfigHandle> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("config not found: {}", path.display()))?;
    let parsed: FileConfig =
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    Ok(FileConfigHandle { parsed })
}

/// An opaque handle so commands can resolve the same file more than
/// once (sweeps re-resolve per axis value).
pub struct FileConfigHandle {
    parsed: FileConfig,
}

impl FileConfigHandle {
    pub fn resolve(&self, profile: Profile, seeds: SeedOverrides) -> Result<ResolvedConfig> {
        let f = &self.parsed;

        let frame_sec = f.frame.as_ref();
        let n_train = frame_sec.and_then(|s| s.n_train).unwrap_or(32);
        let n_guard = frame_sec.and_then(|s| s.n_guard).unwrap_or(8);
        let frame_len = frame_sec.and_then(|s| s.frame_len).unwrap_or(160);
        let power = frame_sec.and_then(|s| s.power).unwrap_or(1.0);
        let zc_root = frame_sec.and_then(|s| s.zc_root).unwrap_or(1);
        let frame = FrameSpec::with_frame_len(n_train, n_guard, frame_len, power)
            .map_err(|e| anyhow::anyhow!("frame: {e}"))?;

        let chan_sec = f.channel.as_ref();
        let channel = ChannelSpec::new(
            chan_sec.and_then(|s| s.n_paths).unwrap_or(8),
            chan_sec.and_then(|s| s.decay).unwrap_or(0.2),
            chan_sec.and_then(|s| s.sparsity_prob).unwrap_or(0.5),
        )
        .map_err(|e| anyhow::anyhow!("channel: {e}"))?
        .renormalized_after_masking(
            chan_sec
                .and_then(|s| s.renormalize_after_masking)
                .unwrap_or(false),
        );

        let hpa_sec = f.hpa.as_ref();
        let hpa = resolve_hpa(hpa_sec)?;
        let hpa_backoff = hpa_sec.and_then(|s| s.backoff).unwrap_or(1.0);

        let run_sec = f.run.as_ref();
        let snr_grid = run_sec
            .and_then(|s| s.snr_grid.clone())
            .unwrap_or_else(|| vec![4.0, 8.0, 12.0, 16.0]);
        let train_snr = match run_sec.and_then(|s| s.train_snr.as_ref()) {
            None => TrainSnrPolicy::uniform_over(&snr_grid)
                .map_err(|e| anyhow::anyhow!("run.snr_grid: {e}"))?,
            Some(TrainSnrField::Fixed(db)) => TrainSnrPolicy::FixedDb(*db),
            Some(TrainSnrField::Range([lo, hi])) => {
                TrainSnrPolicy::UniformRange { lo: *lo, hi: *hi }
            }
            Some(TrainSnrField::Policy(name)) if name == "uniform" => {
                TrainSnrPolicy::uniform_over(&snr_grid)
                    .map_err(|e| anyhow::anyhow!("run.snr_grid: {e}"))?
            }
            Some(TrainSnrField::Policy(other)) => {
                bail!("run.train_snr: unknown policy '{other}' (expected \"uniform\", a number, or [lo, hi])")
            }
        };

        let methods = match run_sec.and_then(|s| s.methods.clone()) {
            None => vec![Method::Prop, Method::Corr],
            Some(names) => names
                .iter()
                .map(|n| {
                    n.parse::<Method>()
                        .map_err(|e| anyhow::anyhow!("run.methods: {e}"))
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let window_mode = match run_sec.and_then(|s| s.window_mode.as_deref()) {
            None | Some("training-only") => WindowMode::TrainingOnly,
            Some("full-frame") => WindowMode::FullFrame,
            Some(other) => bail!(
                "run.window_mode: unknown mode '{other}' (expected \"training-only\" or \"full-frame\")"
            ),
        };

        let elm_sec = f.elm.as_ref();
        let explicit_hidden = elm_sec.map(|s| s.n_hidden.is_some()).unwrap_or(false);
        let n_hidden = elm_sec
            .and_then(|s| s.n_hidden)
            .unwrap_or_else(|| profile.hidden_factor() * frame.search_len());
        let activation = match elm_sec.and_then(|s| s.activation.as_deref()) {
            None => Activation::Sigmoid,
            Some(name) => name
                .parse::<Activation>()
                .map_err(|e| anyhow::anyhow!("elm.activation: {e}"))?,
        };
        let ridge_lambda = elm_sec
            .and_then(|s| s.ridge_lambda)
            .unwrap_or(elmfs_core::elm::DEFAULT_RIDGE_LAMBDA);
        let solver = match elm_sec.and_then(|s| s.solver.as_deref()) {
            None | Some("auto") => SolverChoice::Auto,
            Some("svd") => SolverChoice::Svd,
            Some("ridge") => SolverChoice::Ridge(ridge_lambda),
            Some(other) => bail!(
                "elm.solver: unknown solver '{other}' (expected \"auto\", \"svd\", or \"ridge\")"
            ),
        };

        let seed_set = SeedSet {
            data: seeds
                .data
                .or(run_sec.and_then(|s| s.seed_data))
                .unwrap_or(SeedSet::default().data),
            model: seeds
                .model
                .or(run_sec.and_then(|s| s.seed_model))
                .unwrap_or(SeedSet::default().model),
            eval: seeds
                .eval
                .or(run_sec.and_then(|s| s.seed_eval))
                .unwrap_or(SeedSet::default().eval),
        };

        let experiment = ExperimentConfig {
            frame,
            zc_root,
            channel,
            hpa,
            hpa_backoff,
            window_mode,
            snr_grid,
            train_snr,
            n_train_samples: run_sec
                .and_then(|s| s.n_train_samples)
                .unwrap_or_else(|| profile.n_train_samples()),
            n_hidden,
            activation,
            solver,
            n_trials_per_snr: run_sec
                .and_then(|s| s.n_trials_per_snr)
                .unwrap_or_else(|| profile.n_trials_per_snr()),
            methods,
            seeds: seed_set,
        };
        experiment
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        Ok(ResolvedConfig {
            experiment,
            explicit_hidden,
        })
    }
}

fn resolve_hpa(sec: Option<&HpaSection>) -> Result<Option<HpaParams>> {
    let Some(sec) = sec else {
        return Ok(Some(HpaParams::hpa1()));
    };
    let explicit = [sec.alpha_a, sec.beta_a, sec.alpha_phi, sec.beta_phi];
    if explicit.iter().any(|v| v.is_some()) {
        if explicit.iter().any(|v| v.is_none()) {
            bail!(
                "hpa: explicit coefficients need all four of alpha_a, beta_a, alpha_phi, beta_phi"
            );
        }
        return Ok(Some(
            HpaParams::new(
                sec.alpha_a.unwrap(),
                sec.beta_a.unwrap(),
                sec.alpha_phi.unwrap(),
                sec.beta_phi.unwrap(),
            )
            .map_err(|e| anyhow::anyhow!("hpa: {e}"))?,
        ));
    }
    match sec.preset.as_deref() {
        None => Ok(Some(HpaParams::hpa1())),
        Some("none") => Ok(None),
        Some(name) => Ok(Some(HpaParams::by_name(name).ok_or_else(|| {
            anyhow::anyhow!(
                "hpa.preset: unknown preset '{name}' (expected \"hpa1\", \"hpa2\", or \"none\")"
            )
        })?)),
    }
}
