//! Monte Carlo evaluation sweeps and generalization runs.
//!
//! Every (SNR, trial) cell draws its own evaluation stream, so cells are
//! independent of each other and of the training set. All requested
//! methods see the same per-trial realization; their error counts are
//! accumulated per cell and reported with Wilson intervals.

use crate::elm::ElmModel;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::rng::{self, Domain};

use super::dataset::{generate_dataset_with_exec, FeatureKind, TrialContext};
use super::stats::wilson_interval;
use super::{ExperimentConfig, Method, SeedSet};

/// One aggregated sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    /// Extra qualifier for generalization runs (e.g. train/test field
    /// values); folded into the method label in reports.
    pub tag: Option<String>,
    pub snr_db: f64,
    pub trials: usize,
    pub errors: usize,
}

impl SweepRow {
    /// Estimated error probability.
    pub fn pe(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// 95% Wilson interval around [`Self::pe`].
    pub fn ci(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.trials)
    }

    /// Method name, qualified by the tag when present.
    pub fn label(&self) -> String {
        match &self.tag {
            Some(tag) => format!("{}[{}]", self.method.name(), tag),
            None => self.method.name().to_string(),
        }
    }
}

/// A complete sweep outcome with its reproducibility fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
    pub seeds: SeedSet,
}

impl SweepResult {
    /// The row for `(method, snr_db)`, if present.
    pub fn row(&self, method: Method, snr_db: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db)
    }
}

/// Trained models handed to a sweep. `corr` needs none; `prop` and
/// `fs_learn` each need theirs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelSet<'a> {
    pub prop: Option<&'a ElmModel>,
    pub fs_learn: Option<&'a ElmModel>,
}

impl<'a> ModelSet<'a> {
    pub fn with_prop(model: &'a ElmModel) -> Self {
        ModelSet {
            prop: Some(model),
            fs_learn: None,
        }
    }
}

/// Generates the training set for `cfg` and fits the network that
/// consumes `kind` features.
pub fn train_model(cfg: &ExperimentConfig, kind: FeatureKind) -> Result<ElmModel> {
    train_model_with_exec(Exec::Auto, cfg, kind)
}

pub(crate) fn train_model_with_exec(
    exec: Exec,
    cfg: &ExperimentConfig,
    kind: FeatureKind,
) -> Result<ElmModel> {
    cfg.validate()?;
    let samples = generate_dataset_with_exec(exec, cfg, kind)?;
    let solver = cfg.solver.resolve(samples.len(), cfg.n_hidden);
    let frame_dims = match kind {
        FeatureKind::Metric => Some((cfg.frame.frame_len(), cfg.frame.n_train())),
        FeatureKind::RawObservation => None,
    };
    crate::elm::train_with_exec(
        exec,
        &samples,
        cfg.n_hidden,
        cfg.activation,
        cfg.seeds.model,
        solver,
        frame_dims,
    )
}

fn check_models(cfg: &ExperimentConfig, models: &ModelSet) -> Result<()> {
    for method in &cfg.methods {
        match method {
            Method::Corr => {}
            Method::Prop => {
                let model = models.prop.ok_or_else(|| {
                    Error::invalid("method 'prop' requested but no metric model supplied")
                })?;
                let expected = cfg.search_len();
                if model.input_dim() != expected || model.n_classes() != expected {
                    return Err(Error::DimMismatch {
                        expected,
                        got: model.input_dim(),
                        context: "prop model input vs frame search window",
                    });
                }
                if let Some((m, ns)) = model.frame_dims() {
                    if m != cfg.frame.frame_len() || ns != cfg.frame.n_train() {
                        return Err(Error::invalid(format!(
                            "prop model trained for frame (M={m}, Ns={ns}) but config has \
                             (M={}, Ns={})",
                            cfg.frame.frame_len(),
                            cfg.frame.n_train()
                        )));
                    }
                }
            }
            Method::FsLearn => {
                let model = models.fs_learn.ok_or_else(|| {
                    Error::invalid("method 'fs_learn' requested but no observation model supplied")
                })?;
                let expected = 2 * cfg.frame.frame_len();
                if model.input_dim() != expected {
                    return Err(Error::DimMismatch {
                        expected,
                        got: model.input_dim(),
                        context: "fs_learn model input vs stacked observation",
                    });
                }
                if model.n_classes() != cfg.search_len() {
                    return Err(Error::DimMismatch {
                        expected: cfg.search_len(),
                        got: model.n_classes(),
                        context: "fs_learn model classes vs search window",
                    });
                }
            }
        }
    }
    Ok(())
}

/// Runs the evaluation sweep for every configured method over the SNR
/// grid. Rows come back method-major in configuration order.
pub fn run_sweep(cfg: &ExperimentConfig, models: &ModelSet) -> Result<SweepResult> {
    run_sweep_impl(Exec::Auto, cfg, models, None)
}

/// Sequential variant of [`run_sweep`]; produces identical counts.
pub fn run_sweep_seq(cfg: &ExperimentConfig, models: &ModelSet) -> Result<SweepResult> {
    run_sweep_impl(Exec::Sequential, cfg, models, None)
}

fn run_sweep_impl(
    exec: Exec,
    cfg: &ExperimentConfig,
    models: &ModelSet,
    tag: Option<String>,
) -> Result<SweepResult> {
    cfg.validate()?;
    check_models(cfg, models)?;
    let ctx = TrialContext::new(cfg)?;

    let needs_metric = cfg
        .methods
        .iter()
        .any(|m| matches!(m, Method::Corr | Method::Prop));
    let needs_raw = cfg.methods.contains(&Method::FsLearn);

    let n_methods = cfg.methods.len();
    let n_trials = cfg.n_trials_per_snr;
    let mut rows = Vec::with_capacity(n_methods * cfg.snr_grid.len());

    // Cell-major evaluation; each trial stream is keyed by its global
    // index so cells never share draws.
    let mut per_method_errors: Vec<Vec<usize>> = vec![vec![0; cfg.snr_grid.len()]; n_methods];
    for (cell, &snr_db) in cfg.snr_grid.iter().enumerate() {
        let chunk = exec::balanced_chunk(n_trials).max(64);
        let counts = exec::map_chunks(exec, n_trials, chunk, |start, end| {
            let mut errors = vec![0usize; n_methods];
            for t in start..end {
                let index = (cell * n_trials + t) as u64;
                let mut trial_rng = rng::stream(cfg.seeds.eval, Domain::Eval, index);
                let (offset, y) = ctx.run(cfg, snr_db, &mut trial_rng);

                let mut raw_metric = None;
                if needs_metric {
                    raw_metric = Some(
                        crate::metrics::cross_corr_metric(&y, &ctx.train_seq)
                            .expect("validated geometry"),
                    );
                }
                for (mi, method) in cfg.methods.iter().enumerate() {
                    let estimate = match method {
                        Method::Corr => crate::metrics::corr_estimate(
                            raw_metric.as_deref().expect("metric computed"),
                        )
                        .expect("non-empty metric"),
                        Method::Prop => {
                            let normalized = crate::metrics::normalize_metric(
                                raw_metric.as_deref().expect("metric computed"),
                            );
                            models
                                .prop
                                .expect("checked")
                                .infer(normalized.values())
                                .expect("dims checked")
                                .0
                        }
                        Method::FsLearn => {
                            debug_assert!(needs_raw);
                            let feature = super::dataset::raw_observation_feature(&y);
                            models
                                .fs_learn
                                .expect("checked")
                                .infer(&feature)
                                .expect("dims checked")
                                .0
                        }
                    };
                    if estimate != offset {
                        errors[mi] += 1;
                    }
                }
            }
            errors
        });
        for chunk_counts in counts {
            for (mi, e) in chunk_counts.into_iter().enumerate() {
                per_method_errors[mi][cell] += e;
            }
        }
    }

    for (mi, method) in cfg.methods.iter().enumerate() {
        for (cell, &snr_db) in cfg.snr_grid.iter().enumerate() {
            rows.push(SweepRow {
                method: *method,
                tag: tag.clone(),
                snr_db,
                trials: n_trials,
                errors: per_method_errors[mi][cell],
            });
        }
    }

    Ok(SweepResult {
        rows,
        config_hash: cfg.config_hash(),
        seeds: cfg.seeds,
    })
}

/// Fields allowed to differ between generalization train and test
/// configurations, with their values rendered for row tags.
fn generalization_tag(train: &ExperimentConfig, test: &ExperimentConfig) -> Result<Option<String>> {
    if train.frame != test.frame
        || train.zc_root != test.zc_root
        || train.window_mode != test.window_mode
        || train.hpa_backoff != test.hpa_backoff
        || train.channel.sparsity_prob() != test.channel.sparsity_prob()
        || train.channel.renormalize_after_masking() != test.channel.renormalize_after_masking()
    {
        return Err(Error::invalid(
            "generalization configs may differ only in channel path count, decay, or hpa",
        ));
    }
    let mut parts = Vec::new();
    if train.channel.n_paths() != test.channel.n_paths() {
        parts.push(format!(
            "train_L={},test_L={}",
            train.channel.n_paths(),
            test.channel.n_paths()
        ));
    }
    if train.channel.decay() != test.channel.decay() {
        parts.push(format!(
            "train_eta={},test_eta={}",
            train.channel.decay(),
            test.channel.decay()
        ));
    }
    if train.hpa != test.hpa {
        parts.push(format!(
            "train_hpa={},test_hpa={}",
            hpa_label(&train.hpa),
            hpa_label(&test.hpa)
        ));
    }
    Ok(if parts.is_empty() {
        None
    } else {
        Some(parts.join(","))
    })
}

fn hpa_label(hpa: &Option<crate::impairments::HpaParams>) -> String {
    match hpa {
        None => "none".to_string(),
        Some(p) if *p == crate::impairments::HpaParams::hpa1() => "hpa1".to_string(),
        Some(p) if *p == crate::impairments::HpaParams::hpa2() => "hpa2".to_string(),
        Some(p) => format!(
            "custom({},{},{},{})",
            p.alpha_a, p.beta_a, p.alpha_phi, p.beta_phi
        ),
    }
}

/// Trains on `train_cfg`, evaluates on `test_cfg`. The configurations
/// may differ only in channel path count, channel decay, or amplifier;
/// result rows are tagged with the differing train/test values.
pub fn run_generalization(
    train_cfg: &ExperimentConfig,
    test_cfg: &ExperimentConfig,
) -> Result<SweepResult> {
    train_cfg.validate()?;
    test_cfg.validate()?;
    let tag = generalization_tag(train_cfg, test_cfg)?;

    let prop_model = if test_cfg.methods.contains(&Method::Prop) {
        Some(train_model(train_cfg, FeatureKind::Metric)?)
    } else {
        None
    };
    let fs_model = if test_cfg.methods.contains(&Method::FsLearn) {
        Some(train_model(train_cfg, FeatureKind::RawObservation)?)
    } else {
        None
    };
    let models = ModelSet {
        prop: prop_model.as_ref(),
        fs_learn: fs_model.as_ref(),
    };
    run_sweep_impl(Exec::Auto, test_cfg, &models, tag)
}

/// Hidden-width scaling rule used by sweeps that change the frame
/// geometry: hidden count = factor × search window.
pub fn hidden_for_search_len(factor: usize, search_len: usize) -> usize {
    factor * search_len
}
