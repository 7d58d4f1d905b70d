//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use elmfs_core::elm::{io as model_io, ElmModel};
use elmfs_core::harness::{
    report, run_generalization, run_sweep, train_model, ExperimentConfig, FeatureKind, Method,
    ModelSet, SweepResult,
};
use elmfs_core::impairments::{ChannelSpec, HpaParams};
use elmfs_core::waveform::FrameSpec;

use crate::config::{FileConfigHandle, Profile, ResolvedConfig, SeedOverrides};
use crate::manifest::RunManifest;

pub struct CommandEnv {
    pub profile: Profile,
    pub seeds: SeedOverrides,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub dry_run: bool,
}

impl CommandEnv {
    fn manifest(
        &self,
        command: &str,
        config_hash: String,
        config: serde_json::Value,
        extra: serde_json::Value,
    ) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        RunManifest::new(
            command,
            self.profile.name(),
            &self.out_dir,
            config_hash,
            config,
            extra,
        )
        .write(&self.out_dir)
    }

    fn emit(&self, result: &SweepResult, stem: &str, title: &str) -> Result<PathBuf> {
        let csv_path = self.out_dir.join(format!("{stem}.csv"));
        report::write_csv(result, &csv_path)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        validate_csv(&csv_path, result.rows.len())?;
        if self.plot {
            let svg_path = self.out_dir.join(format!("{stem}.svg"));
            report::write_svg(result, &svg_path, title)
                .with_context(|| format!("writing {}", svg_path.display()))?;
        }
        Ok(csv_path)
    }
}

/// Re-reads a written CSV and checks schema + row count.
fn validate_csv(path: &Path, expected_rows: usize) -> Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("re-reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != report::CSV_HEADER {
        bail!("{}: header does not match schema", path.display());
    }
    let rows = lines.filter(|l| !l.is_empty()).count();
    if rows != expected_rows {
        bail!(
            "{}: expected {expected_rows} data rows, found {rows}",
            path.display()
        );
    }
    Ok(())
}

fn config_json(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn cmd_train(
    env: &CommandEnv,
    handle: &FileConfigHandle,
    model_out: Option<PathBuf>,
) -> Result<()> {
    let resolved = handle.resolve(env.profile, env.seeds)?;
    let cfg = &resolved.experiment;
    let model_path = model_out.unwrap_or_else(|| env.out_dir.join("model.elm"));
    env.manifest(
        "train",
        cfg.config_hash(),
        config_json(cfg),
        serde_json::json!({ "model_path": model_path.display().to_string() }),
    )?;
    if env.dry_run {
        println!("dry run: config resolved, manifest written");
        return Ok(());
    }

    let model = train_model(cfg, FeatureKind::Metric).context("training failed")?;
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    model_io::save_model(&model, &model_path)
        .with_context(|| format!("writing {}", model_path.display()))?;
    // Validate the artifact round-trips before declaring success.
    model_io::load_model(&model_path)
        .with_context(|| format!("validating {}", model_path.display()))?;
    println!(
        "trained {} hidden units on {} samples -> {}",
        model.n_hidden(),
        cfg.n_train_samples,
        model_path.display()
    );
    Ok(())
}

pub fn cmd_eval(
    env: &CommandEnv,
    handle: &FileConfigHandle,
    model_path: Option<PathBuf>,
) -> Result<()> {
    let resolved = handle.resolve(env.profile, env.seeds)?;
    let cfg = &resolved.experiment;
    if cfg.methods.contains(&Method::FsLearn) {
        bail!("eval cannot run fs_learn (raw-observation models are not persistable); use `elmfs ablate`");
    }
    let needs_model = cfg.methods.iter().any(|m| m.needs_model());
    if needs_model && model_path.is_none() {
        bail!("method 'prop' requested: --model PATH is required");
    }

    env.manifest(
        "eval",
        cfg.config_hash(),
        config_json(cfg),
        serde_json::json!({
            "model_path": model_path.as_ref().map(|p| p.display().to_string()),
        }),
    )?;
    if env.dry_run {
        println!("dry run: config resolved, manifest written");
        return Ok(());
    }

    let model: Option<ElmModel> = match &model_path {
        Some(path) => Some(
            model_io::load_model(path).with_context(|| format!("loading {}", path.display()))?,
        ),
        None => None,
    };
    let models = ModelSet {
        prop: model.as_ref(),
        fs_learn: None,
    };
    let result = run_sweep(cfg, &models)?;
    let csv = env.emit(
        &result,
        "results",
        "frame synchronization error probability",
    )?;
    println!("wrote {}", csv.display());
    Ok(())
}

/// Sweep axes: each value re-derives the experiment and retrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Channel path count.
    L,
    /// Training sequence length.
    Ns,
    /// Frame length.
    M,
    /// Amplifier preset.
    Hpa,
    /// Channel decay coefficient.
    Eta,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::L => "L",
            Axis::Ns => "Ns",
            Axis::M => "M",
            Axis::Hpa => "hpa",
            Axis::Eta => "eta",
        }
    }
}

fn apply_axis(
    base: &ResolvedConfig,
    profile: Profile,
    axis: Axis,
    value: &str,
) -> Result<ExperimentConfig> {
    let mut cfg = base.experiment.clone();
    match axis {
        Axis::L => {
            let l: usize = value
                .parse()
                .with_context(|| format!("axis L value '{value}'"))?;
            cfg.channel = ChannelSpec::new(l, cfg.channel.decay(), cfg.channel.sparsity_prob())
                .map_err(|e| anyhow::anyhow!("axis L: {e}"))?
                .renormalized_after_masking(cfg.channel.renormalize_after_masking());
        }
        Axis::Eta => {
            let eta: f64 = value
                .parse()
                .with_context(|| format!("axis eta value '{value}'"))?;
            cfg.channel = ChannelSpec::new(cfg.channel.n_paths(), eta, cfg.channel.sparsity_prob())
                .map_err(|e| anyhow::anyhow!("axis eta: {e}"))?
                .renormalized_after_masking(cfg.channel.renormalize_after_masking());
        }
        Axis::Ns => {
            let ns: usize = value
                .parse()
                .with_context(|| format!("axis Ns value '{value}'"))?;
            cfg.frame = FrameSpec::with_frame_len(
                ns,
                cfg.frame.n_guard(),
                cfg.frame.frame_len(),
                cfg.frame.power(),
            )
            .map_err(|e| anyhow::anyhow!("axis Ns: {e}"))?;
        }
        Axis::M => {
            let m: usize = value
                .parse()
                .with_context(|| format!("axis M value '{value}'"))?;
            cfg.frame = FrameSpec::with_frame_len(
                cfg.frame.n_train(),
                cfg.frame.n_guard(),
                m,
                cfg.frame.power(),
            )
            .map_err(|e| anyhow::anyhow!("axis M: {e}"))?;
        }
        Axis::Hpa => {
            cfg.hpa = match value {
                "none" => None,
                name => Some(
                    HpaParams::by_name(name)
                        .ok_or_else(|| anyhow::anyhow!("axis hpa: unknown preset '{name}'"))?,
                ),
            };
        }
    }
    // Geometry changes move the network input dimension; rescale the
    // hidden width with the profile factor unless the file pinned it.
    if !base.explicit_hidden {
        cfg.n_hidden = profile.hidden_factor() * cfg.frame.search_len();
    }
    cfg.validate()
        .map_err(|e| anyhow::anyhow!("axis {}={value}: {e}", axis.name()))?;
    Ok(cfg)
}

pub fn cmd_sweep(
    env: &CommandEnv,
    handle: &FileConfigHandle,
    axis: Axis,
    values: &[String],
) -> Result<()> {
    if values.is_empty() {
        bail!("axis {} needs at least one value", axis.name());
    }
    let base = handle.resolve(env.profile, env.seeds)?;
    // Resolve every point up front so bad values fail before compute.
    let mut points = Vec::new();
    for value in values {
        points.push((value.clone(), apply_axis(&base, env.profile, axis, value)?));
    }

    let extra = serde_json::json!({
        "axis": axis.name(),
        "values": values,
        "points": points
            .iter()
            .map(|(v, cfg)| {
                serde_json::json!({
                    "value": v,
                    "config_hash": cfg.config_hash(),
                    "csv": format!("sweep_{}_{}.csv", axis.name(), v),
                })
            })
            .collect::<Vec<_>>(),
    });
    env.manifest(
        "sweep",
        base.experiment.config_hash(),
        config_json(&base.experiment),
        extra,
    )?;
    if env.dry_run {
        println!(
            "dry run: {} sweep points resolved, manifest written",
            points.len()
        );
        return Ok(());
    }

    let mut results = Vec::new();
    for (value, cfg) in &points {
        let model = if cfg.methods.contains(&Method::Prop) {
            Some(train_model(cfg, FeatureKind::Metric)?)
        } else {
            None
        };
        let fs = if cfg.methods.contains(&Method::FsLearn) {
            Some(train_model(cfg, FeatureKind::RawObservation)?)
        } else {
            None
        };
        let models = ModelSet {
            prop: model.as_ref(),
            fs_learn: fs.as_ref(),
        };
        let result = run_sweep(cfg, &models)?;
        let stem = format!("sweep_{}_{}", axis.name(), value);
        let title = format!("{} = {}", axis.name(), value);
        env.emit(&result, &stem, &title)?;
        println!("swept {} = {}", axis.name(), value);
        results.push(result);
    }

    let merged = report::merged_csv_string(&results.iter().collect::<Vec<_>>());
    let merged_path = env
        .out_dir
        .join(format!("sweep_{}_merged.csv", axis.name()));
    std::fs::write(&merged_path, merged)?;
    println!("wrote {}", merged_path.display());
    Ok(())
}

pub fn cmd_generalize(
    env: &CommandEnv,
    train_handle: &FileConfigHandle,
    test_handle: &FileConfigHandle,
) -> Result<()> {
    let train_cfg = train_handle.resolve(env.profile, env.seeds)?.experiment;
    let test_cfg = test_handle.resolve(env.profile, env.seeds)?.experiment;
    env.manifest(
        "generalize",
        test_cfg.config_hash(),
        serde_json::json!({
            "train": config_json(&train_cfg),
            "test": config_json(&test_cfg),
        }),
        serde_json::json!({ "train_config_hash": train_cfg.config_hash() }),
    )?;
    if env.dry_run {
        println!("dry run: configs resolved, manifest written");
        return Ok(());
    }

    let result = run_generalization(&train_cfg, &test_cfg)?;
    let csv = env.emit(&result, "generalization", "generalization sweep")?;
    println!("wrote {}", csv.display());
    Ok(())
}

pub fn cmd_ablate(env: &CommandEnv, handle: &FileConfigHandle) -> Result<()> {
    let resolved = handle.resolve(env.profile, env.seeds)?;
    let mut cfg = resolved.experiment;
    // The ablation compares all three estimators on one run.
    cfg.methods = vec![Method::Prop, Method::Corr, Method::FsLearn];
    env.manifest(
        "ablate",
        cfg.config_hash(),
        config_json(&cfg),
        serde_json::Value::Null,
    )?;
    if env.dry_run {
        println!("dry run: config resolved, manifest written");
        return Ok(());
    }

    let prop = train_model(&cfg, FeatureKind::Metric)?;
    let fs = train_model(&cfg, FeatureKind::RawObservation)?;
    let models = ModelSet {
        prop: Some(&prop),
        fs_learn: Some(&fs),
    };
    let result = run_sweep(&cfg, &models)?;
    let csv = env.emit(&result, "ablation", "preprocessing ablation")?;
    println!("wrote {}", csv.display());
    Ok(())
}
