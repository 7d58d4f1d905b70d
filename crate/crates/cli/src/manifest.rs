//! Run manifests: a JSON snapshot of what a command is about to do,
//! written into the output directory before any computation starts.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub created_unix: u64,
    pub created_utc: String,
    pub output_dir: String,
    pub profile: String,
    pub config_hash: String,
    /// Resolved experiment configuration(s).
    pub config: serde_json::Value,
    /// Command-specific extras (model paths, sweep axes, ...).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl RunManifest {
    pub fn new(
        command: &str,
        profile: &str,
        out_dir: &Path,
        config_hash: String,
        config: serde_json::Value,
        extra: serde_json::Value,
    ) -> Self {
        let now = std::time::SystemTime::now();
        let created_unix = now
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let created_utc = chrono::DateTime::<chrono::Utc>::from(now)
            .format("%Y-%m-%dT%H:%M:%SZ")
            .to_string();
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            created_utc,
            output_dir: out_dir.display().to_string(),
            profile: profile.to_string(),
            config_hash,
            config,
            extra,
        }
    }

    /// Writes `manifest.json` in the output directory.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
