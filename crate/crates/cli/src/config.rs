//! The `run.json` envelope: every resolved input of a command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tilemil::eval::{ThresholdPolicy, TpsConfig};
use tilemil::pipeline::PipelineConfig;
use tilemil::stain::FeatureConfig;
use tilemil::synth::SynthConfig;

use crate::error::{usage, CliResult};

pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub cohort: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// `tiles.jsonl` written by `tile`.
    pub tiles: Option<PathBuf>,
    /// Tile label snapshot.
    pub labels: Option<PathBuf>,
    /// Directory holding `tumor_model.json` and `responder_model.json`.
    pub models: Option<PathBuf>,
    /// Precomputed `MILF` feature file; pixel features are used when unset.
    pub features: Option<PathBuf>,
    /// Patient scores for `eval enrich`, or an import source.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub folds: usize,
    pub repeats: usize,
    /// Fold assignment seed.
    pub seed: u64,
    /// Enrichment threshold; `policy` picks one when unset.
    pub threshold: Option<f64>,
    pub policy: ThresholdPolicy,
    pub rule_name: String,
    pub tps: TpsConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            repeats: 3,
            seed: 0,
            threshold: None,
            policy: ThresholdPolicy::MaxF1,
            rule_name: "score".into(),
            tps: TpsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { host: "127.0.0.1".into(), port: 8765 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    /// Subcommand that produced this file, e.g. `cv` or `train tumor`.
    pub command: String,
    pub paths: Paths,
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
    pub features: FeatureConfig,
    pub eval: EvalOptions,
    pub serve: ServeOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: 1,
            command: String::new(),
            paths: Paths::default(),
            pipeline: PipelineConfig::default(),
            synth: SynthConfig::default(),
            features: FeatureConfig::default(),
            eval: EvalOptions::default(),
            serve: ServeOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
        if cfg.version != 1 {
            return Err(usage(format!("unsupported config version {}", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn cohort(&self) -> CliResult<&Path> {
        self.paths.cohort.as_deref().ok_or_else(|| usage("missing --cohort"))
    }

    pub fn out(&self) -> CliResult<&Path> {
        self.paths.out.as_deref().ok_or_else(|| usage("missing --out"))
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(RUN_FILE), text)?;
        Ok(())
    }
}

/// Absolute form of `p`, so a recorded config replays from any directory.
pub fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn require_exists(p: &Path, what: &str) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(usage(format!("{what} not found: {}", p.display())))
    }
}
