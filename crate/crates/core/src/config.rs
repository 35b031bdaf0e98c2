//! Pipeline configuration: one TOML file, every section optional.
//!
//! | key | default |
//! |-----|---------|
//! | `preprocess.patch_px` | 28 |
//! | `preprocess.train_threshold_min` / `_max` | 512 / 768 |
//! | `preprocess.infer_upscale_min` / `_max` | 1.1 / 1.3 |
//! | `preprocess.low_res_cutoff` | 448 |
//! | `docqa.min_pairs` | 5 |
//! | `chart.qa.min_pairs`, `table.min_pairs` | 3 |
//! | `chart.extra_topics` | none; the pool always holds "Art & Design" and "Science & Nature" |
//! | `chart.tasks` | per-type task lists, see [`TaskMatrix`] |
//! | `mix.target_synthetic_fraction` | 0.2 |
//! | `augment.max_ocr_chars` / `min_mean_confidence` | 2000 / 0.9 |
//!
//! Table task types are fixed to the eleven names of [`crate::table::TableTaskType`].
//! Unknown keys are rejected with their dotted path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::augment::AugmentPolicy;
use crate::chart::{ChartQaConfig, Locale, TaskMatrix};
use crate::docqa::DocQaConfig;
use crate::gateway::{GatewayConfig, GatewayMode};
use crate::mix::SourceSpec;
use crate::preprocess::ResizePolicy;
use crate::table::TableQaConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    /// Directory of OCR layout JSON files, one page each.
    pub docs: PathBuf,
    /// Directory of chart seed directories.
    pub chart_seeds: PathBuf,
    /// Directory of `.html` files, one table each.
    pub tables: PathBuf,
}

impl Default for InputPaths {
    fn default() -> Self {
        Self {
            docs: PathBuf::from("fixtures/docs"),
            chart_seeds: PathBuf::from("fixtures/charts"),
            tables: PathBuf::from("fixtures/tables"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartRouteKind {
    Rule,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartQaSource {
    /// QA pairs come from the gateway.
    Llm,
    /// QA pairs come from the built-in question templates.
    Preset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartSection {
    pub route: ChartRouteKind,
    /// Target language of rule-based mutations.
    pub locale: Locale,
    pub variants_per_seed: u32,
    pub extra_topics: Vec<String>,
    pub qa_source: ChartQaSource,
    pub qa: ChartQaConfig,
    pub tasks: TaskMatrix,
}

impl Default for ChartSection {
    fn default() -> Self {
        Self {
            route: ChartRouteKind::Rule,
            locale: Locale::Zh,
            variants_per_seed: 1,
            extra_topics: Vec::new(),
            qa_source: ChartQaSource::Llm,
            qa: ChartQaConfig::default(),
            tasks: TaskMatrix::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSection {
    pub target_synthetic_fraction: f64,
    pub sources: Vec<SourceSpec>,
}

impl Default for MixSection {
    fn default() -> Self {
        Self { target_synthetic_fraction: 0.2, sources: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    pub gateway: GatewayConfig,
    pub docqa: DocQaConfig,
    pub chart: ChartSection,
    pub table: TableQaConfig,
    pub preprocess: ResizePolicy,
    pub mix: MixSection,
    pub augment: AugmentPolicy,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::de::Deserializer::parse(text)
            .map_err(|e| ConfigError::Parse { path: "$".into(), message: e.to_string() })?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Parse { path, message: e.into_inner().message().to_string() }
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Loads `path`; relative input and replay paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.inputs.docs,
            &mut self.inputs.chart_seeds,
            &mut self.inputs.tables,
            &mut self.gateway.replay_store,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Applies `DOCSYNTH_MODE`, `DOCSYNTH_ENDPOINT`, `DOCSYNTH_MODEL` and
    /// `DOCSYNTH_REPLAY_STORE` from `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(mode) = var("DOCSYNTH_MODE") {
            self.gateway.mode = match mode.trim().to_ascii_lowercase().as_str() {
                "live" => GatewayMode::Live,
                "record" => GatewayMode::Record,
                "replay" => GatewayMode::Replay,
                other => return Err(ConfigError::Invalid(format!("DOCSYNTH_MODE: unknown mode {other:?}"))),
            };
        }
        if let Some(v) = var("DOCSYNTH_ENDPOINT") {
            self.gateway.endpoint = v;
        }
        if let Some(v) = var("DOCSYNTH_MODEL") {
            self.gateway.model = v;
        }
        if let Some(v) = var("DOCSYNTH_REPLAY_STORE") {
            self.gateway.replay_store = PathBuf::from(v);
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.docqa.check().map_err(|e| invalid(&e))?;
        self.chart.tasks.check().map_err(|e| invalid(&e))?;
        self.preprocess.check().map_err(|e| invalid(&e))?;
        if self.chart.variants_per_seed == 0 {
            return Err(ConfigError::Invalid("chart.variants_per_seed must be at least 1".into()));
        }
        if self.chart.qa.min_pairs == 0 || self.table.min_pairs == 0 {
            return Err(ConfigError::Invalid("min_pairs must be at least 1".into()));
        }
        if self.gateway.max_inflight == 0 {
            return Err(ConfigError::Invalid("gateway.max_inflight must be positive".into()));
        }
        let p = self.mix.target_synthetic_fraction;
        if !(p > 0.0 && p < 1.0) {
            return Err(ConfigError::Invalid(format!("mix.target_synthetic_fraction must lie in (0, 1), got {p}")));
        }
        Ok(())
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
