use std::path::{Path, PathBuf};

use pancap_core::annotate::EndpointConfig;
use serde::Deserialize;

use crate::exit::Failure;

/// Values read from `--config`. Command-line flags take precedence over every field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub lenient: Option<bool>,
    pub paths: Paths,
    pub eval: EvalSection,
    pub stats: StatsSection,
    pub annotate: AnnotateSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub gt: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub iou_thresholds: Option<Vec<f64>>,
    pub meteor_thresholds: Option<Vec<f64>>,
    pub k: Option<f64>,
    pub pq_averaging: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub top_k: Option<usize>,
    pub bin_width: Option<f64>,
    pub tagger: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSection {
    pub templates: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub concurrency: Option<usize>,
    pub budget: Option<usize>,
    pub max_retries: Option<u32>,
    pub endpoint: Option<EndpointConfig>,
    pub rephrase: Option<RephraseSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RephraseSection {
    pub endpoint: EndpointConfig,
    pub prompt: Option<String>,
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

impl ToolkitConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => read_toml(p),
        }
    }
}

/// Flag, then config value, then nothing.
pub fn pick<T>(flag: Option<T>, config: &Option<T>) -> Option<T>
where
    T: Clone,
{
    flag.or_else(|| config.clone())
}

/// A rephrase endpoint file: either `[endpoint]` plus `prompt`, or a bare endpoint table with an
/// optional `prompt` key.
pub fn load_rephrase(path: &Path) -> Result<RephraseSection, Failure> {
    let v: toml::Value = read_toml(path)?;
    if v.get("endpoint").is_some() {
        return read_toml(path);
    }
    Ok(RephraseSection {
        endpoint: read_toml(path)?,
        prompt: v.get("prompt").and_then(|p| p.as_str()).map(str::to_string),
    })
}
