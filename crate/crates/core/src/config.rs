//! Service configuration file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::rdf2vec::Rdf2VecConfig;
use crate::store::is_safe_segment;
use crate::train::TrainConfig;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "ONTOVEC_CONFIG";
pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_secs(24 * 60 * 60);
pub const MIN_POLL_INTERVAL: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub kg_name: String,
    /// `http(s)://` URL, `file://` URL or local path.
    pub url: String,
    #[serde(default = "default_interval", with = "interval")]
    pub poll_interval: Duration,
    #[serde(default = "all_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub rdf2vec: Rdf2VecConfig,
}

fn default_interval() -> Duration {
    DEFAULT_POLL_INTERVAL
}

fn all_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

impl SourceConfig {
    pub fn new(kg_name: impl Into<String>, url: impl Into<String>) -> Self {
        Self {
            kg_name: kg_name.into(),
            url: url.into(),
            poll_interval: DEFAULT_POLL_INTERVAL,
            models: all_models(),
            train: TrainConfig::default(),
            rdf2vec: Rdf2VecConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !is_safe_segment(&self.kg_name) {
            return bad(format!("kg_name `{}` must be a plain path segment", self.kg_name));
        }
        if self.url.trim().is_empty() {
            return bad(format!("source `{}` has an empty url", self.kg_name));
        }
        if self.poll_interval < MIN_POLL_INTERVAL {
            return bad(format!("poll_interval of `{}` is below one minute", self.kg_name));
        }
        if self.models.is_empty() {
            return bad(format!("source `{}` configures no models", self.kg_name));
        }
        let unique: HashSet<_> = self.models.iter().collect();
        if unique.len() != self.models.len() {
            return bad(format!("source `{}` lists a model twice", self.kg_name));
        }
        self.train.validate()?;
        self.rdf2vec.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApiConfig {
    pub host: String,
    pub port: u16,
    /// Static single-page bundle served under `/`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ui_dir: Option<PathBuf>,
    /// Loaded (kg, version, model) artifacts kept in memory.
    pub max_loaded: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            ui_dir: None,
            max_loaded: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppConfig {
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    pub store_path: PathBuf,
    #[serde(default)]
    pub api: ApiConfig,
}

impl AppConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file; a relative `store_path` is taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if config.store_path.is_relative() {
            if let Some(parent) = path.parent() {
                config.store_path = parent.join(&config.store_path);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for s in &self.sources {
            s.validate()?;
            if !names.insert(s.kg_name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "kg_name `{}` configured twice",
                    s.kg_name
                )));
            }
        }
        if self.api.max_loaded < 1 {
            return Err(Error::InvalidConfig("api.max_loaded must be at least 1".into()));
        }
        Ok(())
    }
}

/// Durations as whole seconds or humantime strings such as `"24h"`.
mod interval {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Seconds(u64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&humantime::format_duration(*d).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Seconds(s) => Ok(Duration::from_secs(s)),
            Raw::Text(t) => humantime::parse_duration(&t).map_err(serde::de::Error::custom),
        }
    }
}
