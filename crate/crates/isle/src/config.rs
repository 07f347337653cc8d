//! Service configuration: a TOML file overlaid with `ISLE_*` environment
//! variables. `ISLE_RRF_K=30` sets `rrf_k`; `ISLE_EMBEDDER_SEED=7` sets
//! `embedder.seed`.

use std::fs;
use std::path::{Path, PathBuf};

use isle_core::corpus::ValidationPolicy;
use isle_core::topics::TopicMode;
use isle_core::vector::EmbedderBinding;
use serde::{Deserialize, Serialize};

use crate::error::{IsleError, Result};

pub const ENV_PREFIX: &str = "ISLE_";
pub const CONFIG_FILE: &str = "isle.toml";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DIMENSION: usize = 384;
pub const MAX_LIMIT: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Dump directory read by `ingest` when no `--source` is given.
    pub corpus_source: Option<PathBuf>,
    pub listen: String,
    pub default_limit: usize,
    pub max_limit: usize,
    pub rrf_k: usize,
    pub per_path_depth: Option<usize>,
    pub topic_mode: TopicMode,
    pub topic_seed: u64,
    /// Explorations kept in memory.
    pub cache_size: usize,
    pub policy: ValidationPolicy,
    pub embedder: EmbedderBinding,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from(".isle"),
            corpus_source: None,
            listen: "127.0.0.1:8080".into(),
            default_limit: 100,
            max_limit: MAX_LIMIT,
            rrf_k: 60,
            per_path_depth: None,
            topic_mode: TopicMode::Auto,
            topic_seed: DEFAULT_SEED,
            cache_size: 64,
            policy: ValidationPolicy::Drop,
            embedder: EmbedderBinding::projection(DEFAULT_SEED, DEFAULT_DIMENSION),
        }
    }
}

fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| IsleError::Usage(format!("config: {e}")))
    }

    /// Reads `path` when it exists, otherwise starts from defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) if p.exists() => {
                let text = fs::read_to_string(p).map_err(IsleError::io(p))?;
                Self::from_toml(&text)
            }
            Some(p) => Err(IsleError::Usage(format!("config file {} not found", p.display()))),
            None => Ok(Self::default()),
        }
    }

    /// Applies `ISLE_<KEY>` and `ISLE_EMBEDDER_<KEY>` overrides.
    pub fn with_env<I, K, V>(self, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table = toml::Table::try_from(&self).map_err(|e| IsleError::Usage(format!("config: {e}")))?;
        let top_keys: Vec<String> = table.keys().cloned().collect();
        let mut changed = false;
        for (k, v) in vars {
            let Some(name) = k.as_ref().strip_prefix(ENV_PREFIX) else { continue };
            let name = name.to_ascii_lowercase();
            let value = env_value(v.as_ref());
            if let Some(sub) = name.strip_prefix("embedder_") {
                let entry = table.entry("embedder").or_insert_with(|| toml::Value::Table(toml::Table::new()));
                if let toml::Value::Table(t) = entry {
                    let value = if sub == "endpoint" { toml::Value::String(v.as_ref().to_string()) } else { value };
                    t.insert(sub.to_string(), value);
                    changed = true;
                }
            } else if top_keys.contains(&name) || matches!(name.as_str(), "corpus_source" | "per_path_depth") {
                let value = match name.as_str() {
                    "data_dir" | "corpus_source" | "listen" => toml::Value::String(v.as_ref().to_string()),
                    _ => value,
                };
                table.insert(name, value);
                changed = true;
            }
        }
        if !changed {
            return Ok(self);
        }
        let text = toml::to_string(&table).map_err(|e| IsleError::Usage(format!("config: {e}")))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("default_limit", self.default_limit),
            ("max_limit", self.max_limit),
            ("rrf_k", self.rrf_k),
            ("cache_size", self.cache_size),
            ("embedder.dimension", self.embedder.dimension),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(IsleError::Usage(format!("{name} must be positive")));
            }
        }
        if self.per_path_depth == Some(0) {
            return Err(IsleError::Usage("per_path_depth must be positive".into()));
        }
        if self.default_limit > self.max_limit {
            return Err(IsleError::Usage("default_limit exceeds max_limit".into()));
        }
        self.embedder.validate().map_err(|e| IsleError::Usage(e.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use isle_core::vector::EmbedderMode;

    #[test]
    fn defaults_are_valid() {
        let c = ServiceConfig::default();
        c.validate().unwrap();
        assert_eq!(c.rrf_k, 60);
        assert_eq!(c.embedder.dimension, 384);
    }

    #[test]
    fn file_then_environment() {
        let c = ServiceConfig::from_toml(
            "rrf_k = 30\ntopic_mode = \"nmf\"\n[embedder]\nmode = \"deterministic-projection\"\nseed = 5\ndimension = 64\n",
        )
        .unwrap();
        assert_eq!(c.rrf_k, 30);
        assert_eq!(c.topic_mode, TopicMode::Nmf);
        let c = c
            .with_env([
                ("ISLE_RRF_K", "45"),
                ("ISLE_LISTEN", "0.0.0.0:9000"),
                ("ISLE_EMBEDDER_MODE", "external-service"),
                ("ISLE_EMBEDDER_ENDPOINT", "http://localhost:1/embed"),
                ("ISLE_PER_PATH_DEPTH", "500"),
                ("HOME", "/root"),
            ])
            .unwrap();
        assert_eq!(c.rrf_k, 45);
        assert_eq!(c.listen, "0.0.0.0:9000");
        assert_eq!(c.per_path_depth, Some(500));
        assert_eq!(c.embedder.mode, EmbedderMode::ExternalService);
        assert_eq!(c.embedder.endpoint.as_deref(), Some("http://localhost:1/embed"));
        assert_eq!(c.embedder.seed, Some(5));
        c.validate().unwrap();
    }

    #[test]
    fn invalid_settings_are_usage_errors() {
        assert!(ServiceConfig::from_toml("bogus = 1").is_err());
        let c = ServiceConfig::default().with_env([("ISLE_CACHE_SIZE", "0")]).unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        assert!(ServiceConfig::default().with_env([("ISLE_RRF_K", "many")]).is_err());
    }
}
