//! Query encoders: the seeded projection and an HTTP embedding service
//! speaking `{"texts": [...]}` -> `{"vectors": [[...]], "model": "..."}`.

use std::time::Duration;

use isle_core::vector::{DenseVector, EmbedError, Embedder, EmbedderBinding, EmbedderMode, ProjectionEmbedder};
use serde::{Deserialize, Serialize};

use crate::error::{IsleError, Result};

pub const DEFAULT_TIMEOUT_MS: u64 = 5_000;

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub model: String,
}

/// Client for an external embedding service. When `expected_model` is set,
/// responses from any other model are refused.
#[derive(Debug, Clone)]
pub struct ExternalEmbedder {
    endpoint: String,
    dimension: usize,
    expected_model: Option<String>,
    agent: ureq::Agent,
}

impl ExternalEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        dimension: usize,
        timeout: Duration,
        expected_model: Option<String>,
    ) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(true).build().new_agent();
        ExternalEmbedder { endpoint: endpoint.into(), dimension, expected_model, agent }
    }

    pub fn embed_batch(&self, texts: &[&str]) -> Result<EmbedResponse, EmbedError> {
        let body = serde_json::to_string(&EmbedRequest { texts: texts.to_vec() }).expect("request serializes");
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| EmbedError::Unavailable(e.to_string()))?;
        let text = response.body_mut().read_to_string().map_err(|e| EmbedError::Unavailable(e.to_string()))?;
        let parsed: EmbedResponse =
            serde_json::from_str(&text).map_err(|e| EmbedError::Unavailable(format!("unreadable response: {e}")))?;
        if parsed.vectors.len() != texts.len() {
            return Err(EmbedError::Unavailable(format!(
                "asked for {} vectors, received {}",
                texts.len(),
                parsed.vectors.len()
            )));
        }
        if let Some(expected) = &self.expected_model {
            if *expected != parsed.model {
                return Err(EmbedError::ModelMismatch { expected: expected.clone(), got: parsed.model });
            }
        }
        Ok(parsed)
    }
}

impl Embedder for ExternalEmbedder {
    fn model_id(&self) -> String {
        self.expected_model.clone().unwrap_or_else(|| format!("external:{}", self.endpoint))
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<DenseVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut response = self.embed_batch(&[text])?;
        let v = response.vectors.pop().expect("length checked");
        if v.len() != self.dimension {
            return Err(EmbedError::Shape { expected: self.dimension, got: v.len() });
        }
        DenseVector::new(v).map_err(EmbedError::Invalid)
    }
}

/// Instantiates the encoder described by `binding`. External encoders are
/// bound to the corpus encoder identity when one is recorded.
pub fn from_binding(binding: &EmbedderBinding, corpus_model: Option<&str>) -> Result<Box<dyn Embedder>> {
    binding.validate().map_err(|e| IsleError::Usage(e.to_string()))?;
    Ok(match binding.mode {
        EmbedderMode::DeterministicProjection => {
            Box::new(ProjectionEmbedder::new(binding.seed.expect("validated"), binding.dimension))
        }
        EmbedderMode::ExternalService => Box::new(ExternalEmbedder::new(
            binding.endpoint.clone().expect("validated"),
            binding.dimension,
            Duration::from_millis(binding.timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS)),
            corpus_model.map(str::to_string),
        )),
    })
}
