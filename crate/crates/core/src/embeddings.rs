//! Program embeddings and cosine similarity.
//!
//! Two providers sit behind [`EmbeddingProvider`]: an OpenAI-compatible
//! `/embeddings` endpoint, and a deterministic feature-hashing vectorizer
//! over token unigrams and bigrams for offline use.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::http::{bounded_map, join_url, HttpFailure, JsonClient, RetryPolicy, Semaphore};
use crate::program::{tokenize, Program};

/// Seed mixed into the FNV-1a hash of every local feature.
pub const LOCAL_HASH_SEED: u64 = 0x005E_ED0F_C0DE;
pub const MIN_LOCAL_DIMENSION: usize = 64;
pub const DEFAULT_LOCAL_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("embedding has dimension 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ProviderUnavailable(
                "embedding contains non-finite values".into(),
            ));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine of the angle between two vectors, clamped to `[0, 1]`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    cosine_raw(a.values(), b.values()).map(|c| c.clamp(0.0, 1.0))
}

fn cosine_raw(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    Remote,
    LocalHashed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    pub dimension: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retries: Option<u32>,
    #[serde(default)]
    pub backoff_ms: Option<u64>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

fn default_in_flight() -> usize {
    4
}

impl EmbeddingProviderConfig {
    pub fn local(dimension: usize) -> Self {
        EmbeddingProviderConfig {
            kind: ProviderKind::LocalHashed,
            endpoint: None,
            model_name: None,
            dimension,
            max_in_flight: default_in_flight(),
            retries: None,
            backoff_ms: None,
            timeout_secs: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        EmbeddingProviderConfig {
            kind: ProviderKind::Remote,
            endpoint: Some(endpoint.into()),
            model_name: Some(model_name.into()),
            dimension: 0,
            max_in_flight: default_in_flight(),
            retries: None,
            backoff_ms: None,
            timeout_secs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProviderKind::Remote => {
                if self.endpoint.as_deref().is_none_or(str::is_empty)
                    || self.model_name.as_deref().is_none_or(str::is_empty)
                {
                    return Err(Error::InvalidConfig(
                        "remote embeddings need an endpoint and a model name".into(),
                    ));
                }
            }
            ProviderKind::LocalHashed => {
                if self.dimension < MIN_LOCAL_DIMENSION {
                    return Err(Error::InvalidConfig(format!(
                        "local hashed embeddings need dimension >= {MIN_LOCAL_DIMENSION}, got {}",
                        self.dimension
                    )));
                }
            }
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidConfig("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    fn retry_policy(&self) -> RetryPolicy {
        let default = RetryPolicy::default();
        RetryPolicy {
            retries: self.retries.unwrap_or(default.retries),
            base_delay: self
                .backoff_ms
                .map(Duration::from_millis)
                .unwrap_or(default.base_delay),
        }
    }
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        Self::local(DEFAULT_LOCAL_DIMENSION)
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed_program(&self, program: &Program) -> Result<EmbeddingVector>;

    /// Embeds free text such as a requirement.
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector>;

    fn embed_programs(&self, programs: &[Program]) -> Result<Vec<EmbeddingVector>> {
        programs.iter().map(|p| self.embed_program(p)).collect()
    }
}

pub fn provider_from_config(config: &EmbeddingProviderConfig) -> Result<Box<dyn EmbeddingProvider>> {
    config.validate()?;
    Ok(match config.kind {
        ProviderKind::LocalHashed => Box::new(LocalHashedEmbedder::new(config.dimension)?),
        ProviderKind::Remote => Box::new(RemoteEmbedder::new(config)?),
    })
}

/// One-shot convenience wrapper around [`provider_from_config`].
pub fn embed(program: &Program, config: &EmbeddingProviderConfig) -> Result<EmbeddingVector> {
    provider_from_config(config)?.embed_program(program)
}

/// Feature-hashed unigram + bigram counts, L2-normalized.
#[derive(Debug, Clone)]
pub struct LocalHashedEmbedder {
    dimension: usize,
}

impl LocalHashedEmbedder {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < MIN_LOCAL_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "local hashed embeddings need dimension >= {MIN_LOCAL_DIMENSION}"
            )));
        }
        Ok(LocalHashedEmbedder { dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn vectorize(&self, tokens: &[String]) -> Result<EmbeddingVector> {
        let mut values = vec![0.0; self.dimension];
        if tokens.is_empty() {
            // keeps empty inputs embeddable
            values[self.bucket(&["<empty>"])] = 1.0;
        }
        for token in tokens {
            values[self.bucket(&["u", token])] += 1.0;
        }
        for pair in tokens.windows(2) {
            values[self.bucket(&["b", &pair[0], &pair[1]])] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut values {
            *v /= norm;
        }
        EmbeddingVector::new(values)
    }

    fn bucket(&self, parts: &[&str]) -> usize {
        (fnv1a(parts) % self.dimension as u64) as usize
    }
}

fn fnv1a(parts: &[&str]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325 ^ LOCAL_HASH_SEED;
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hash ^= 0x1F;
            hash = hash.wrapping_mul(PRIME);
        }
        for byte in part.bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(PRIME);
        }
    }
    hash
}

/// Lowercased alphanumeric words of free text.
pub(crate) fn text_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl EmbeddingProvider for LocalHashedEmbedder {
    fn embed_program(&self, program: &Program) -> Result<EmbeddingVector> {
        self.vectorize(&tokenize(program).tokens)
    }

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        self.vectorize(&text_words(text))
    }
}

/// Client for an OpenAI-compatible `POST {endpoint}/embeddings`.
///
/// Results are memoized per input text for the lifetime of the value.
pub struct RemoteEmbedder {
    client: JsonClient,
    url: String,
    model: String,
    max_in_flight: usize,
    in_flight: Semaphore,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
}

impl RemoteEmbedder {
    pub fn new(config: &EmbeddingProviderConfig) -> Result<Self> {
        config.validate()?;
        let endpoint = config.endpoint.as_deref().unwrap_or_default();
        let timeout = Duration::from_secs(config.timeout_secs.unwrap_or(60));
        Ok(RemoteEmbedder {
            client: JsonClient::new(timeout, config.retry_policy()),
            url: join_url(endpoint, "embeddings"),
            model: config.model_name.clone().unwrap_or_default(),
            max_in_flight: config.max_in_flight,
            in_flight: Semaphore::new(config.max_in_flight),
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn fetch(&self, input: &str) -> Result<EmbeddingVector> {
        if let Some(hit) = self.cache.lock().unwrap().get(input) {
            return Ok(hit.clone());
        }
        let body = json!({ "model": self.model, "input": [input] });
        let response = {
            let _permit = self.in_flight.acquire();
            self.client.post(&self.url, &body)
        };
        let (value, _) = response.map_err(|e: HttpFailure| Error::ProviderUnavailable(e.to_string()))?;
        let values: Vec<f64> = value
            .pointer("/data/0/embedding")
            .and_then(|v| v.as_array())
            .ok_or_else(|| {
                Error::ProviderUnavailable("response lacks data[0].embedding".into())
            })?
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    Error::ProviderUnavailable("embedding holds a non-number".into())
                })
            })
            .collect::<Result<_>>()?;
        let vector = EmbeddingVector::new(values)?;
        self.cache
            .lock()
            .unwrap()
            .insert(input.to_string(), vector.clone());
        Ok(vector)
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn embed_program(&self, program: &Program) -> Result<EmbeddingVector> {
        self.fetch(&program.source)
    }

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        self.fetch(text)
    }

    fn embed_programs(&self, programs: &[Program]) -> Result<Vec<EmbeddingVector>> {
        bounded_map(programs, self.max_in_flight, |_, p| self.fetch(&p.source))
            .into_iter()
            .collect()
    }
}
