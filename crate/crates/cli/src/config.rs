//! Settings merged from flags, environment, a `key = value` file and defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use honest_core::confidence::default_workers;
use honest_core::embeddings::{EmbeddingProviderConfig, DEFAULT_LOCAL_DIMENSION};
use honest_core::evaluation::PrMode;
use honest_core::llm::{SamplingConfig, SeedMode};
use honest_core::API_KEY_ENV;
use serde::Serialize;

pub const ENDPOINT_ENV: &str = "HONEST_ENDPOINT";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Five samples at temperatures 0, 0.2, 0.6, 0.8 and 1.
    #[value(name = "paper-five")]
    #[serde(rename = "paper-five")]
    FiveTemperatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    Local,
    Remote,
}

/// Flags shared by every subcommand. Unset flags fall through to the
/// environment, then the config file, then built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingFlags {
    /// `key = value` file with defaults for any setting below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved settings as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// OpenAI-compatible base URL, e.g. http://localhost:8000/v1.
    #[arg(long, global = true, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint and used to select labels.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Programs sampled per requirement.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub max_tokens: Option<u32>,
    /// Concurrent requests to the endpoint.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    #[arg(long, global = true)]
    pub backoff_ms: Option<u64>,
    #[arg(long, global = true)]
    pub timeout_ms: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for similarity computation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub embedding: Option<EmbeddingKind>,
    #[arg(long, global = true)]
    pub embedding_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub embedding_model: Option<String>,
    #[arg(long, global = true)]
    pub embedding_dimension: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// `ap` (average precision) or `trapezoid`.
    #[arg(long, global = true)]
    pub pr_mode: Option<PrMode>,
    /// JSON Lines file receiving every request and response.
    #[arg(long, global = true)]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key: &'static str,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub preset: Option<Preset>,
    pub seed: u64,
    pub workers: usize,
    pub embedding: EmbeddingKind,
    pub embedding_endpoint: Option<String>,
    pub embedding_model: Option<String>,
    pub embedding_dimension: usize,
    pub threshold: Option<f64>,
    pub pr_mode: PrMode,
    pub audit_log: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "endpoint",
    "model",
    "n",
    "temperature",
    "max_tokens",
    "parallelism",
    "retries",
    "backoff_ms",
    "timeout_ms",
    "preset",
    "seed",
    "workers",
    "embedding",
    "embedding_endpoint",
    "embedding_model",
    "embedding_dimension",
    "threshold",
    "pr_mode",
    "audit_log",
];

pub fn parse_config_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("in config file {}", path.display()))
}

pub fn parse_config_text(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key `{key}`", i + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        out.insert(key, value);
    }
    Ok(out)
}

fn pick<T>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> anyhow::Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key `{key}` = `{v}`: {e}")),
        None => Ok(None),
    }
}

fn pick_enum<T: ValueEnum>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> anyhow::Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(v) => T::from_str(v, true)
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key `{key}` = `{v}`: {e}")),
        None => Ok(None),
    }
}

impl RunConfig {
    pub fn resolve(flags: &SettingFlags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };
        Self::merge(flags, &file)
    }

    pub fn merge(flags: &SettingFlags, file: &BTreeMap<String, String>) -> anyhow::Result<Self> {
        let api_key = match std::env::var(API_KEY_ENV) {
            Ok(k) if !k.is_empty() => "set",
            _ => "unset",
        };
        Ok(RunConfig {
            endpoint: pick(flags.endpoint.clone(), file, "endpoint")?,
            model: pick(flags.model.clone(), file, "model")?,
            api_key,
            n: pick(flags.n, file, "n")?.unwrap_or(honest_core::program::DEFAULT_SAMPLE_SIZE),
            temperature: pick(flags.temperature, file, "temperature")?.unwrap_or(1.0),
            max_tokens: pick(flags.max_tokens, file, "max_tokens")?.unwrap_or(1024),
            parallelism: pick(flags.parallelism, file, "parallelism")?.unwrap_or(4),
            retries: pick(flags.retries, file, "retries")?.unwrap_or(2),
            backoff_ms: pick(flags.backoff_ms, file, "backoff_ms")?.unwrap_or(500),
            timeout_ms: pick(flags.timeout_ms, file, "timeout_ms")?.unwrap_or(120_000),
            preset: pick_enum(flags.preset, file, "preset")?,
            seed: pick(flags.seed, file, "seed")?.unwrap_or(DEFAULT_SEED),
            workers: pick(flags.workers, file, "workers")?.unwrap_or_else(default_workers),
            embedding: pick_enum(flags.embedding, file, "embedding")?.unwrap_or(EmbeddingKind::Local),
            embedding_endpoint: pick(flags.embedding_endpoint.clone(), file, "embedding_endpoint")?,
            embedding_model: pick(flags.embedding_model.clone(), file, "embedding_model")?,
            embedding_dimension: pick(flags.embedding_dimension, file, "embedding_dimension")?
                .unwrap_or(DEFAULT_LOCAL_DIMENSION),
            threshold: pick(flags.threshold, file, "threshold")?,
            pr_mode: pick(flags.pr_mode, file, "pr_mode")?.unwrap_or_default(),
            audit_log: pick(flags.audit_log.clone(), file, "audit_log")?,
        })
    }

    pub fn sampling(&self) -> anyhow::Result<SamplingConfig> {
        let Some(endpoint) = self.endpoint.clone() else {
            bail!(honest_core::Error::InvalidConfig(format!(
                "no endpoint; pass --endpoint or set {ENDPOINT_ENV}"
            )));
        };
        let Some(model) = self.model.clone() else {
            bail!(honest_core::Error::InvalidConfig("no model; pass --model".into()));
        };
        let mut config = SamplingConfig {
            n: self.n,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            parallelism: self.parallelism,
            seed_mode: SeedMode::Independent,
            retries: self.retries,
            backoff_ms: self.backoff_ms,
            timeout_ms: self.timeout_ms,
            seed: Some(self.seed),
            audit_log: self.audit_log.clone(),
            ..SamplingConfig::new(endpoint, model)
        };
        if self.preset == Some(Preset::FiveTemperatures) {
            config = config.five_temperatures();
        }
        Ok(config)
    }

    pub fn embeddings(&self) -> anyhow::Result<EmbeddingProviderConfig> {
        Ok(match self.embedding {
            EmbeddingKind::Local => EmbeddingProviderConfig::local(self.embedding_dimension),
            EmbeddingKind::Remote => {
                let endpoint = self.embedding_endpoint.clone().or_else(|| self.endpoint.clone());
                let (Some(endpoint), Some(model)) = (endpoint, self.embedding_model.clone()) else {
                    bail!(honest_core::Error::InvalidConfig(
                        "remote embeddings need --embedding-endpoint (or --endpoint) and --embedding-model"
                            .into()
                    ));
                };
                EmbeddingProviderConfig {
                    retries: Some(self.retries),
                    backoff_ms: Some(self.backoff_ms),
                    timeout_secs: Some(self.timeout_ms.div_ceil(1000)),
                    max_in_flight: self.parallelism.max(1),
                    ..EmbeddingProviderConfig::remote(endpoint, model)
                }
            }
        })
    }
}
