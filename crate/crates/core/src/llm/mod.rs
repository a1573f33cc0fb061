//! OpenAI-compatible chat-completions client: temperature sampling of
//! candidate programs and yes/no probes read from first-token logprobs.

mod extract;
pub mod prompts;

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::http::{bounded_map, join_url, HttpFailure, JsonClient, RetryPolicy};
use crate::program::{Language, Origin, Program, SampleSet, DEFAULT_SAMPLE_SIZE};

pub use extract::{extract_code, extract_code_block};

/// The five-temperature inference preset.
pub const FIVE_TEMPERATURES: [f64; 5] = [0.0, 0.2, 0.6, 0.8, 1.0];

/// Alternatives inspected on the first token of a yes/no probe.
pub const YES_NO_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// Every request uses `temperature`.
    #[default]
    Independent,
    /// One request per preset temperature.
    FixedSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub endpoint: String,
    pub model: String,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
    pub seed_mode: SeedMode,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    /// Base for the per-request `seed` field; request `i` sends `seed + i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// JSON Lines file receiving every request/response pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_log: Option<PathBuf>,
}

impl SamplingConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        SamplingConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            n: DEFAULT_SAMPLE_SIZE,
            temperature: 1.0,
            max_tokens: 1024,
            parallelism: 4,
            seed_mode: SeedMode::Independent,
            retries: 2,
            backoff_ms: 500,
            timeout_ms: 120_000,
            seed: None,
            audit_log: None,
        }
    }

    /// Five requests at temperatures 0, 0.2, 0.6, 0.8 and 1.
    pub fn five_temperatures(mut self) -> Self {
        self.seed_mode = SeedMode::FixedSchedule;
        self.n = FIVE_TEMPERATURES.len();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.endpoint.is_empty() {
            return bad("endpoint is empty".into());
        }
        if self.model.is_empty() {
            return bad("model is empty".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.seed_mode == SeedMode::FixedSchedule && self.n != FIVE_TEMPERATURES.len() {
            return bad(format!(
                "the fixed schedule draws {} samples, not {}",
                FIVE_TEMPERATURES.len(),
                self.n
            ));
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Vec<f64> {
        match self.seed_mode {
            SeedMode::Independent => vec![self.temperature; self.n],
            SeedMode::FixedSchedule => FIVE_TEMPERATURES.to_vec(),
        }
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retries: self.retries,
            base_delay: Duration::from_millis(self.backoff_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub program: Program,
    pub raw_response: String,
    pub token_probs: Option<Vec<f64>>,
    pub finish_reason: String,
    /// False when the response had no code fence and was used verbatim.
    pub fenced: bool,
    pub retries: u32,
}

struct Completion {
    content: String,
    finish_reason: String,
    logprobs: Option<Vec<TokenLogprob>>,
    retries: u32,
}

struct TokenLogprob {
    token: String,
    logprob: f64,
    top: Vec<(String, f64)>,
}

fn probability(logprob: f64) -> f64 {
    logprob.exp().clamp(f64::MIN_POSITIVE, 1.0)
}

fn parse_logprobs(choice: &Value) -> Option<Vec<TokenLogprob>> {
    let content = choice.pointer("/logprobs/content")?.as_array()?;
    content
        .iter()
        .map(|entry| {
            let top = entry
                .get("top_logprobs")
                .and_then(Value::as_array)
                .map(|alts| {
                    alts.iter()
                        .filter_map(|a| {
                            Some((a.get("token")?.as_str()?.to_string(), a.get("logprob")?.as_f64()?))
                        })
                        .collect()
                })
                .unwrap_or_default();
            Some(TokenLogprob {
                token: entry.get("token")?.as_str()?.to_string(),
                logprob: entry.get("logprob")?.as_f64()?,
                top,
            })
        })
        .collect()
}

/// Chat-completions client shareable across threads.
pub struct LlmClient {
    config: SamplingConfig,
    client: JsonClient,
    url: String,
    audit: Option<Mutex<File>>,
}

impl LlmClient {
    pub fn new(config: SamplingConfig) -> Result<Self> {
        config.validate()?;
        let audit = match &config.audit_log {
            Some(path) => Some(Mutex::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?,
            )),
            None => None,
        };
        Ok(LlmClient {
            client: JsonClient::new(Duration::from_millis(config.timeout_ms), config.retry_policy()),
            url: join_url(&config.endpoint, "chat/completions"),
            audit,
            config,
        })
    }

    pub fn config(&self) -> &SamplingConfig {
        &self.config
    }

    fn audit(&self, request: &Value, outcome: std::result::Result<&Value, &str>) {
        let Some(file) = &self.audit else { return };
        let entry = match outcome {
            Ok(response) => json!({ "url": self.url, "request": request, "response": response }),
            Err(error) => json!({ "url": self.url, "request": request, "error": error }),
        };
        let mut file = file.lock().unwrap();
        if let Err(e) = writeln!(file, "{entry}") {
            log::warn!("audit log write failed: {e}");
        }
    }

    fn complete(
        &self,
        prompt: &str,
        temperature: f64,
        max_tokens: u32,
        top_logprobs: usize,
        seed: Option<u64>,
    ) -> Result<Completion> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                { "role": "system", "content": prompts::SYSTEM_PROMPT },
                { "role": "user", "content": prompt },
            ],
            "temperature": temperature,
            "max_tokens": max_tokens,
            "logprobs": true,
            "n": 1,
        });
        if top_logprobs > 0 {
            body["top_logprobs"] = json!(top_logprobs);
        }
        if let Some(seed) = seed {
            body["seed"] = json!(seed);
        }
        let (response, retries) = match self.client.post(&self.url, &body) {
            Ok(ok) => ok,
            Err(failure) => {
                let message = failure.to_string();
                self.audit(&body, Err(&message));
                return Err(match failure {
                    HttpFailure::Transient(m) | HttpFailure::Fatal(m) => Error::EndpointError(m),
                });
            }
        };
        self.audit(&body, Ok(&response));
        if retries > 0 {
            log::info!("request succeeded after {retries} retries");
        }
        let choice = response
            .pointer("/choices/0")
            .ok_or_else(|| Error::EndpointError("response has no choices".into()))?;
        Ok(Completion {
            content: choice
                .pointer("/message/content")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            finish_reason: choice
                .get("finish_reason")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            logprobs: parse_logprobs(choice),
            retries,
        })
    }

    /// Issues one request per scheduled temperature, at most `parallelism`
    /// at a time. Records come back in request order.
    pub fn generate(&self, requirement: &str, language: Language) -> Result<Vec<GenerationRecord>> {
        let prompt = prompts::code_generation(requirement, language);
        let temperatures = self.config.temperatures();
        let completions = bounded_map(&temperatures, self.config.parallelism, |i, &t| {
            let seed = self.config.seed.map(|s| s.wrapping_add(i as u64));
            self.complete(&prompt, t, self.config.max_tokens, 0, seed)
        });
        completions
            .into_iter()
            .zip(&temperatures)
            .enumerate()
            .map(|(index, (completion, &temperature))| {
                let completion = completion?;
                let (code, fenced) = extract_code(&completion.content);
                let token_probs = completion
                    .logprobs
                    .filter(|lp| !lp.is_empty())
                    .map(|lp| lp.iter().map(|t| probability(t.logprob)).collect::<Vec<_>>());
                let program = Program::new(code, language).with_origin(Origin {
                    sample_index: index,
                    temperature,
                    token_probs: token_probs.clone(),
                });
                Ok(GenerationRecord {
                    program,
                    raw_response: completion.content,
                    token_probs,
                    finish_reason: completion.finish_reason,
                    fenced,
                    retries: completion.retries,
                })
            })
            .collect()
    }

    pub fn sample_programs(
        &self,
        requirement_id: &str,
        requirement: &str,
        language: Language,
    ) -> Result<(SampleSet, Vec<GenerationRecord>)> {
        let records = self.generate(requirement, language)?;
        let usable: Vec<Program> = records
            .iter()
            .filter(|r| !r.program.source.trim().is_empty())
            .map(|r| r.program.clone())
            .collect();
        for (i, _) in records.iter().enumerate().filter(|(_, r)| !r.fenced) {
            log::warn!("{requirement_id}: response {i} has no code fence; using it verbatim");
        }
        if usable.is_empty() {
            return Err(Error::EmptyCompletion);
        }
        let required = 2.min(records.len());
        if usable.len() < required {
            return Err(Error::TooFewUsable {
                usable: usable.len(),
                requested: records.len(),
            });
        }
        Ok((SampleSet::new(requirement_id, requirement, usable), records))
    }

    /// Probability of "Yes" on the first generated token. When both "Yes" and
    /// "No" appear among the top alternatives the two are renormalized.
    pub fn ask_yes_no(&self, prompt: &str) -> Result<f64> {
        let completion = self.complete(prompt, 0.0, 1, YES_NO_TOP_K, self.config.seed)?;
        let first = completion
            .logprobs
            .and_then(|lp| lp.into_iter().next())
            .ok_or(Error::LogprobsUnavailable)?;
        let alternatives = if first.top.is_empty() {
            vec![(first.token, first.logprob)]
        } else {
            first.top
        };
        Ok(yes_probability(&alternatives))
    }
}

/// Yes-probability from first-token alternatives given as (token, logprob).
pub fn yes_probability(alternatives: &[(String, f64)]) -> f64 {
    let mut yes = 0.0;
    let mut no = 0.0;
    for (token, logprob) in alternatives.iter().take(YES_NO_TOP_K) {
        match token.trim().to_lowercase().as_str() {
            "yes" => yes += probability(*logprob),
            "no" => no += probability(*logprob),
            _ => {}
        }
    }
    if yes > 0.0 && no > 0.0 {
        yes / (yes + no)
    } else {
        yes
    }
}

pub fn sample_programs(
    requirement_id: &str,
    requirement: &str,
    language: Language,
    config: &SamplingConfig,
) -> Result<SampleSet> {
    Ok(LlmClient::new(config.clone())?
        .sample_programs(requirement_id, requirement, language)?
        .0)
}

pub fn ask_yes_no(prompt: &str, config: &SamplingConfig) -> Result<f64> {
    LlmClient::new(config.clone())?.ask_yes_no(prompt)
}
