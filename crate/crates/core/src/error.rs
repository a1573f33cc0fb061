use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported language `{0}` (expected python or java)")]
    UnsupportedLanguage(String),

    #[error("parser produced no syntax tree")]
    CatastrophicParseFailure,

    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("embedding provider returned an all-zero vector")]
    DegenerateEmbedding,

    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("similarity component `{name}` = {value} is outside [0, 1]")]
    ComponentOutOfRange { name: &'static str, value: f64 },

    #[error("invalid similarity weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("sample set mixes languages")]
    MixedLanguages,

    #[error("training labels contain a single class; AUROC is undefined")]
    DegenerateLabels,

    #[error("requirement id mismatch: report `{report}` vs samples `{samples}`")]
    IdMismatch { report: String, samples: String },

    #[error("endpoint error: {0}")]
    EndpointError(String),

    #[error("endpoint returned no usable completion")]
    EmptyCompletion,

    #[error("only {usable} of {requested} completions contained a usable program")]
    TooFewUsable { usable: usize, requested: usize },

    #[error("endpoint did not return log-probabilities")]
    LogprobsUnavailable,

    #[error("generation record {index} has no token probabilities")]
    MissingLogprobs { index: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("retrieval corpus is empty")]
    EmptyCorpus,

    #[error("unknown document {0}")]
    UnknownDocument(usize),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("line {line}: unknown language `{language}`")]
    UnknownLanguage { line: usize, language: String },

    #[error("no entry for id `{id}`{}", model.as_ref().map(|m| format!(" and model `{m}`")).unwrap_or_default())]
    JoinError { id: String, model: Option<String> },

    #[error("scores contain a single class; AUROC is undefined")]
    SingleClass,

    #[error("no positive (passed) labels; AUCPR is undefined")]
    NoPositives,

    #[error("sample `{0}` lacks per-program correctness counts")]
    MissingProgramCounts(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the network or a remote service.
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            Error::EndpointError(_) | Error::ProviderUnavailable(_) | Error::EmptyCompletion
        )
    }
}
