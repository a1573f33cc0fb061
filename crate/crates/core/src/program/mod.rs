//! Candidate programs, their languages, and lexical token sequences.

mod lexer;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of programs sampled per requirement.
pub const DEFAULT_SAMPLE_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Java => "java",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "java" => Ok(Language::Java),
            other => Err(Error::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// Where a sampled program came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub sample_index: usize,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
}

impl Origin {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if let Some(probs) = &self.token_probs {
            validate_token_probs(probs)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_token_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidConfig("token_probs is empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "token probability {p} outside (0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub source: String,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
}

impl Program {
    pub fn new(source: impl Into<String>, language: Language) -> Self {
        Program {
            source: source.into(),
            language,
            origin: None,
        }
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn token_probs(&self) -> Option<&[f64]> {
        self.origin.as_ref()?.token_probs.as_deref()
    }
}

/// Lexical tokens of a program with comments and whitespace removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence::new(iter.into_iter().map(Into::into).collect())
    }
}

/// The N programs sampled for one requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub requirement_id: String,
    pub requirement: String,
    pub programs: Vec<Program>,
}

impl SampleSet {
    pub fn new(
        requirement_id: impl Into<String>,
        requirement: impl Into<String>,
        programs: Vec<Program>,
    ) -> Self {
        SampleSet {
            requirement_id: requirement_id.into(),
            requirement: requirement.into(),
            programs,
        }
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    /// The shared language, or `None` for an empty set.
    pub fn language(&self) -> Option<Language> {
        self.programs.first().map(|p| p.language)
    }

    /// Checks the preconditions for confidence estimation.
    pub fn validate_for_estimation(&self) -> Result<Language> {
        if self.programs.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                actual: self.programs.len(),
            });
        }
        let language = self.programs[0].language;
        if self.programs.iter().any(|p| p.language != language) {
            return Err(Error::MixedLanguages);
        }
        Ok(language)
    }
}

/// Splits a program into lexical tokens. Comments, blank lines and
/// insignificant whitespace are dropped; string literals stay whole.
pub fn tokenize(program: &Program) -> TokenSequence {
    tokenize_source(&program.source, program.language)
}

pub fn tokenize_source(source: &str, language: Language) -> TokenSequence {
    let tokens = match language {
        Language::Python => lexer::lex_python(source),
        Language::Java => lexer::lex_java(source),
    };
    TokenSequence::new(tokens)
}
