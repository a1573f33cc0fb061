//! Baseline confidence estimators: token-probability aggregates, self-asking
//! probes and nearest-neighbour label ratios.

mod bm25;
mod knn;

use crate::dataset::ArchivedProgram;
use crate::error::{Error, Result};
use crate::llm::{prompts, GenerationRecord, LlmClient};
use crate::program::Program;

pub use bm25::{requirement_tokens, Bm25Index, DEFAULT_B, DEFAULT_K1};
pub use knn::{
    knn_confidence, knn_from_scores, tune_k, EmbeddingCorpus, KnnConfig, KnnMetric, Retriever,
    K_CANDIDATES,
};

/// Anything carrying per-token generation probabilities.
pub trait TokenProbs {
    fn token_probs(&self) -> Option<&[f64]>;
}

impl TokenProbs for GenerationRecord {
    fn token_probs(&self) -> Option<&[f64]> {
        self.token_probs.as_deref()
    }
}

impl TokenProbs for Program {
    fn token_probs(&self) -> Option<&[f64]> {
        Program::token_probs(self)
    }
}

impl TokenProbs for ArchivedProgram {
    fn token_probs(&self) -> Option<&[f64]> {
        self.token_probs.as_deref()
    }
}

impl TokenProbs for Vec<f64> {
    fn token_probs(&self) -> Option<&[f64]> {
        Some(self)
    }
}

fn all_probs<T: TokenProbs>(records: &[T]) -> Result<Vec<&[f64]>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("generation records"));
    }
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            r.token_probs()
                .filter(|p| !p.is_empty())
                .ok_or(Error::MissingLogprobs { index })
        })
        .collect()
}

/// Mean of every token probability pooled across records.
pub fn avg_prob<T: TokenProbs>(records: &[T]) -> Result<f64> {
    let probs = all_probs(records)?;
    let count: usize = probs.iter().map(|p| p.len()).sum();
    let sum: f64 = probs.iter().flat_map(|p| p.iter()).sum();
    Ok(sum / count as f64)
}

/// Product of token probabilities per record, averaged over records. The
/// product is taken in log space.
pub fn product_prob<T: TokenProbs>(records: &[T]) -> Result<f64> {
    let probs = all_probs(records)?;
    let total: f64 = probs
        .iter()
        .map(|p| p.iter().map(|x| x.ln()).sum::<f64>().exp())
        .sum();
    Ok(total / probs.len() as f64)
}

/// Mean yes-probability of the model judging each program correct.
pub fn self_ask_code(client: &LlmClient, requirement: &str, programs: &[Program]) -> Result<f64> {
    if programs.is_empty() {
        return Err(Error::EmptyInput("programs"));
    }
    let mut total = 0.0;
    for program in programs {
        total += client.ask_yes_no(&prompts::code_judgment(requirement, &program.source))?;
    }
    Ok(total / programs.len() as f64)
}

/// Yes-probability of the model claiming it can solve the requirement.
pub fn self_ask_requirement(client: &LlmClient, requirement: &str) -> Result<f64> {
    client.ask_yes_no(&prompts::requirement_judgment(requirement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn avg_prob_examples() {
        assert_abs_diff_eq!(avg_prob(&[vec![0.5, 1.0]]).unwrap(), 0.75);
        assert_abs_diff_eq!(avg_prob(&[vec![1.0], vec![0.5]]).unwrap(), 0.75);
    }

    #[test]
    fn missing_probs() {
        let p = Program::new("x = 1", crate::Language::Python);
        assert!(matches!(avg_prob(std::slice::from_ref(&p)), Err(Error::MissingLogprobs { index: 0 })));
        assert!(matches!(product_prob(&[p]), Err(Error::MissingLogprobs { index: 0 })));
        assert!(matches!(
            avg_prob(&[vec![0.5], vec![]]),
            Err(Error::MissingLogprobs { index: 1 })
        ));
    }

    #[test]
    fn product_prob_examples() {
        assert_abs_diff_eq!(product_prob(&[vec![0.5, 0.5]]).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(product_prob(&[vec![0.5], vec![0.25]]).unwrap(), 0.375, epsilon = 1e-12);
        let long = product_prob(&[vec![0.9; 200]]).unwrap();
        assert!(long > 0.0);
        assert_abs_diff_eq!(long, (200.0 * 0.9f64.ln()).exp(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn product_never_exceeds_mean(probs in proptest::collection::vec(1e-6f64..=1.0, 1..50)) {
            let record = [probs];
            let product = product_prob(&record).unwrap();
            let mean = avg_prob(&record).unwrap();
            prop_assert!(product <= mean + 1e-12);
            prop_assert!((0.0..=1.0).contains(&product));
            prop_assert!((0.0..=1.0).contains(&mean));
        }
    }
}
