//! Per-modality similarity between two programs and their weighted mix.
//!
//! All overlaps use clipped multiset intersection and are normalized by the
//! size of the *second* program's structure, so `sim(i, j)` and `sim(j, i)`
//! may differ.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    dataflow_from_tree, extract_subtrees, parse_cst, DataflowGraph, SubtreeBag,
    DEFAULT_SUBTREE_HEIGHT,
};
use crate::embeddings::{cosine, EmbeddingProvider, EmbeddingVector};
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::program::{tokenize, Program, TokenSequence};

pub const MAX_NGRAM: usize = 4;

/// Counted n-grams of a token sequence for n = 1..=4.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NGramProfile {
    counts: [Multiset<String>; MAX_NGRAM],
}

impl NGramProfile {
    pub fn new(seq: &TokenSequence) -> Self {
        let mut counts: [Multiset<String>; MAX_NGRAM] = Default::default();
        for (n, bag) in counts.iter_mut().enumerate() {
            bag.extend(seq.tokens.windows(n + 1).map(|w| w.join("\u{0}")));
        }
        NGramProfile { counts }
    }

    /// N-grams of order `n` (1-based).
    pub fn order(&self, n: usize) -> &Multiset<String> {
        &self.counts[n - 1]
    }

    pub fn is_empty(&self) -> bool {
        self.counts[0].is_empty()
    }
}

impl From<&TokenSequence> for NGramProfile {
    fn from(seq: &TokenSequence) -> Self {
        NGramProfile::new(seq)
    }
}

/// Geometric mean over n = 1..=4 of clipped n-gram overlap divided by the
/// n-gram count of `seq_j`. Orders for which `seq_j` has no n-grams are left
/// out of the mean; any included order with zero overlap gives 0.
pub fn sim_text(seq_i: &TokenSequence, seq_j: &TokenSequence) -> f64 {
    sim_text_profiles(&NGramProfile::new(seq_i), &NGramProfile::new(seq_j))
}

pub fn sim_text_profiles(profile_i: &NGramProfile, profile_j: &NGramProfile) -> f64 {
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=MAX_NGRAM {
        let reference = profile_j.order(n);
        if reference.is_empty() {
            continue;
        }
        let overlap = profile_i.order(n).clipped_overlap(reference);
        if overlap == 0 {
            return 0.0;
        }
        log_sum += (overlap as f64 / reference.len() as f64).ln();
        orders += 1;
    }
    if orders == 0 {
        return if profile_i.is_empty() { 1.0 } else { 0.0 };
    }
    (log_sum / orders as f64).exp().min(1.0)
}

fn overlap_ratio<T: Ord>(i: &Multiset<T>, j: &Multiset<T>) -> f64 {
    match (i.is_empty(), j.is_empty()) {
        (true, true) => 1.0,
        (false, true) => 0.0,
        _ => i.clipped_overlap(j) as f64 / j.len() as f64,
    }
}

/// `|bag_i ∩ bag_j| / |bag_j|`; 1 when both are empty.
pub fn sim_syntax(bag_i: &SubtreeBag, bag_j: &SubtreeBag) -> f64 {
    overlap_ratio(&bag_i.entries, &bag_j.entries)
}

/// `|edges_i ∩ edges_j| / |edges_j|`; 1 when both are empty.
pub fn sim_dataflow(dfg_i: &DataflowGraph, dfg_j: &DataflowGraph) -> f64 {
    overlap_ratio(&dfg_i.edges, &dfg_j.edges)
}

pub fn sim_embed(e_i: &EmbeddingVector, e_j: &EmbeddingVector) -> Result<f64> {
    cosine(e_i, e_j)
}

/// Mixing weights for text, syntax, dataflow and embedding similarity.
/// They lie on the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl SimilarityWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let w = SimilarityWeights {
            alpha,
            beta,
            gamma,
            delta,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform() -> Self {
        SimilarityWeights {
            alpha: 0.25,
            beta: 0.25,
            gamma: 0.25,
            delta: 0.25,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn from_array(w: [f64; 4]) -> Result<Self> {
        Self::new(w[0], w[1], w[2], w[3])
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidWeights(format!("weight {bad} outside [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

/// The four modality similarities of one ordered pair, before mixing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModalityScores {
    pub text: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub embedding: f64,
}

impl ModalityScores {
    pub fn new(text: f64, syntax: f64, dataflow: f64, embedding: f64) -> Self {
        ModalityScores {
            text,
            syntax,
            dataflow,
            embedding,
        }
    }

    pub fn splat(value: f64) -> Self {
        Self::new(value, value, value, value)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.text, self.syntax, self.dataflow, self.embedding]
    }
}

/// `α·text + β·syntax + γ·dataflow + δ·embedding`.
pub fn sim_hybrid(components: &ModalityScores, weights: &SimilarityWeights) -> Result<f64> {
    const NAMES: [&str; 4] = ["text", "syntax", "dataflow", "embedding"];
    for (name, value) in NAMES.iter().zip(components.as_array()) {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ComponentOutOfRange { name, value });
        }
    }
    Ok(mix(components, weights))
}

pub(crate) fn mix(c: &ModalityScores, w: &SimilarityWeights) -> f64 {
    let value = w.alpha * c.text + w.beta * c.syntax + w.gamma * c.dataflow + w.delta * c.embedding;
    value.clamp(0.0, 1.0)
}

/// Similarity of the ordered pair `(i, j)` in every modality plus the mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBreakdown {
    pub i: usize,
    pub j: usize,
    pub text: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub embedding: f64,
    pub hybrid: f64,
}

impl SimilarityBreakdown {
    pub fn new(i: usize, j: usize, scores: ModalityScores, weights: &SimilarityWeights) -> Result<Self> {
        let hybrid = sim_hybrid(&scores, weights)?;
        Ok(SimilarityBreakdown {
            i,
            j,
            text: scores.text,
            syntax: scores.syntax,
            dataflow: scores.dataflow,
            embedding: scores.embedding,
            hybrid,
        })
    }

    pub fn modalities(&self) -> ModalityScores {
        ModalityScores::new(self.text, self.syntax, self.dataflow, self.embedding)
    }
}

/// Everything the pairwise comparison needs from one program, computed once.
#[derive(Debug, Clone)]
pub struct ProgramFeatures {
    pub ngrams: NGramProfile,
    pub subtrees: SubtreeBag,
    pub dataflow: DataflowGraph,
    pub embedding: EmbeddingVector,
}

impl ProgramFeatures {
    /// Features without an embedding lookup, for callers that batch embeddings.
    pub fn with_embedding(program: &Program, embedding: EmbeddingVector) -> Result<Self> {
        let tree = parse_cst(program)?;
        Ok(ProgramFeatures {
            ngrams: NGramProfile::new(&tokenize(program)),
            subtrees: extract_subtrees(&tree, DEFAULT_SUBTREE_HEIGHT),
            dataflow: dataflow_from_tree(&tree),
            embedding,
        })
    }

    pub fn analyze(program: &Program, provider: &dyn EmbeddingProvider) -> Result<Self> {
        let embedding = provider.embed_program(program)?;
        Self::with_embedding(program, embedding)
    }

    /// Similarity of `self` (as `c_i`) against `other` (as `c_j`).
    pub fn compare(&self, other: &ProgramFeatures) -> Result<ModalityScores> {
        Ok(ModalityScores {
            text: sim_text_profiles(&self.ngrams, &other.ngrams),
            syntax: sim_syntax(&self.subtrees, &other.subtrees),
            dataflow: sim_dataflow(&self.dataflow, &other.dataflow),
            embedding: sim_embed(&self.embedding, &other.embedding)?,
        })
    }
}
