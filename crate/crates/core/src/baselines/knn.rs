use serde::{Deserialize, Serialize};

use super::bm25::{requirement_tokens, Bm25Index};
use crate::dataset::Label;
use crate::embeddings::{cosine, EmbeddingProvider, EmbeddingVector};
use crate::error::{Error, Result};
use crate::evaluation::auroc_from_scores;

/// Values of k tried when tuning on training data.
pub const K_CANDIDATES: [usize; 5] = [1, 3, 5, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMetric {
    Bm25,
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: KnnMetric,
}

/// A labeled corpus that scores every stored requirement against a query.
pub trait Retriever {
    fn labels(&self) -> &[Label];
    fn query_scores(&self, query: &str) -> Result<Vec<f64>>;
}

impl Retriever for Bm25Index {
    fn labels(&self) -> &[Label] {
        Bm25Index::labels(self)
    }

    fn query_scores(&self, query: &str) -> Result<Vec<f64>> {
        Ok(self.scores(&requirement_tokens(query)))
    }
}

/// Requirements embedded once, compared to queries by cosine.
pub struct EmbeddingCorpus<'p> {
    provider: &'p dyn EmbeddingProvider,
    vectors: Vec<EmbeddingVector>,
    labels: Vec<Label>,
}

impl<'p> EmbeddingCorpus<'p> {
    pub fn build<I, S>(provider: &'p dyn EmbeddingProvider, documents: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Label)>,
        S: AsRef<str>,
    {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for (text, label) in documents {
            vectors.push(provider.embed_text(text.as_ref())?);
            labels.push(label);
        }
        Ok(EmbeddingCorpus {
            provider,
            vectors,
            labels,
        })
    }
}

impl Retriever for EmbeddingCorpus<'_> {
    fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn query_scores(&self, query: &str) -> Result<Vec<f64>> {
        let q = self.provider.embed_text(query)?;
        self.vectors.iter().map(|v| cosine(&q, v)).collect()
    }
}

/// Fraction of passed labels among the `k` best scores, skipping `exclude`.
/// Equal scores keep corpus order; `k` is clamped to the corpus size.
pub fn knn_from_scores(scores: &[f64], labels: &[Label], k: usize, exclude: Option<usize>) -> Result<f64> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| Some(i) != exclude).collect();
    if order.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let k = k.min(order.len());
    let passed = order[..k].iter().filter(|&&i| labels[i].is_passed()).count();
    Ok(passed as f64 / k as f64)
}

pub fn knn_confidence(query: &str, corpus: &dyn Retriever, k: usize) -> Result<f64> {
    if corpus.labels().is_empty() {
        return Err(Error::EmptyCorpus);
    }
    knn_from_scores(&corpus.query_scores(query)?, corpus.labels(), k, None)
}

/// Chooses k by leave-one-out AUROC over the corpus itself, where
/// `queries[i]` is the text of document `i`. Ties go to the smaller k.
pub fn tune_k(corpus: &dyn Retriever, queries: &[&str], candidates: &[usize]) -> Result<(usize, f64)> {
    let labels = corpus.labels();
    if labels.len() != queries.len() {
        return Err(Error::InvalidConfig("one query per corpus document is required".into()));
    }
    let positive: Vec<bool> = labels.iter().map(|l| l.is_passed()).collect();
    if positive.iter().all(|&p| p) || positive.iter().all(|&p| !p) {
        return Err(Error::DegenerateLabels);
    }
    let all_scores = queries
        .iter()
        .map(|q| corpus.query_scores(q))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, f64)> = None;
    for &k in candidates {
        let confidences = all_scores
            .iter()
            .enumerate()
            .map(|(i, s)| knn_from_scores(s, labels, k, Some(i)))
            .collect::<Result<Vec<_>>>()?;
        let auroc = auroc_from_scores(&confidences, &positive)?;
        if best.is_none_or(|(_, b)| auroc > b) {
            best = Some((k, auroc));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("no k candidates".into()))
}
