use std::collections::HashMap;

use crate::dataset::Label;
use crate::embeddings::text_words;
use crate::error::{Error, Result};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Lowercased word tokens of a requirement.
pub fn requirement_tokens(text: &str) -> Vec<String> {
    text_words(text)
}

/// Okapi BM25 over labeled, tokenized requirements.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    documents: Vec<Vec<String>>,
    labels: Vec<Label>,
    term_freqs: Vec<HashMap<String, usize>>,
    doc_freqs: HashMap<String, usize>,
    avg_len: f64,
}

impl Bm25Index {
    pub fn new(k1: f64, b: f64) -> Self {
        Bm25Index {
            k1,
            b,
            documents: Vec::new(),
            labels: Vec::new(),
            term_freqs: Vec::new(),
            doc_freqs: HashMap::new(),
            avg_len: 0.0,
        }
    }

    pub fn build<I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = (S, Label)>,
        S: AsRef<str>,
    {
        let mut index = Bm25Index::new(DEFAULT_K1, DEFAULT_B);
        for (text, label) in documents {
            index.add(requirement_tokens(text.as_ref()), label);
        }
        index
    }

    pub fn add(&mut self, tokens: Vec<String>, label: Label) {
        let mut tf: HashMap<String, usize> = HashMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for term in tf.keys() {
            *self.doc_freqs.entry(term.clone()).or_default() += 1;
        }
        let n = self.documents.len() as f64;
        self.avg_len = (self.avg_len * n + tokens.len() as f64) / (n + 1.0);
        self.term_freqs.push(tf);
        self.documents.push(tokens);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.doc_freqs.get(term).copied().unwrap_or(0)
    }

    pub fn average_length(&self) -> f64 {
        self.avg_len
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.documents.len() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn score(&self, query: &[String], doc: usize) -> Result<f64> {
        let tf = self.term_freqs.get(doc).ok_or(Error::UnknownDocument(doc))?;
        let len = self.documents[doc].len() as f64;
        let norm = if self.avg_len > 0.0 { len / self.avg_len } else { 0.0 };
        let mut total = 0.0;
        for term in query {
            let Some(&f) = tf.get(term) else { continue };
            let f = f as f64;
            total += self.idf(term) * (f * (self.k1 + 1.0))
                / (f + self.k1 * (1.0 - self.b + self.b * norm));
        }
        Ok(total)
    }

    pub fn scores(&self, query: &[String]) -> Vec<f64> {
        (0..self.len())
            .map(|d| self.score(query, d).expect("document index in range"))
            .collect()
    }

    /// Recounts document frequencies from the stored documents.
    pub fn frequencies_consistent(&self) -> bool {
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in &self.documents {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        df.len() == self.doc_freqs.len()
            && df.iter().all(|(t, &c)| self.doc_freqs.get(*t) == Some(&c))
    }
}
