//! Confidence as the mean hybrid similarity over all ordered pairs of
//! sampled programs, and grid-search tuning of the mixing weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::embeddings::{provider_from_config, EmbeddingProvider, EmbeddingProviderConfig};
use crate::error::{Error, Result};
use crate::evaluation::auroc_from_scores;
use crate::program::SampleSet;
use crate::similarity::{mix, ModalityScores, ProgramFeatures, SimilarityBreakdown, SimilarityWeights};

/// Grid resolution for weight tuning: weights are multiples of 1/20.
pub const GRID_DIVISIONS: u32 = 20;

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub requirement_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub n: usize,
    pub weights: SimilarityWeights,
    /// `pair_sims[i][j]` compares program `i` against program `j`; the
    /// diagonal is `None`.
    pub pair_sims: Vec<Vec<Option<SimilarityBreakdown>>>,
    pub confidence: f64,
}

impl ConfidenceReport {
    /// Mean hybrid over the off-diagonal entries, summed in row-major order.
    pub fn recompute(&self) -> f64 {
        let hybrids: Vec<f64> = self
            .pair_sims
            .iter()
            .flatten()
            .flatten()
            .map(|b| b.hybrid)
            .collect();
        hybrids.iter().sum::<f64>() / hybrids.len() as f64
    }

    pub fn populated_pairs(&self) -> usize {
        self.pair_sims.iter().flatten().flatten().count()
    }

    /// Per-modality means over all ordered pairs.
    pub fn modality_means(&self) -> ModalityScores {
        let pairs: Vec<ModalityScores> = self
            .pair_sims
            .iter()
            .flatten()
            .flatten()
            .map(SimilarityBreakdown::modalities)
            .collect();
        mean_scores(&pairs)
    }
}

fn mean_scores(pairs: &[ModalityScores]) -> ModalityScores {
    let mut sum = [0.0; 4];
    for p in pairs {
        for (s, v) in sum.iter_mut().zip(p.as_array()) {
            *s += v;
        }
    }
    let n = pairs.len().max(1) as f64;
    ModalityScores::new(sum[0] / n, sum[1] / n, sum[2] / n, sum[3] / n)
}

/// Source of modality scores for the ordered pair `(i, j)`.
pub trait PairScorer: Sync {
    fn score(&self, i: usize, j: usize) -> Result<ModalityScores>;
}

impl PairScorer for [ProgramFeatures] {
    fn score(&self, i: usize, j: usize) -> Result<ModalityScores> {
        self[i].compare(&self[j])
    }
}

impl PairScorer for Vec<ProgramFeatures> {
    fn score(&self, i: usize, j: usize) -> Result<ModalityScores> {
        self.as_slice().score(i, j)
    }
}

impl<F> PairScorer for F
where
    F: Fn(usize, usize) -> Result<ModalityScores> + Sync,
{
    fn score(&self, i: usize, j: usize) -> Result<ModalityScores> {
        self(i, j)
    }
}

fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

/// Scores every ordered pair `i ≠ j` and averages the hybrids. The sum runs
/// in row-major order whatever `workers` is, so results are reproducible.
pub fn aggregate_pairs(
    requirement_id: &str,
    n: usize,
    scorer: &dyn PairScorer,
    weights: &SimilarityWeights,
    workers: usize,
) -> Result<ConfidenceReport> {
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: n,
        });
    }
    weights.validate()?;
    let pairs = ordered_pairs(n);
    let scored: Vec<Result<SimilarityBreakdown>> = run_in_pool(workers, || {
        pairs
            .par_iter()
            .map(|&(i, j)| SimilarityBreakdown::new(i, j, scorer.score(i, j)?, weights))
            .collect()
    });
    let mut matrix = vec![vec![None; n]; n];
    let mut sim_list = Vec::with_capacity(pairs.len());
    for breakdown in scored {
        let breakdown = breakdown?;
        sim_list.push(breakdown.hybrid);
        matrix[breakdown.i][breakdown.j] = Some(breakdown);
    }
    let confidence = sim_list.iter().sum::<f64>() / sim_list.len() as f64;
    Ok(ConfidenceReport {
        requirement_id: requirement_id.to_string(),
        model: None,
        n,
        weights: *weights,
        pair_sims: matrix,
        confidence,
    })
}

/// Runs the whole estimator: per-program analysis once, then all pairs.
pub struct Estimator<'p> {
    provider: &'p dyn EmbeddingProvider,
    weights: SimilarityWeights,
    workers: usize,
}

impl<'p> Estimator<'p> {
    pub fn new(provider: &'p dyn EmbeddingProvider) -> Self {
        Estimator {
            provider,
            weights: SimilarityWeights::uniform(),
            workers: default_workers(),
        }
    }

    pub fn with_weights(mut self, weights: SimilarityWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn weights(&self) -> &SimilarityWeights {
        &self.weights
    }

    /// Tokens, subtree bag, dataflow and embedding of every program.
    pub fn features(&self, samples: &SampleSet) -> Result<Vec<ProgramFeatures>> {
        samples.validate_for_estimation()?;
        let embeddings = self.provider.embed_programs(&samples.programs)?;
        run_in_pool(self.workers, || {
            samples
                .programs
                .par_iter()
                .zip(embeddings)
                .map(|(p, e)| ProgramFeatures::with_embedding(p, e))
                .collect()
        })
    }

    pub fn estimate(&self, samples: &SampleSet) -> Result<ConfidenceReport> {
        let features = self.features(samples)?;
        aggregate_pairs(
            &samples.requirement_id,
            features.len(),
            &features,
            &self.weights,
            self.workers,
        )
    }

    /// Mean of each modality over all ordered pairs; confidence for any
    /// weights is the weighted sum of these means.
    pub fn modality_means(&self, samples: &SampleSet) -> Result<ModalityScores> {
        let features = self.features(samples)?;
        let pairs = ordered_pairs(features.len());
        let scores: Result<Vec<ModalityScores>> = run_in_pool(self.workers, || {
            pairs
                .par_iter()
                .map(|&(i, j)| features[i].compare(&features[j]))
                .collect()
        });
        Ok(mean_scores(&scores?))
    }
}

pub fn estimate_confidence(
    samples: &SampleSet,
    weights: &SimilarityWeights,
    provider: &EmbeddingProviderConfig,
) -> Result<ConfidenceReport> {
    let provider = provider_from_config(provider)?;
    Estimator::new(provider.as_ref())
        .with_weights(*weights)
        .estimate(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub weights: SimilarityWeights,
    pub train_auroc: f64,
    pub grid_points_evaluated: usize,
}

/// On-disk form of tuned weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_auroc: Option<f64>,
}

impl WeightsFile {
    pub fn weights(&self) -> Result<SimilarityWeights> {
        SimilarityWeights::new(self.alpha, self.beta, self.gamma, self.delta)
    }
}

impl From<&TuningResult> for WeightsFile {
    fn from(t: &TuningResult) -> Self {
        WeightsFile {
            alpha: t.weights.alpha,
            beta: t.weights.beta,
            gamma: t.weights.gamma,
            delta: t.weights.delta,
            train_auroc: Some(t.train_auroc),
        }
    }
}

/// All non-negative 4-tuples of multiples of `1/divisions` summing to one, in
/// ascending lexicographic order.
pub fn simplex_grid(divisions: u32) -> Vec<[f64; 4]> {
    let d = f64::from(divisions);
    let mut grid = Vec::new();
    for a in 0..=divisions {
        for b in 0..=divisions - a {
            for c in 0..=divisions - a - b {
                let e = divisions - a - b - c;
                grid.push([
                    f64::from(a) / d,
                    f64::from(b) / d,
                    f64::from(c) / d,
                    f64::from(e) / d,
                ]);
            }
        }
    }
    grid
}

/// Exhaustive simplex search maximizing training AUROC over per-requirement
/// modality means. Ties go to the lexicographically smallest weights.
pub fn tune_from_modalities(
    train: &[(ModalityScores, Label)],
    workers: usize,
) -> Result<TuningResult> {
    let labels: Vec<bool> = train.iter().map(|(_, l)| l.is_passed()).collect();
    if labels.iter().all(|&p| p) || labels.iter().all(|&p| !p) {
        return Err(Error::DegenerateLabels);
    }
    let grid = simplex_grid(GRID_DIVISIONS);
    let aurocs: Vec<Result<f64>> = run_in_pool(workers, || {
        grid.par_iter()
            .map(|w| {
                let weights = SimilarityWeights {
                    alpha: w[0],
                    beta: w[1],
                    gamma: w[2],
                    delta: w[3],
                };
                let scores: Vec<f64> = train.iter().map(|(m, _)| mix(m, &weights)).collect();
                auroc_from_scores(&scores, &labels)
            })
            .collect()
    });
    let mut best: Option<(usize, f64)> = None;
    for (idx, auroc) in aurocs.into_iter().enumerate() {
        let auroc = auroc?;
        if best.is_none_or(|(_, b)| auroc > b) {
            best = Some((idx, auroc));
        }
    }
    let (idx, train_auroc) = best.expect("grid is non-empty");
    Ok(TuningResult {
        weights: SimilarityWeights::from_array(grid[idx])?,
        train_auroc,
        grid_points_evaluated: grid.len(),
    })
}

pub fn tune_weights(
    train: &[(SampleSet, Label)],
    provider: &dyn EmbeddingProvider,
    workers: usize,
) -> Result<TuningResult> {
    let passed = train.iter().filter(|(_, l)| l.is_passed()).count();
    if passed == 0 || passed == train.len() {
        return Err(Error::DegenerateLabels);
    }
    let estimator = Estimator::new(provider).with_workers(workers);
    let means = train
        .iter()
        .map(|(set, label)| Ok((estimator.modality_means(set)?, *label)))
        .collect::<Result<Vec<_>>>()?;
    tune_from_modalities(&means, workers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::LocalHashedEmbedder;
    use crate::program::{Language, Program};
    use approx::assert_abs_diff_eq;

    fn python_set(id: &str, sources: &[&str]) -> SampleSet {
        SampleSet::new(
            id,
            "req",
            sources
                .iter()
                .map(|s| Program::new(*s, Language::Python))
                .collect(),
        )
    }

    #[test]
    fn identical_programs_give_full_confidence() {
        let embedder = LocalHashedEmbedder::new(128).unwrap();
        let src = "def add(a, b):\n    c = a + b\n    return c\n";
        let set = python_set("r1", &[src; 5]);
        let report = Estimator::new(&embedder).estimate(&set).unwrap();
        assert_abs_diff_eq!(report.confidence, 1.0, epsilon = 1e-9);
        assert_eq!(report.populated_pairs(), 20);
    }

    #[test]
    fn two_stubbed_pairs_average() {
        let scorer = |i: usize, _j: usize| -> Result<ModalityScores> {
            Ok(ModalityScores::splat(if i == 0 { 0.7 } else { 0.5 }))
        };
        let report =
            aggregate_pairs("r", 2, &scorer, &SimilarityWeights::uniform(), 1).unwrap();
        assert_abs_diff_eq!(report.confidence, 0.6, epsilon = 1e-12);
        assert_eq!(report.recompute(), report.confidence);
    }

    #[test]
    fn too_few_samples() {
        let embedder = LocalHashedEmbedder::new(64).unwrap();
        let err = Estimator::new(&embedder)
            .estimate(&python_set("r", &["x = 1"]))
            .unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { actual: 1, .. }));
    }

    #[test]
    fn workers_do_not_change_result() {
        let embedder = LocalHashedEmbedder::new(128).unwrap();
        let set = python_set(
            "r",
            &[
                "a = 1\nb = a\n",
                "x = [i for i in range(3)]\n",
                "def f(q):\n    return q * 2\n",
                "a = 2\nc = a + 1\n",
            ],
        );
        let one = Estimator::new(&embedder).with_workers(1).estimate(&set).unwrap();
        let many = Estimator::new(&embedder).with_workers(4).estimate(&set).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn grid_has_1771_points_in_lexicographic_order() {
        let grid = simplex_grid(GRID_DIVISIONS);
        assert_eq!(grid.len(), 1771);
        assert_eq!(grid[0], [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(grid[grid.len() - 1], [1.0, 0.0, 0.0, 0.0]);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for w in &grid {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_labels() {
        let data = vec![
            (ModalityScores::splat(0.5), Label::Passed),
            (ModalityScores::splat(0.4), Label::Passed),
        ];
        assert!(matches!(
            tune_from_modalities(&data, 1),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn ties_resolve_to_smallest_tuple() {
        // every modality separates perfectly, so every grid point ties at 1.0
        let data = vec![
            (ModalityScores::splat(0.9), Label::Passed),
            (ModalityScores::splat(0.1), Label::Failed),
        ];
        let result = tune_from_modalities(&data, 2).unwrap();
        assert_eq!(result.train_auroc, 1.0);
        assert_eq!(result.weights.as_array(), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(result.grid_points_evaluated, 1771);
    }

    #[test]
    fn embedding_only_separation_selects_delta() {
        // Exhaustive-grid oracle: text/syntax/dataflow rank the classes in
        // reverse, embedding ranks them correctly with a small margin, so only
        // δ ≥ 0.9 reaches AUROC 1 and (0, 0, 0, 1) is the smallest such tuple.
        let mut data = Vec::new();
        for k in 0..10 {
            let jitter = k as f64 * 0.005;
            data.push((ModalityScores::new(0.05 + jitter, 0.05, 0.05 + jitter, 0.55 + jitter), Label::Passed));
            data.push((ModalityScores::new(0.95 - jitter, 0.95, 0.95 - jitter, 0.45 - jitter), Label::Failed));
        }
        let result = tune_from_modalities(&data, 4).unwrap();
        assert_eq!(result.weights.as_array(), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(result.train_auroc, 1.0);
    }
}
