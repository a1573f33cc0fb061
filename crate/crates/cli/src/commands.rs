//! Subcommand implementations.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use honest_core::baselines::{
    avg_prob, knn_from_scores, product_prob, self_ask_code, self_ask_requirement, tune_k, Bm25Index,
    EmbeddingCorpus, Retriever, K_CANDIDATES,
};
use honest_core::confidence::{tune_weights, ConfidenceReport, Estimator, WeightsFile};
use honest_core::dataset::{
    join_archive, load_benchmark, load_samples, save_benchmark, save_samples, split_benchmark,
    write_atomic, ArchivedProgram, BenchmarkSample, Label, SampleArchiveEntry, Split,
};
use honest_core::embeddings::{provider_from_config, EmbeddingProvider};
use honest_core::evaluation::{
    curve_csv, pr_curve, roc_curve, sweep_csv, threshold_sweep, MetricsReport, ScoredSample,
    DEFAULT_SWEEP_POINTS,
};
use honest_core::gate::Gate;
use honest_core::llm::LlmClient;
use honest_core::similarity::SimilarityWeights;
use honest_core::synthetic::{synthetic_dataset, SyntheticConfig};
use honest_core::{Error, Language};
use serde::Serialize;

use crate::config::RunConfig;

/// Failure for features that exist as named slots but are not provided.
#[derive(Debug, thiserror::Error)]
#[error("unimplemented baseline: {0}")]
pub struct Unsupported(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

impl SplitChoice {
    fn keeps(self, sample: &BenchmarkSample) -> bool {
        match self {
            SplitChoice::All => true,
            SplitChoice::Train => sample.split == Some(Split::Train),
            SplitChoice::Test => sample.split == Some(Split::Test),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        for v in values {
            serde_json::to_writer(&mut *w, v)?;
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::MalformedLine {
                    line: i + 1,
                    message: e.to_string(),
                }
                .into()
            })
        })
        .collect()
}

/// Weights from a file, or uniform weights with a warning when the file is
/// absent.
pub fn load_weights(path: Option<&Path>) -> anyhow::Result<SimilarityWeights> {
    let Some(path) = path else {
        return Ok(SimilarityWeights::uniform());
    };
    if !path.exists() {
        eprintln!("warning: weights file {} not found; using 0.25 for every modality", path.display());
        return Ok(SimilarityWeights::uniform());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: WeightsFile = serde_json::from_str(&text).map_err(Error::from)?;
    Ok(file.weights()?)
}

fn resolve_model(config: &RunConfig, archive: &[SampleArchiveEntry]) -> anyhow::Result<String> {
    if let Some(model) = &config.model {
        return Ok(model.clone());
    }
    let mut models: Vec<&str> = archive.iter().map(|e| e.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    match models.as_slice() {
        [one] => Ok(one.to_string()),
        [] => bail!(Error::EmptyInput("sample archive")),
        many => bail!(Error::InvalidConfig(format!(
            "archive holds several models ({}); pass --model",
            many.join(", ")
        ))),
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Requirement text to sample for (alternative to --benchmark).
    #[arg(long, conflicts_with = "benchmark")]
    pub requirement: Option<String>,
    /// Identifier recorded for --requirement.
    #[arg(long, default_value = "req-0")]
    pub id: String,
    /// Language for --requirement.
    #[arg(long, default_value = "python")]
    pub language: Language,
    /// Sample every requirement in this benchmark file.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitChoice,
    /// Archive to write (JSON Lines, `.gz` for gzip).
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn sample(config: &RunConfig, args: &SampleArgs) -> anyhow::Result<()> {
    let sampling = config.sampling()?;
    let targets: Vec<(String, String, Language)> = match (&args.requirement, &args.benchmark) {
        (Some(text), None) => vec![(args.id.clone(), text.clone(), args.language)],
        (None, Some(path)) => load_benchmark(path)?
            .into_iter()
            .filter(|s| args.split.keeps(s))
            .map(|s| (s.id, s.requirement, s.language))
            .collect(),
        _ => bail!(Error::InvalidConfig("pass --requirement or --benchmark".into())),
    };
    let client = LlmClient::new(sampling)?;
    let model = client.config().model.clone();
    let mut entries = Vec::with_capacity(targets.len());
    for (id, requirement, language) in targets {
        let (set, records) = client.sample_programs(&id, &requirement, language)?;
        log::info!("{id}: {} programs", set.programs.len());
        let programs = records
            .into_iter()
            .filter(|r| !r.program.source.trim().is_empty())
            .map(|r| ArchivedProgram {
                temperature: r.program.origin.as_ref().map_or(0.0, |o| o.temperature),
                source: r.program.source,
                token_probs: r.token_probs,
                verdict: None,
            })
            .collect();
        entries.push(SampleArchiveEntry {
            id,
            model: model.clone(),
            language: Some(language),
            requirement: Some(requirement),
            programs,
        });
    }
    save_samples(&args.output, &entries)?;
    eprintln!("wrote {} entries to {}", entries.len(), args.output.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Benchmark supplying language and requirement text when the archive lacks them.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Tuned weights (JSON); uniform weights when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Report file (JSON Lines, one report per archive entry).
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn estimate(config: &RunConfig, args: &EstimateArgs) -> anyhow::Result<()> {
    let weights = load_weights(args.weights.as_deref())?;
    let archive = load_samples(&args.samples)?;
    let benchmark = match &args.benchmark {
        Some(path) => load_benchmark(path)?,
        None => Vec::new(),
    };
    let by_id: HashMap<&str, &BenchmarkSample> = benchmark.iter().map(|b| (b.id.as_str(), b)).collect();
    let provider = provider_from_config(&config.embeddings()?)?;
    let estimator = Estimator::new(provider.as_ref())
        .with_weights(weights)
        .with_workers(config.workers);
    let mut reports = Vec::with_capacity(archive.len());
    for entry in &archive {
        let set = entry.to_sample_set(by_id.get(entry.id.as_str()).copied())?;
        let mut report = estimator.estimate(&set)?;
        report.model = Some(entry.model.clone());
        reports.push(report);
    }
    write_jsonl(&args.output, &reports)?;
    let mut stdout = std::io::stdout().lock();
    for r in &reports {
        let model = r.model.as_deref().unwrap_or_default();
        writeln!(stdout, "{}\t{model}\t{:.6}", r.requirement_id, r.confidence)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Confidence reports written by `estimate`.
    #[arg(long)]
    pub report: PathBuf,
    /// Archive holding the programs to show.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Show at most this many programs.
    #[arg(long)]
    pub top: Option<usize>,
    /// Replacement refusal message.
    #[arg(long)]
    pub message: Option<String>,
}

pub fn gate(config: &RunConfig, args: &GateArgs) -> anyhow::Result<()> {
    let Some(threshold) = config.threshold else {
        bail!(Error::InvalidConfig("no threshold; pass --threshold".into()));
    };
    let mut gate = Gate::new(threshold)?.with_top(args.top);
    if let Some(message) = &args.message {
        gate = gate.with_message(message.clone())?;
    }
    let reports: Vec<ConfidenceReport> = read_jsonl(&args.report)?;
    let archive = load_samples(&args.samples)?;
    let benchmark = match &args.benchmark {
        Some(path) => load_benchmark(path)?,
        None => Vec::new(),
    };
    let by_id: HashMap<&str, &BenchmarkSample> = benchmark.iter().map(|b| (b.id.as_str(), b)).collect();
    let mut stdout = std::io::stdout().lock();
    for report in &reports {
        let entry = archive
            .iter()
            .find(|e| e.id == report.requirement_id && report.model.as_ref().is_none_or(|m| *m == e.model))
            .ok_or_else(|| Error::JoinError {
                id: report.requirement_id.clone(),
                model: report.model.clone(),
            })?;
        let set = entry.to_sample_set(by_id.get(entry.id.as_str()).copied())?;
        let decision = gate.decide(report, &set)?;
        writeln!(stdout, "{}", serde_json::to_string(&decision)?)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Honest,
    AvgProb,
    ProductProb,
    SelfAskCode,
    SelfAskReq,
    KnnBm25,
    KnnEmbed,
    CodeClassifier,
    ReqClassifier,
}

impl Method {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, value_enum, default_value = "honest")]
    pub method: Method,
    /// Requirements to score.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitChoice,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Neighbors for the K-NN baselines; tuned on the training split when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
    pub sweep_points: usize,
    /// Metrics report (JSON).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-requirement scores (JSON Lines).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub roc_csv: Option<PathBuf>,
    #[arg(long)]
    pub pr_csv: Option<PathBuf>,
    #[arg(long)]
    pub sweep_csv: Option<PathBuf>,
}

fn knn_scores(
    retriever: &dyn Retriever,
    corpus_ids: &[&str],
    corpus_texts: &[&str],
    queries: &[(&BenchmarkSample, Label)],
    k: Option<usize>,
) -> anyhow::Result<(usize, Vec<f64>)> {
    let k = match k {
        Some(k) => k,
        None => {
            let (k, auroc) = tune_k(retriever, corpus_texts, &K_CANDIDATES)?;
            log::info!("chose k = {k} (leave-one-out AUROC {auroc:.4})");
            k
        }
    };
    let scores = queries
        .iter()
        .map(|(sample, _)| {
            let exclude = corpus_ids.iter().position(|id| *id == sample.id);
            let scores = retriever.query_scores(&sample.requirement)?;
            Ok(knn_from_scores(&scores, retriever.labels(), k, exclude)?)
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok((k, scores))
}

pub fn eval(config: &RunConfig, args: &EvalArgs) -> anyhow::Result<MetricsReport> {
    if matches!(args.method, Method::CodeClassifier | Method::ReqClassifier) {
        bail!(Unsupported(args.method.name()));
    }
    let benchmark = load_benchmark(&args.benchmark)?;
    let archive = load_samples(&args.samples)?;
    let model = resolve_model(config, &archive)?;
    let joined: Vec<(&BenchmarkSample, &SampleArchiveEntry)> = join_archive(&benchmark, &archive, Some(&model))?
        .into_iter()
        .filter(|(b, _)| args.split.keeps(b))
        .collect();
    if joined.is_empty() {
        bail!(Error::EmptyInput("no archive entries match the model and split"));
    }
    let labeled: Vec<(&BenchmarkSample, &SampleArchiveEntry, Label)> = joined
        .iter()
        .map(|(b, e)| {
            let label = b.label_for(&model).ok_or_else(|| Error::JoinError {
                id: b.id.clone(),
                model: Some(model.clone()),
            })?;
            Ok((*b, *e, label))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut k_used = None;
    let mut weights_used = None;
    let scores: Vec<f64> = match args.method {
        Method::Honest => {
            let weights = load_weights(args.weights.as_deref())?;
            weights_used = Some(weights.as_array());
            let provider = provider_from_config(&config.embeddings()?)?;
            let estimator = Estimator::new(provider.as_ref())
                .with_weights(weights)
                .with_workers(config.workers);
            labeled
                .iter()
                .map(|(b, e, _)| Ok(estimator.estimate(&e.to_sample_set(Some(b))?)?.confidence))
                .collect::<anyhow::Result<_>>()?
        }
        Method::AvgProb => labeled
            .iter()
            .map(|(_, e, _)| avg_prob(&e.programs).with_context(|| format!("sample `{}`", e.id)))
            .collect::<anyhow::Result<_>>()?,
        Method::ProductProb => labeled
            .iter()
            .map(|(_, e, _)| product_prob(&e.programs).with_context(|| format!("sample `{}`", e.id)))
            .collect::<anyhow::Result<_>>()?,
        Method::SelfAskCode | Method::SelfAskReq => {
            let client = LlmClient::new(config.sampling()?)?;
            labeled
                .iter()
                .map(|(b, e, _)| {
                    Ok(if args.method == Method::SelfAskCode {
                        let set = e.to_sample_set(Some(b))?;
                        self_ask_code(&client, &b.requirement, &set.programs)?
                    } else {
                        self_ask_requirement(&client, &b.requirement)?
                    })
                })
                .collect::<anyhow::Result<_>>()?
        }
        Method::KnnBm25 | Method::KnnEmbed => {
            let has_train = benchmark.iter().any(|b| b.split == Some(Split::Train));
            let corpus: Vec<(&str, &str, Label)> = benchmark
                .iter()
                .filter(|b| !has_train || b.split == Some(Split::Train))
                .filter_map(|b| b.label_for(&model).map(|l| (b.id.as_str(), b.requirement.as_str(), l)))
                .collect();
            if !has_train {
                log::warn!("benchmark has no training split; K-NN uses leave-one-out over all samples");
            }
            let ids: Vec<&str> = corpus.iter().map(|c| c.0).collect();
            let texts: Vec<&str> = corpus.iter().map(|c| c.1).collect();
            let queries: Vec<(&BenchmarkSample, Label)> = labeled.iter().map(|(b, _, l)| (*b, *l)).collect();
            let (k, scores) = if args.method == Method::KnnBm25 {
                let index = Bm25Index::build(corpus.iter().map(|c| (c.1, c.2)));
                knn_scores(&index, &ids, &texts, &queries, args.k)?
            } else {
                let provider: Box<dyn EmbeddingProvider> = provider_from_config(&config.embeddings()?)?;
                let index = EmbeddingCorpus::build(provider.as_ref(), corpus.iter().map(|c| (c.1, c.2)))?;
                knn_scores(&index, &ids, &texts, &queries, args.k)?
            };
            k_used = Some(k);
            scores
        }
        Method::CodeClassifier | Method::ReqClassifier => unreachable!(),
    };

    let scored: Vec<ScoredSample> = labeled
        .iter()
        .zip(&scores)
        .map(|((b, e, label), &score)| {
            let s = ScoredSample::new(b.id.clone(), score, *label);
            match e.program_counts() {
                Some((correct, total)) => s.with_counts(correct, total),
                None => s,
            }
        })
        .collect();
    let mut report = MetricsReport::compute(&args.method.name(), &scored, config.pr_mode, config.seed)?;
    report.model = Some(model);
    report.k = k_used;
    report.weights = weights_used;
    if scored.iter().all(|s| s.programs_total.is_some()) {
        report.sweep = Some(threshold_sweep(&scored, args.sweep_points)?);
    } else {
        log::info!("archive lacks per-program verdicts; skipping the threshold sweep");
    }

    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    if let Some(path) = &args.scores {
        write_jsonl(path, &scored)?;
    }
    if let Some(path) = &args.roc_csv {
        write_text(path, &curve_csv(&roc_curve(&scored)?, "fpr", "tpr"))?;
    }
    if let Some(path) = &args.pr_csv {
        write_text(path, &curve_csv(&pr_curve(&scored)?, "recall", "precision"))?;
    }
    if let (Some(path), Some(sweep)) = (&args.sweep_csv, &report.sweep) {
        write_text(path, &sweep_csv(sweep))?;
    }
    write!(std::io::stdout().lock(), "{}", report.to_table())?;
    Ok(report)
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Requirements to tune on; `train` falls back to all when the benchmark has no split.
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitChoice,
    /// Weights file to write (JSON).
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn tune(config: &RunConfig, args: &TuneArgs) -> anyhow::Result<()> {
    let benchmark = load_benchmark(&args.benchmark)?;
    let archive = load_samples(&args.samples)?;
    let model = resolve_model(config, &archive)?;
    let mut split = args.split;
    if split == SplitChoice::Train && !benchmark.iter().any(|b| b.split == Some(Split::Train)) {
        log::warn!("benchmark has no training split; tuning on every sample");
        split = SplitChoice::All;
    }
    let train = join_archive(&benchmark, &archive, Some(&model))?
        .into_iter()
        .filter(|(b, _)| split.keeps(b))
        .map(|(b, e)| {
            let label = b.label_for(&model).ok_or_else(|| Error::JoinError {
                id: b.id.clone(),
                model: Some(model.clone()),
            })?;
            Ok((e.to_sample_set(Some(b))?, label))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let provider = provider_from_config(&config.embeddings()?)?;
    let result = tune_weights(&train, provider.as_ref(), config.workers)?;
    let w = result.weights;
    println!(
        "alpha {:.2}  beta {:.2}  gamma {:.2}  delta {:.2}  train AUROC {:.4}  ({} grid points)",
        w.alpha, w.beta, w.gamma, w.delta, result.train_auroc, result.grid_points_evaluated
    );
    write_json(&args.output, &WeightsFile::from(&result))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Fraction assigned to the training split.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn split(config: &RunConfig, args: &SplitArgs) -> anyhow::Result<()> {
    let samples = load_benchmark(&args.benchmark)?;
    let (train, test) = split_benchmark(&samples, args.ratio, config.seed)?;
    println!("train {}  test {}", train.len(), test.len());
    let order: HashMap<&str, usize> = samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut all: Vec<BenchmarkSample> = train.into_iter().chain(test).collect();
    all.sort_by_key(|s| order[s.id.as_str()]);
    save_benchmark(&args.output, &all)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving benchmark.jsonl and samples.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub passed: usize,
    #[arg(long, default_value_t = 40)]
    pub failed: usize,
    #[arg(long, default_value = "python")]
    pub language: Language,
}

pub fn synth(config: &RunConfig, args: &SynthArgs) -> anyhow::Result<()> {
    let data = synthetic_dataset(&SyntheticConfig {
        passed: args.passed,
        failed: args.failed,
        n: config.n,
        language: args.language,
        seed: config.seed,
        ..SyntheticConfig::default()
    });
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    save_benchmark(args.out_dir.join("benchmark.jsonl"), &data.benchmark)?;
    save_samples(args.out_dir.join("samples.jsonl"), &data.archive)?;
    println!(
        "wrote {} requirements with {} programs each to {}",
        data.benchmark.len(),
        config.n,
        args.out_dir.display()
    );
    Ok(())
}
