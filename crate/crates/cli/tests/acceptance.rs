//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Run with `cargo test -p honest-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use honest_core::baselines::avg_prob;
use honest_core::confidence::{aggregate_pairs, estimate_confidence, tune_from_modalities, Estimator};
use honest_core::dataset::{BenchmarkSample, Label, SampleArchiveEntry};
use honest_core::embeddings::{cosine, EmbeddingProvider, EmbeddingProviderConfig, LocalHashedEmbedder};
use honest_core::evaluation::{aucpr_from_scores, auroc_from_scores, threshold_sweep, ScoredSample};
use honest_core::gate::{Gate, Verdict, DEFAULT_REFUSAL};
use honest_core::mock::{chat_reply, MockReply, MockServer};
use honest_core::similarity::{
    sim_dataflow, sim_hybrid, sim_syntax, sim_text, ModalityScores, ProgramFeatures, SimilarityWeights,
};
use honest_core::synthetic::{modality_dataset, random_pairs, synthetic_dataset, SyntheticConfig, SyntheticProgram};
use honest_core::{tokenize, Language, Program, SampleSet, TokenSequence};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TEXT_ORACLE_TOL: f64 = 1e-9;
const TEXT_ORACLE_BUDGET: Duration = Duration::from_secs(5);
const IDENTITY_TOL: f64 = 1e-9;
const RANGE_PAIRS: usize = 10_000;
const PERMUTATION_TOL: f64 = 1e-9;
const AUROC_TOL: f64 = 1e-12;
const AUROC_BUDGET: Duration = Duration::from_secs(2);
const AUCPR_TOL: f64 = 1e-9;
const SEPARABILITY_MIN_AUROC: f64 = 0.95;
const SEPARABILITY_BUDGET: Duration = Duration::from_secs(60);
const SWEEP_POINTS: usize = 100;
const TUNED_WEIGHT_MIN: f64 = 0.9;
const PIPELINE_BUDGET: Duration = Duration::from_secs(30);
const PIPELINE_REQUIREMENTS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- oracles

fn brute_force_text(i: &[String], j: &[String]) -> f64 {
    let grams = |s: &[String], n: usize| -> Vec<Vec<String>> {
        if s.len() < n {
            return Vec::new();
        }
        (0..=s.len() - n).map(|k| s[k..k + n].to_vec()).collect()
    };
    let mut logs = Vec::new();
    for n in 1..=4 {
        let gi = grams(i, n);
        let gj = grams(j, n);
        if gj.is_empty() {
            continue;
        }
        let mut seen: Vec<&Vec<String>> = Vec::new();
        let mut overlap = 0;
        for g in &gj {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let ci = gi.iter().filter(|x| *x == g).count();
            let cj = gj.iter().filter(|x| *x == g).count();
            overlap += ci.min(cj);
        }
        if overlap == 0 {
            return 0.0;
        }
        logs.push((overlap as f64 / gj.len() as f64).ln());
    }
    if logs.is_empty() {
        return if i.is_empty() { 1.0 } else { 0.0 };
    }
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Fraction of (passed, failed) pairs ranked correctly, ties counting half.
fn pairwise_auroc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in positive.iter().enumerate() {
        for (j, &pj) in positive.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Sum over distinct descending thresholds of (recall gain) x precision.
fn enumerated_ap(scores: &[f64], positive: &[bool]) -> f64 {
    let total_pos = positive.iter().filter(|&&p| p).count() as f64;
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(positive).filter(|(s, p)| **s >= t && **p).count() as f64;
        let shown = scores.iter().filter(|s| **s >= t).count() as f64;
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / shown);
        prev_recall = recall;
    }
    ap
}

fn random_simplex(rng: &mut impl Rng) -> SimilarityWeights {
    let raw: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen::<f64>() + 1e-3];
    let s: f64 = raw.iter().sum();
    let (a, b, c) = (raw[0] / s, raw[1] / s, raw[2] / s);
    SimilarityWeights::new(a, b, c, (1.0 - a - b - c).max(0.0)).unwrap()
}

fn ranking_datasets() -> Vec<(Vec<f64>, Vec<bool>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut out = Vec::new();
    while out.len() < 100 {
        let n = rng.gen_range(2..=200);
        let levels = rng.gen_range(2..=12);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let positive: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        if positive.iter().any(|&p| p) && positive.iter().any(|&p| !p) {
            out.push((scores, positive));
        }
    }
    out
}

// --------------------------------------------------------------- criteria

fn similarity_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let vocab = ["x", "y", "=", "+", "(", ")", "return"];
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut seq = || -> Vec<String> {
            let len = rng.gen_range(0..=40);
            (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect()
        };
        let (a, b) = (seq(), seq());
        let ours = sim_text(&TokenSequence::new(a.clone()), &TokenSequence::new(b.clone()));
        worst = worst.max((ours - brute_force_text(&a, &b)).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= TEXT_ORACLE_TOL && elapsed < TEXT_ORACLE_BUDGET,
        format!("50 pairs, max |diff| {worst:.1e} (tol {TEXT_ORACLE_TOL:.0e}), {elapsed:.2?} (budget {TEXT_ORACLE_BUDGET:?})"),
    )
}

const PY_SOURCE: &str = "def scale(values, k):\n    out = []\n    for v in values:\n        out.append(v * k)\n    return out\n";
const JAVA_SOURCE: &str = "public class Scale {\n    static int sum(int[] xs) {\n        int total = 0;\n        for (int x : xs) {\n            total += x;\n        }\n        return total;\n    }\n}\n";

fn identity_suite() -> Outcome {
    let embedder = LocalHashedEmbedder::new(256).unwrap();
    let mut worst: f64 = 0.0;
    for (source, language) in [(PY_SOURCE, Language::Python), (JAVA_SOURCE, Language::Java)] {
        let p = Program::new(source, language);
        let f = ProgramFeatures::analyze(&p, &embedder).unwrap();
        let t = tokenize(&p);
        let e = embedder.embed_program(&p).unwrap();
        let mut values = vec![
            sim_text(&t, &t),
            sim_syntax(&f.subtrees, &f.subtrees),
            sim_dataflow(&f.dataflow, &f.dataflow),
            cosine(&e, &e).unwrap(),
        ];
        let scores = f.compare(&f).unwrap();
        values.push(sim_hybrid(&scores, &SimilarityWeights::uniform()).unwrap());
        let set = SampleSet::new("identity", "identity", vec![p.clone(); 5]);
        values.push(
            estimate_confidence(&set, &SimilarityWeights::uniform(), &EmbeddingProviderConfig::local(256))
                .unwrap()
                .confidence,
        );
        for v in values {
            worst = worst.max((v - 1.0).abs());
        }
    }
    outcome(
        worst <= IDENTITY_TOL,
        format!("python and java, N = 5, max |1 - value| {worst:.1e} (tol {IDENTITY_TOL:.0e})"),
    )
}

fn range_suite() -> Outcome {
    let embedder = LocalHashedEmbedder::new(256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = random_pairs(RANGE_PAIRS / 2, Language::Python, 1);
    pairs.extend(random_pairs(RANGE_PAIRS / 2, Language::Java, 2));
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    let mut violations = 0;
    let mut checked = 0;
    for (a, b) in &pairs {
        let fa = ProgramFeatures::analyze(a, &embedder).unwrap();
        let fb = ProgramFeatures::analyze(b, &embedder).unwrap();
        let s = fa.compare(&fb).unwrap();
        let h = sim_hybrid(&s, &random_simplex(&mut rng)).unwrap();
        for v in s.as_array().into_iter().chain([h]) {
            checked += 1;
            if !in_unit(v) {
                violations += 1;
            }
        }
    }
    let mut confidences = 0;
    for chunk in pairs.chunks(50).take(40) {
        let programs: Vec<Program> = chunk.iter().take(6).flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let c = Estimator::new(&embedder)
            .with_weights(random_simplex(&mut rng))
            .estimate(&SampleSet::new("range", "range", programs))
            .unwrap()
            .confidence;
        confidences += 1;
        if !in_unit(c) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{} pairs, {checked} similarities and {confidences} confidences, {violations} outside [0, 1]", pairs.len()),
    )
}

fn algorithm_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut exact = true;
    let mut worst_perm: f64 = 0.0;
    for n in [2usize, 3, 5, 20] {
        for _ in 0..5 {
            let table: Vec<Vec<ModalityScores>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| ModalityScores::new(rng.gen(), rng.gen(), rng.gen(), rng.gen()))
                        .collect()
                })
                .collect();
            let w = random_simplex(&mut rng);
            let scorer = |i: usize, j: usize| Ok(table[i][j]);
            let report = aggregate_pairs("stub", n, &scorer, &w, 1).unwrap();
            let mut sum = 0.0;
            for (i, row) in table.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    if i != j {
                        sum += sim_hybrid(s, &w).unwrap();
                    }
                }
            }
            let direct = sum / (n * (n - 1)) as f64;
            exact &= report.confidence == direct;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let permuted = |i: usize, j: usize| Ok(table[perm[i]][perm[j]]);
            let other = aggregate_pairs("stub", n, &permuted, &w, 4).unwrap();
            worst_perm = worst_perm.max((other.confidence - report.confidence).abs());
        }
    }
    outcome(
        exact && worst_perm <= PERMUTATION_TOL,
        format!(
            "N in {{2, 3, 5, 20}}, exact mean: {exact}, permutation |diff| {worst_perm:.1e} (tol {PERMUTATION_TOL:.0e})"
        ),
    )
}

fn auroc_correctness(datasets: &[(Vec<f64>, Vec<bool>)]) -> Outcome {
    let start = Instant::now();
    let (mut worst, mut worst_rev, mut worst_mono): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (scores, positive) in datasets {
        let a = auroc_from_scores(scores, positive).unwrap();
        worst = worst.max((a - pairwise_auroc(scores, positive)).abs());
        let flipped: Vec<bool> = positive.iter().map(|p| !p).collect();
        worst_rev = worst_rev.max((auroc_from_scores(scores, &flipped).unwrap() - (1.0 - a)).abs());
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + s.powi(3)).collect();
        worst_mono = worst_mono.max((auroc_from_scores(&transformed, positive).unwrap() - a).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= AUROC_TOL && worst_rev <= AUROC_TOL && worst_mono <= AUROC_TOL && elapsed < AUROC_BUDGET,
        format!(
            "100 datasets, oracle {worst:.1e}, reversal {worst_rev:.1e}, monotone {worst_mono:.1e} (tol {AUROC_TOL:.0e}), {elapsed:.2?} (budget {AUROC_BUDGET:?})"
        ),
    )
}

fn aucpr_correctness(datasets: &[(Vec<f64>, Vec<bool>)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (scores, positive) in datasets {
        let ap = aucpr_from_scores(scores, positive).unwrap();
        worst = worst.max((ap - enumerated_ap(scores, positive)).abs());
    }
    let perfect = aucpr_from_scores(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false]).unwrap();
    let all_positive = aucpr_from_scores(&[0.2, 0.5, 0.5], &[true, true, true]).unwrap();
    outcome(
        worst <= AUCPR_TOL && perfect == 1.0 && all_positive == 1.0,
        format!(
            "100 datasets, oracle {worst:.1e} (tol {AUCPR_TOL:.0e}), perfect ranking {perfect}, all positive {all_positive}"
        ),
    )
}

struct SyntheticRun {
    scored: Vec<ScoredSample>,
    honest_auroc: f64,
    avg_prob_auroc: f64,
    elapsed: Duration,
}

fn synthetic_run() -> SyntheticRun {
    let start = Instant::now();
    let data = synthetic_dataset(&SyntheticConfig::default());
    let embedder = LocalHashedEmbedder::new(256).unwrap();
    let estimator = Estimator::new(&embedder);
    let mut scored = Vec::new();
    let mut flat = Vec::new();
    for (sample, entry) in data.benchmark.iter().zip(&data.archive) {
        let label = sample.labels.values().next().copied().unwrap();
        let set = entry.to_sample_set(Some(sample)).unwrap();
        let confidence = estimator.estimate(&set).unwrap().confidence;
        let (correct, total) = entry.program_counts().unwrap();
        scored.push(ScoredSample::new(sample.id.clone(), confidence, label).with_counts(correct, total));
        flat.push(avg_prob(&entry.programs).unwrap());
    }
    let positive: Vec<bool> = scored.iter().map(|s| s.label.is_passed()).collect();
    let honest: Vec<f64> = scored.iter().map(|s| s.score).collect();
    SyntheticRun {
        honest_auroc: auroc_from_scores(&honest, &positive).unwrap(),
        avg_prob_auroc: auroc_from_scores(&flat, &positive).unwrap(),
        scored,
        elapsed: start.elapsed(),
    }
}

fn synthetic_separability(run: &SyntheticRun) -> Outcome {
    outcome(
        run.honest_auroc >= SEPARABILITY_MIN_AUROC
            && run.honest_auroc > run.avg_prob_auroc
            && run.elapsed < SEPARABILITY_BUDGET,
        format!(
            "40 + 40 sets, N = 20, AUROC {:.4} (min {SEPARABILITY_MIN_AUROC}) vs avg-prob {:.4}, {:.2?} (budget {SEPARABILITY_BUDGET:?})",
            run.honest_auroc, run.avg_prob_auroc, run.elapsed
        ),
    )
}

fn sweep_behavior(run: &SyntheticRun) -> Outcome {
    let sweep = threshold_sweep(&run.scored, SWEEP_POINTS).unwrap();
    let monotone = sweep.windows(2).all(|w| {
        w[1].shown_correct <= w[0].shown_correct && w[1].shown_erroneous <= w[0].shown_erroneous
    });
    let correct: usize = run.scored.iter().map(|s| s.programs_correct.unwrap()).sum();
    let total: usize = run.scored.iter().map(|s| s.programs_total.unwrap()).sum();
    let first = sweep[0];
    let min_score = run.scored.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
    let star = first.threshold == min_score
        && first.shown_correct == correct
        && first.shown_erroneous == total - correct;
    outcome(
        sweep.len() == SWEEP_POINTS && monotone && star,
        format!(
            "{} points, monotone {monotone}, at min score {}/{} shown vs totals {correct}/{}",
            sweep.len(),
            first.shown_correct,
            first.shown_erroneous,
            total - correct
        ),
    )
}

fn weight_tuning() -> Outcome {
    let mut weights = Vec::new();
    for modality in 0..4 {
        let data = modality_dataset(modality, 40, 10 + modality as u64);
        let tuned = tune_from_modalities(&data, 1).unwrap().weights.as_array();
        weights.push(tuned[modality]);
    }
    outcome(
        weights.iter().all(|&w| w >= TUNED_WEIGHT_MIN),
        format!(
            "weight on the separating modality (text, syntax, dataflow, embedding): {:.2} {:.2} {:.2} {:.2} (min {TUNED_WEIGHT_MIN})",
            weights[0], weights[1], weights[2], weights[3]
        ),
    )
}

fn gate_contract() -> Outcome {
    let programs: Vec<Program> = (0..5)
        .map(|i| Program::new(format!("x = {i}"), Language::Python))
        .collect();
    let set = SampleSet::new("g", "gate", programs);
    let mut checked = 0;
    let mut failures = 0;
    for value in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let scorer = move |_: usize, _: usize| Ok(ModalityScores::splat(value));
        let report = aggregate_pairs("g", 5, &scorer, &SimilarityWeights::uniform(), 1).unwrap();
        let c = report.confidence;
        for t in [0.0, 0.2, 0.5, 0.8, 1.0, c] {
            let d = Gate::new(t).unwrap().decide(&report, &set).unwrap();
            let ok = if c > t {
                d.verdict == Verdict::Show
                    && d.programs.as_ref().is_some_and(|p| *p == set.programs)
                    && d.message.is_none()
            } else {
                d.verdict == Verdict::Refuse
                    && d.message.as_deref() == Some(DEFAULT_REFUSAL)
                    && d.programs.is_none()
            };
            checked += 1;
            if !ok {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checked} (confidence, threshold) cases incl. equality, {failures} violations"),
    )
}

// ------------------------------------------------------------ end to end

fn requirement_index(prompt: &str) -> u64 {
    let tail = prompt.split("Requirement ").nth(1).unwrap_or("0");
    tail.chars().take_while(char::is_ascii_digit).collect::<String>().parse().unwrap_or(0)
}

fn mock_handler(req: &honest_core::mock::MockRequest) -> MockReply {
    let index = requirement_index(req.prompt());
    let seed = req.seed().unwrap_or(0);
    let program = if req.prompt().contains("stable") {
        let base = SyntheticProgram::random(Language::Python, &mut ChaCha8Rng::seed_from_u64(index));
        if seed.is_multiple_of(3) {
            base
        } else {
            base.mutate(&mut ChaCha8Rng::seed_from_u64(seed * 1_000 + index))
        }
    } else {
        SyntheticProgram::random(Language::Python, &mut ChaCha8Rng::seed_from_u64(seed * 1_000 + index))
    };
    let logprobs: Vec<f64> = (0..6).map(|k| -0.05 * ((seed + k) % 7) as f64).collect();
    let content = format!("Here is the code.\n```python\n{}```\n", program.render());
    MockReply::ok(chat_reply(&content, Some(&logprobs)))
}

fn write_fixture(dir: &Path) {
    let mut lines = String::new();
    for i in 0..PIPELINE_REQUIREMENTS {
        let stable = i % 2 == 0;
        let sample = BenchmarkSample {
            id: format!("e2e-{i:02}"),
            language: Language::Python,
            requirement: format!(
                "Requirement {i}: a {} task over two integers.",
                if stable { "stable" } else { "vague" }
            ),
            labels: [("mock-model".to_string(), Label::from_passed(stable))].into(),
            split: None,
        };
        lines.push_str(&serde_json::to_string(&sample).unwrap());
        lines.push('\n');
    }
    std::fs::write(dir.join("benchmark.jsonl"), lines).unwrap();
}

fn honest(args: &[&str], cwd: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_honest"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HONEST_ENDPOINT")
        .env_remove("HONEST_API_KEY")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline_once(url: &str) -> Result<Vec<Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(dir.path());
    let common = ["--endpoint", url, "--model", "mock-model", "--seed", "42", "--backoff-ms", "10"];
    let run = |tail: &[&str]| {
        let args: Vec<&str> = common.iter().chain(tail).copied().collect();
        honest(&args, dir.path())
    };
    run(&["sample", "--benchmark", "benchmark.jsonl", "-o", "samples.jsonl"])?;
    run(&["estimate", "--samples", "samples.jsonl", "-o", "reports.jsonl"])?;
    let decisions = run(&["--threshold", "0.5", "gate", "--report", "reports.jsonl", "--samples", "samples.jsonl"])?;
    run(&["eval", "--benchmark", "benchmark.jsonl", "--samples", "samples.jsonl", "-o", "metrics.json"])?;
    let read = |name: &str| std::fs::read(dir.path().join(name)).map_err(|e| e.to_string());
    let archive: Vec<SampleArchiveEntry> = honest_core::dataset::load_samples(dir.path().join("samples.jsonl"))
        .map_err(|e| e.to_string())?;
    if archive.len() != PIPELINE_REQUIREMENTS || archive.iter().any(|e| e.programs.len() != 20) {
        return Err("archive does not hold 20 programs for each requirement".into());
    }
    Ok(vec![read("samples.jsonl")?, read("reports.jsonl")?, decisions, read("metrics.json")?])
}

fn end_to_end() -> Outcome {
    let server = MockServer::start(mock_handler).unwrap();
    let start = Instant::now();
    let first = pipeline_once(server.url());
    let elapsed = start.elapsed();
    let second = pipeline_once(server.url());
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let metrics: serde_json::Value = serde_json::from_slice(&a[3]).unwrap();
            let identical = a == b;
            outcome(
                identical && elapsed < PIPELINE_BUDGET,
                format!(
                    "{PIPELINE_REQUIREMENTS} requirements, sample -> estimate -> gate -> eval in {elapsed:.2?} (budget {PIPELINE_BUDGET:?}), AUROC {:.4}, second run bitwise identical: {identical}",
                    metrics["auroc"].as_f64().unwrap_or(f64::NAN)
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn live_endpoint() -> Option<Outcome> {
    let endpoint = std::env::var("HONEST_ENDPOINT").ok().filter(|e| !e.is_empty())?;
    let model = std::env::var("HONEST_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into());
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], out: &str| -> Result<Vec<SampleArchiveEntry>, String> {
        let mut args = vec!["--endpoint", endpoint.as_str(), "--model", model.as_str()];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["sample", "--requirement", "Return the sum of a list of integers.", "-o", out]);
        let status = Command::new(env!("CARGO_BIN_EXE_honest"))
            .args(&args)
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        honest_core::dataset::load_samples(dir.path().join(out)).map_err(|e| e.to_string())
    };
    let twenty = match run(&["--n", "20"], "twenty.jsonl") {
        Ok(a) => a,
        Err(e) => return Some(outcome(false, e)),
    };
    let five = match run(&["--preset", "paper-five"], "five.jsonl") {
        Ok(a) => a,
        Err(e) => return Some(outcome(false, e)),
    };
    let programs = &twenty[0].programs;
    let with_probs = programs.iter().filter(|p| p.token_probs.is_some()).count();
    let temps: Vec<f64> = five[0].programs.iter().map(|p| p.temperature).collect();
    Some(outcome(
        programs.len() == 20 && with_probs == 20 && temps == [0.0, 0.2, 0.6, 0.8, 1.0],
        format!("{} programs, {with_probs} with token probabilities, preset temperatures {temps:?}", programs.len()),
    ))
}

fn main() {
    let datasets = ranking_datasets();
    let synthetic = synthetic_run();
    let mut results: Vec<(&str, Option<Outcome>)> = vec![
        ("similarity oracle equivalence", Some(similarity_oracle())),
        ("identity suite", Some(identity_suite())),
        ("range suite", Some(range_suite())),
        ("pair-average fidelity", Some(algorithm_fidelity())),
        ("AUROC correctness", Some(auroc_correctness(&datasets))),
        ("AUCPR correctness", Some(aucpr_correctness(&datasets))),
        ("synthetic separability", Some(synthetic_separability(&synthetic))),
        ("sweep behavior", Some(sweep_behavior(&synthetic))),
        ("weight-tuning sanity", Some(weight_tuning())),
        ("gate contract", Some(gate_contract())),
        ("end-to-end offline pipeline", Some(end_to_end())),
    ];
    results.push(("live endpoint", live_endpoint()));

    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Some(o) if o.pass => println!("PASS  {name}: {}", o.detail),
            Some(o) => {
                failed += 1;
                println!("FAIL  {name}: {}", o.detail);
            }
            None => println!("SKIP  {name}: HONEST_ENDPOINT is unset"),
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
