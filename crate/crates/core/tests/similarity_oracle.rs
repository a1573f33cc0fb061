//! Independent oracles for the pairwise similarities and the pair average.

use std::path::PathBuf;

use honest_core::analysis::{extract_dataflow, extract_subtrees, parse_cst, DEFAULT_SUBTREE_HEIGHT};
use honest_core::confidence::Estimator;
use honest_core::embeddings::{cosine, EmbeddingProvider, LocalHashedEmbedder};
use honest_core::similarity::{
    sim_dataflow, sim_hybrid, sim_syntax, sim_text, ModalityScores, SimilarityWeights,
};
use honest_core::{tokenize, Language, Program, SampleSet, TokenSequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts every n-gram by scanning, clips by the other sequence's count,
/// and takes the geometric mean over orders with a non-zero denominator.
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
        let mut distinct: Vec<&Vec<String>> = Vec::new();
        for g in &gj {
            if !distinct.contains(&g) {
                distinct.push(g);
            }
        }
        let overlap: usize = distinct
            .iter()
            .map(|g| {
                let ci = gi.iter().filter(|x| x == g).count();
                let cj = gj.iter().filter(|x| x == g).count();
                ci.min(cj)
            })
            .sum();
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

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    let len = rng.gen_range(0..=40);
    (0..len).map(|_| ["a", "b", "c", "d", "="][rng.gen_range(0..5)].to_string()).collect()
}

#[test]
fn text_matches_brute_force_on_fifty_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let a = random_tokens(&mut rng);
        let b = random_tokens(&mut rng);
        let ours = sim_text(&TokenSequence::new(a.clone()), &TokenSequence::new(b.clone()));
        let oracle = brute_force_text(&a, &b);
        assert!((ours - oracle).abs() <= 1e-9, "{a:?} vs {b:?}: {ours} != {oracle}");
    }
}

#[test]
fn one_token_change_example() {
    let a: Vec<String> = "a b c d e".split(' ').map(String::from).collect();
    let b: Vec<String> = "a b c d f".split(' ').map(String::from).collect();
    let oracle = brute_force_text(&a, &b);
    assert!((oracle - 0.2f64.powf(0.25)).abs() < 1e-12);
    let ours = sim_text(&TokenSequence::new(a), &TokenSequence::new(b));
    assert!((ours - 0.66874).abs() < 1e-5);
}

fn golden(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let language = if name.ends_with(".py") { Language::Python } else { Language::Java };
    Program::new(std::fs::read_to_string(path).unwrap(), language)
}

#[test]
fn self_similarity_is_one_on_golden_programs() {
    let embedder = LocalHashedEmbedder::new(256).unwrap();
    for name in ["py_01.py", "py_05.py", "py_09.py", "Java03.java", "Java07.java"] {
        let p = golden(name);
        let t = tokenize(&p);
        assert_eq!(sim_text(&t, &t), 1.0, "{name}");
        let bag = extract_subtrees(&parse_cst(&p).unwrap(), DEFAULT_SUBTREE_HEIGHT);
        assert_eq!(sim_syntax(&bag, &bag), 1.0, "{name}");
        let dfg = extract_dataflow(&p).unwrap();
        assert_eq!(sim_dataflow(&dfg, &dfg), 1.0, "{name}");
        let e = embedder.embed_program(&p).unwrap();
        assert!((cosine(&e, &e).unwrap() - 1.0).abs() < 1e-9);
    }
}

/// Recomputes every ordered pair from scratch, without the estimator's
/// per-program cache, and averages.
#[test]
fn three_program_confidence_matches_enumeration() {
    let embedder = LocalHashedEmbedder::new(256).unwrap();
    let programs = vec![golden("py_01.py"), golden("py_05.py"), golden("py_09.py")];
    let weights = SimilarityWeights::new(0.1, 0.2, 0.3, 0.4).unwrap();
    let mut hybrids = Vec::new();
    for (i, a) in programs.iter().enumerate() {
        for (j, b) in programs.iter().enumerate() {
            if i == j {
                continue;
            }
            let tree_a = parse_cst(a).unwrap();
            let tree_b = parse_cst(b).unwrap();
            let scores = ModalityScores::new(
                sim_text(&tokenize(a), &tokenize(b)),
                sim_syntax(
                    &extract_subtrees(&tree_a, DEFAULT_SUBTREE_HEIGHT),
                    &extract_subtrees(&tree_b, DEFAULT_SUBTREE_HEIGHT),
                ),
                sim_dataflow(&extract_dataflow(a).unwrap(), &extract_dataflow(b).unwrap()),
                cosine(
                    &embedder.embed_program(a).unwrap(),
                    &embedder.embed_program(b).unwrap(),
                )
                .unwrap(),
            );
            hybrids.push(sim_hybrid(&scores, &weights).unwrap());
        }
    }
    assert_eq!(hybrids.len(), 6);
    let expected = hybrids.iter().sum::<f64>() / 6.0;
    let set = SampleSet::new("golden", "three programs", programs.clone());
    let report = Estimator::new(&embedder).with_weights(weights).estimate(&set).unwrap();
    assert!((report.confidence - expected).abs() < 1e-12);
    assert_eq!(report.populated_pairs(), 6);
    assert_eq!(report.recompute(), report.confidence);

    let mut reversed = programs;
    reversed.reverse();
    let permuted = Estimator::new(&embedder)
        .with_weights(weights)
        .estimate(&SampleSet::new("golden", "three programs", reversed))
        .unwrap();
    assert!((permuted.confidence - report.confidence).abs() < 1e-9);
}

fn unit() -> impl Strategy<Value = f64> {
    0.0f64..=1.0
}

fn simplex() -> impl Strategy<Value = SimilarityWeights> {
    (unit(), unit(), unit(), unit()).prop_filter_map("non-zero", |(a, b, c, d)| {
        let s = a + b + c + d;
        (s > 1e-6).then(|| {
            let (a, b, c) = (a / s, b / s, c / s);
            SimilarityWeights::new(a, b, c, (1.0 - a - b - c).max(0.0)).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn hybrid_is_monotone(
        base in (unit(), unit(), unit(), unit()),
        which in 0usize..4,
        bump in unit(),
        w in simplex(),
    ) {
        let low = ModalityScores::new(base.0, base.1, base.2, base.3);
        let mut raised = low.as_array();
        raised[which] = (raised[which] + bump).min(1.0);
        let high = ModalityScores::new(raised[0], raised[1], raised[2], raised[3]);
        prop_assert!(sim_hybrid(&high, &w).unwrap() >= sim_hybrid(&low, &w).unwrap());
    }

    #[test]
    fn text_matches_brute_force(
        a in proptest::collection::vec(0u8..4, 0..25),
        b in proptest::collection::vec(0u8..4, 0..25),
    ) {
        let a: Vec<String> = a.iter().map(|t| t.to_string()).collect();
        let b: Vec<String> = b.iter().map(|t| t.to_string()).collect();
        let ours = sim_text(&TokenSequence::new(a.clone()), &TokenSequence::new(b.clone()));
        prop_assert!((ours - brute_force_text(&a, &b)).abs() <= 1e-9);
    }
}
