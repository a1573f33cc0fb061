//! Seeded synthetic programs and labeled datasets for offline experiments.
//!
//! A "passed" requirement gets one seed program plus light mutations of it
//! (one identifier renamed, one pair of adjacent statements swapped); a
//! "failed" requirement gets unrelated programs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ArchivedProgram, BenchmarkSample, Label, SampleArchiveEntry, Split};
use crate::program::{Language, Program};
use crate::similarity::ModalityScores;

pub const SYNTHETIC_MODEL: &str = "synthetic";

const NAMES: &[&str] = &[
    "total", "count", "value", "result", "index", "limit", "acc", "step", "width", "height",
    "offset", "score", "left", "right", "base", "delta", "size", "level", "mark", "rate",
    "cursor", "flag", "depth", "weight", "price", "ratio", "span", "head", "tail", "amount",
];

const FUNCTIONS: &[&str] = &[
    "compute", "solve", "process", "evaluate", "transform", "measure", "combine", "reduce",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Add,
    Scale,
    Branch,
    Loop,
    Call,
    While,
    Sub,
}

const KINDS: [Kind; 7] = [
    Kind::Add,
    Kind::Scale,
    Kind::Branch,
    Kind::Loop,
    Kind::Call,
    Kind::While,
    Kind::Sub,
];

#[derive(Debug, Clone)]
struct Stmt {
    kind: Kind,
    target: String,
    a: String,
    b: String,
    lit: i64,
}

/// A small straight-line function in structured form so it can be mutated
/// before rendering.
#[derive(Debug, Clone)]
pub struct SyntheticProgram {
    language: Language,
    function: String,
    params: [String; 2],
    body: Vec<Stmt>,
    ret: String,
}

impl SyntheticProgram {
    pub fn random(language: Language, rng: &mut impl Rng) -> Self {
        let mut names: Vec<&str> = NAMES.to_vec();
        names.shuffle(rng);
        let mut fresh = names.into_iter().map(str::to_string);
        let params = [fresh.next().unwrap(), fresh.next().unwrap()];
        let mut defined: Vec<String> = params.to_vec();
        let len = rng.gen_range(4..=8);
        let mut body = Vec::with_capacity(len);
        for _ in 0..len {
            let kind = *KINDS.choose(rng).unwrap();
            let a = defined.choose(rng).unwrap().clone();
            let b = defined.choose(rng).unwrap().clone();
            let target = match kind {
                Kind::Loop | Kind::While => a.clone(),
                _ if rng.gen_bool(0.6) => match fresh.next() {
                    Some(name) => name,
                    None => defined.choose(rng).unwrap().clone(),
                },
                _ => defined.choose(rng).unwrap().clone(),
            };
            if !defined.contains(&target) {
                defined.push(target.clone());
            }
            body.push(Stmt {
                kind,
                target,
                a,
                b,
                lit: rng.gen_range(1..10),
            });
        }
        SyntheticProgram {
            language,
            function: FUNCTIONS.choose(rng).unwrap().to_string(),
            params,
            ret: defined.last().unwrap().clone(),
            body,
        }
    }

    fn identifiers(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.params.to_vec();
        for s in &self.body {
            for v in [&s.target, &s.a, &s.b] {
                if !ids.contains(v) {
                    ids.push(v.clone());
                }
            }
        }
        ids
    }

    /// Renames one identifier everywhere and swaps one pair of adjacent
    /// statements.
    pub fn mutate(&self, rng: &mut impl Rng) -> Self {
        let mut out = self.clone();
        let ids = self.identifiers();
        let old = ids.choose(rng).unwrap().clone();
        let unused: Vec<&str> = NAMES.iter().copied().filter(|n| !ids.iter().any(|i| i == n)).collect();
        let new = match unused.choose(rng) {
            Some(n) => n.to_string(),
            None => format!("{old}2"),
        };
        let rename = |v: &mut String| {
            if *v == old {
                *v = new.clone();
            }
        };
        out.params.iter_mut().for_each(rename);
        for s in &mut out.body {
            rename(&mut s.target);
            rename(&mut s.a);
            rename(&mut s.b);
        }
        rename(&mut out.ret);
        if out.body.len() >= 2 {
            let i = rng.gen_range(0..out.body.len() - 1);
            out.body.swap(i, i + 1);
        }
        out
    }

    pub fn render(&self) -> String {
        match self.language {
            Language::Python => self.render_python(),
            Language::Java => self.render_java(),
        }
    }

    pub fn to_program(&self) -> Program {
        Program::new(self.render(), self.language)
    }

    fn render_python(&self) -> String {
        let mut out = format!("def {}({}, {}):\n", self.function, self.params[0], self.params[1]);
        for s in &self.body {
            let (t, a, b, k) = (&s.target, &s.a, &s.b, s.lit);
            let line = match s.kind {
                Kind::Add => format!("    {t} = {a} + {b}\n"),
                Kind::Sub => format!("    {t} = {a} - {b} * {k}\n"),
                Kind::Scale => format!("    {t} = {a} * {k}\n"),
                Kind::Branch => format!(
                    "    if {a} > {k}:\n        {t} = {a} - {b}\n    else:\n        {t} = {b} + {k}\n"
                ),
                Kind::Loop => format!("    for i in range({k}):\n        {t} = {t} + i * {b}\n"),
                Kind::Call => format!("    {t} = max({a}, {b}, {k})\n"),
                Kind::While => format!("    while {t} < {k}:\n        {t} = {t} + {b} + 1\n"),
            };
            out.push_str(&line);
        }
        out.push_str(&format!("    return {}\n", self.ret));
        out
    }

    fn render_java(&self) -> String {
        let class = {
            let mut c = self.function.clone();
            c[..1].make_ascii_uppercase();
            c
        };
        let mut out = format!(
            "public class {class} {{\n    static int {}(int {}, int {}) {{\n",
            self.function, self.params[0], self.params[1]
        );
        let mut declared: Vec<&str> = self.params.iter().map(String::as_str).collect();
        // hoist declarations so any statement order still compiles
        let mut locals: Vec<&str> = Vec::new();
        for s in &self.body {
            for v in [&s.target, &s.a, &s.b] {
                if !declared.contains(&v.as_str()) {
                    declared.push(v);
                    locals.push(v);
                }
            }
        }
        for v in locals {
            out.push_str(&format!("        int {v} = 0;\n"));
        }
        for s in &self.body {
            let (t, a, b, k) = (&s.target, &s.a, &s.b, s.lit);
            let line = match s.kind {
                Kind::Add => format!("        {t} = {a} + {b};\n"),
                Kind::Sub => format!("        {t} = {a} - {b} * {k};\n"),
                Kind::Scale => format!("        {t} = {a} * {k};\n"),
                Kind::Branch => format!(
                    "        if ({a} > {k}) {{\n            {t} = {a} - {b};\n        }} else {{\n            {t} = {b} + {k};\n        }}\n"
                ),
                Kind::Loop => format!(
                    "        for (int i = 0; i < {k}; i++) {{\n            {t} = {t} + i * {b};\n        }}\n"
                ),
                Kind::Call => format!("        {t} = Math.max({a}, Math.max({b}, {k}));\n"),
                Kind::While => format!("        while ({t} < {k}) {{\n            {t} = {t} + {b} + 1;\n        }}\n"),
            };
            out.push_str(&line);
        }
        out.push_str(&format!("        return {};\n    }}\n}}\n", self.ret));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub passed: usize,
    pub failed: usize,
    /// Programs per requirement.
    pub n: usize,
    pub language: Language,
    pub seed: u64,
    /// Flat per-token probability attached to every program.
    pub token_prob: f64,
    /// Chance that a program of a passed / failed requirement is correct.
    pub passed_correct_rate: f64,
    pub failed_correct_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            passed: 40,
            failed: 40,
            n: 20,
            language: Language::Python,
            seed: 42,
            token_prob: 0.5,
            passed_correct_rate: 0.8,
            failed_correct_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub benchmark: Vec<BenchmarkSample>,
    pub archive: Vec<SampleArchiveEntry>,
}

pub fn synthetic_dataset(config: &SyntheticConfig) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut benchmark = Vec::new();
    let mut archive = Vec::new();
    let labels = std::iter::repeat_n(Label::Passed, config.passed)
        .chain(std::iter::repeat_n(Label::Failed, config.failed));
    for (i, label) in labels.enumerate() {
        let id = format!("syn-{i:04}");
        let programs: Vec<SyntheticProgram> = match label {
            Label::Passed => {
                let seed = SyntheticProgram::random(config.language, &mut rng);
                let mut set = vec![seed.clone()];
                for _ in 1..config.n {
                    set.push(seed.mutate(&mut rng));
                }
                set
            }
            Label::Failed => (0..config.n)
                .map(|_| SyntheticProgram::random(config.language, &mut rng))
                .collect(),
        };
        let correct_rate = match label {
            Label::Passed => config.passed_correct_rate,
            Label::Failed => config.failed_correct_rate,
        };
        let programs = programs
            .iter()
            .map(|p| {
                let source = p.render();
                let tokens = crate::program::tokenize_source(&source, config.language).len().max(1);
                ArchivedProgram {
                    source,
                    temperature: 1.0,
                    token_probs: Some(vec![config.token_prob; tokens]),
                    verdict: Some(Label::from_passed(rng.gen_bool(correct_rate))),
                }
            })
            .collect();
        benchmark.push(BenchmarkSample {
            id: id.clone(),
            language: config.language,
            requirement: format!("Synthetic requirement {i}"),
            labels: BTreeMap::from([(SYNTHETIC_MODEL.to_string(), label)]),
            split: Some(if i % 2 == 0 { Split::Train } else { Split::Test }),
        });
        archive.push(SampleArchiveEntry {
            id,
            model: SYNTHETIC_MODEL.to_string(),
            language: Some(config.language),
            requirement: None,
            programs,
        });
    }
    SyntheticDataset { benchmark, archive }
}

/// Per-requirement modality means where only `modality` (0 text, 1 syntax,
/// 2 dataflow, 3 embedding) separates the classes: passed values lie in
/// [0.55, 0.65], failed in [0.35, 0.45], the rest are uniform noise. One
/// anchor pair (separating modality at the class edges, noise at 0 for the
/// passed and 1 for the failed item) is discordant for every weighting that
/// puts 0.9 or less on `modality`.
pub fn modality_dataset(modality: usize, per_class: usize, seed: u64) -> Vec<(ModalityScores, Label)> {
    assert!(modality < 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let make = |signal: f64, noise: &mut dyn FnMut() -> f64| {
        let mut values = [0.0; 4];
        for (m, v) in values.iter_mut().enumerate() {
            *v = if m == modality { signal } else { noise() };
        }
        ModalityScores::new(values[0], values[1], values[2], values[3])
    };
    let mut data = Vec::with_capacity(2 * per_class + 2);
    data.push((make(0.55, &mut || 0.0), Label::Passed));
    data.push((make(0.45, &mut || 1.0), Label::Failed));
    for _ in 0..per_class {
        let signal = rng.gen_range(0.55..=0.65);
        let scores = make(signal, &mut || rng.gen_range(0.0..=1.0));
        data.push((scores, Label::Passed));
        let signal = rng.gen_range(0.35..=0.45);
        let scores = make(signal, &mut || rng.gen_range(0.0..=1.0));
        data.push((scores, Label::Failed));
    }
    data
}

/// Program pairs in one language: half near-duplicates, half unrelated.
pub fn random_pairs(count: usize, language: Language, seed: u64) -> Vec<(Program, Program)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = SyntheticProgram::random(language, &mut rng);
            let b = if rng.gen_bool(0.5) {
                a.mutate(&mut rng)
            } else {
                SyntheticProgram::random(language, &mut rng)
            };
            (a.to_program(), b.to_program())
        })
        .collect()
}
