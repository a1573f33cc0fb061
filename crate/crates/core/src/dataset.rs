//! JSON Lines benchmark files and pre-sampled program archives.
//!
//! Paths ending in `.gz` are read and written gzip-compressed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::program::{validate_token_probs, Language, Origin, Program, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Passed,
    Failed,
}

impl Label {
    pub fn is_passed(self) -> bool {
        self == Label::Passed
    }

    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Label::Passed
        } else {
            Label::Failed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSample {
    pub id: String,
    pub language: Language,
    pub requirement: String,
    pub labels: BTreeMap<String, Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl BenchmarkSample {
    pub fn label_for(&self, model: &str) -> Option<Label> {
        self.labels.get(model).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivedProgram {
    pub source: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
    /// Test verdict of this program when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleArchiveEntry {
    pub id: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirement: Option<String>,
    pub programs: Vec<ArchivedProgram>,
}

impl SampleArchiveEntry {
    pub fn programs(&self, language: Language) -> Vec<Program> {
        self.programs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Program::new(p.source.clone(), language).with_origin(Origin {
                    sample_index: i,
                    temperature: p.temperature,
                    token_probs: p.token_probs.clone(),
                })
            })
            .collect()
    }

    /// Builds the sample set, taking language and requirement from the entry
    /// itself when present and from `fallback` otherwise.
    pub fn to_sample_set(&self, fallback: Option<&BenchmarkSample>) -> Result<SampleSet> {
        let language = self
            .language
            .or(fallback.map(|b| b.language))
            .ok_or_else(|| Error::JoinError {
                id: self.id.clone(),
                model: Some(self.model.clone()),
            })?;
        let requirement = self
            .requirement
            .clone()
            .or_else(|| fallback.map(|b| b.requirement.clone()))
            .unwrap_or_default();
        Ok(SampleSet::new(self.id.clone(), requirement, self.programs(language)))
    }

    /// Number of programs with a known passing verdict, and the total count,
    /// when every program carries a verdict.
    pub fn program_counts(&self) -> Option<(usize, usize)> {
        let verdicts: Option<Vec<Label>> = self.programs.iter().map(|p| p.verdict).collect();
        let verdicts = verdicts?;
        let correct = verdicts.iter().filter(|v| v.is_passed()).count();
        Some((correct, verdicts.len()))
    }
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gzip(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e| Error::io(path, e);
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        if is_gzip(path) {
            let mut gz = GzEncoder::new(&mut out, Compression::default());
            write(&mut gz).map_err(io_err)?;
            gz.finish().map_err(io_err)?;
        } else {
            write(&mut out).map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut lines = Vec::with_capacity(items.len());
    for item in items {
        lines.push(serde_json::to_string(item)?);
    }
    write_atomic(path, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// Parses every non-blank line into `T`, warning once per unknown field name.
fn read_jsonl<T: DeserializeOwned>(path: &Path, known: &[&str]) -> Result<Vec<(usize, T, Value)>> {
    let mut out = Vec::new();
    let mut warned = HashSet::new();
    for (idx, line) in open_reader(path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let Some(object) = value.as_object() else {
            return Err(Error::MalformedLine {
                line: line_no,
                message: "expected a JSON object".into(),
            });
        };
        for key in object.keys() {
            if !known.contains(&key.as_str()) && warned.insert(key.clone()) {
                log::warn!("{}:{line_no}: ignoring unknown field `{key}`", path.display());
            }
        }
        let parsed = T::deserialize(&value).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, parsed, value));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawBenchmarkSample {
    id: String,
    language: String,
    requirement: String,
    labels: BTreeMap<String, Label>,
    #[serde(default)]
    split: Option<Split>,
}

const BENCHMARK_FIELDS: &[&str] = &["id", "language", "requirement", "labels", "split"];
const ARCHIVE_FIELDS: &[&str] = &["id", "model", "language", "requirement", "programs"];

pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<BenchmarkSample>> {
    let rows = read_jsonl::<RawBenchmarkSample>(path.as_ref(), BENCHMARK_FIELDS)?;
    let mut seen = HashSet::new();
    let mut samples = Vec::with_capacity(rows.len());
    for (line, raw, _) in rows {
        let language = raw
            .language
            .parse::<Language>()
            .map_err(|_| Error::UnknownLanguage {
                line,
                language: raw.language.clone(),
            })?;
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId { id: raw.id, line });
        }
        samples.push(BenchmarkSample {
            id: raw.id,
            language,
            requirement: raw.requirement,
            labels: raw.labels,
            split: raw.split,
        });
    }
    Ok(samples)
}

pub fn save_benchmark(path: impl AsRef<Path>, samples: &[BenchmarkSample]) -> Result<()> {
    write_jsonl(path.as_ref(), samples)
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<SampleArchiveEntry>> {
    let rows = read_jsonl::<SampleArchiveEntry>(path.as_ref(), ARCHIVE_FIELDS)?;
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (line, entry, _) in rows {
        let malformed = |message: String| Error::MalformedLine { line, message };
        if entry.programs.is_empty() {
            return Err(malformed("programs list is empty".into()));
        }
        for (i, p) in entry.programs.iter().enumerate() {
            if !(0.0..=2.0).contains(&p.temperature) {
                return Err(malformed(format!(
                    "program {i}: temperature {} is outside [0, 2]",
                    p.temperature
                )));
            }
            if let Some(probs) = &p.token_probs {
                validate_token_probs(probs).map_err(|e| malformed(format!("program {i}: {e}")))?;
            }
        }
        if !seen.insert((entry.id.clone(), entry.model.clone())) {
            return Err(Error::DuplicateId {
                id: format!("{}/{}", entry.id, entry.model),
                line,
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn save_samples(path: impl AsRef<Path>, entries: &[SampleArchiveEntry]) -> Result<()> {
    write_jsonl(path.as_ref(), entries)
}

/// Deterministic shuffle by `seed`, then split at `floor(ratio * n)`. Returned
/// samples have their `split` field set accordingly.
pub fn split_benchmark(
    samples: &[BenchmarkSample],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<BenchmarkSample>, Vec<BenchmarkSample>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("split ratio {ratio} is outside (0, 1)")));
    }
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: samples.len(),
        });
    }
    let mut shuffled = samples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (ratio * shuffled.len() as f64).floor() as usize;
    let mut test = shuffled.split_off(cut);
    for s in &mut shuffled {
        s.split = Some(Split::Train);
    }
    for s in &mut test {
        s.split = Some(Split::Test);
    }
    Ok((shuffled, test))
}

/// Pairs each archive entry (optionally restricted to one model) with its
/// benchmark sample. An entry without a benchmark sample is a `JoinError`.
pub fn join_archive<'a>(
    benchmark: &'a [BenchmarkSample],
    archive: &'a [SampleArchiveEntry],
    model: Option<&str>,
) -> Result<Vec<(&'a BenchmarkSample, &'a SampleArchiveEntry)>> {
    let by_id: HashMap<&str, &BenchmarkSample> =
        benchmark.iter().map(|b| (b.id.as_str(), b)).collect();
    let mut joined = Vec::new();
    for entry in archive {
        if model.is_some_and(|m| m != entry.model) {
            continue;
        }
        let sample = by_id.get(entry.id.as_str()).ok_or_else(|| Error::JoinError {
            id: entry.id.clone(),
            model: Some(entry.model.clone()),
        })?;
        joined.push((*sample, entry));
    }
    Ok(joined)
}
