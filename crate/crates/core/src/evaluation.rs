//! Ranking metrics over scored requirements: AUROC, AUCPR, confusion counts,
//! curves and the equally spaced threshold sweep.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

pub const DEFAULT_SWEEP_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: String,
    pub score: f64,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub programs_correct: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub programs_total: Option<usize>,
}

impl ScoredSample {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Self {
        ScoredSample {
            id: id.into(),
            score,
            label,
            programs_correct: None,
            programs_total: None,
        }
    }

    pub fn with_counts(mut self, correct: usize, total: usize) -> Self {
        debug_assert!(correct <= total);
        self.programs_correct = Some(correct);
        self.programs_total = Some(total);
        self
    }
}

/// Indices sorted by descending score; equal scores keep input order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Groups of equal score in descending order, as (positives, negatives).
fn tie_groups(scores: &[f64], positive: &[bool]) -> Vec<(u64, u64)> {
    let order = descending(scores);
    let mut groups: Vec<(u64, u64)> = Vec::new();
    let mut last: Option<f64> = None;
    for idx in order {
        if last.is_none_or(|s| s.total_cmp(&scores[idx]) != Ordering::Equal) {
            groups.push((0, 0));
            last = Some(scores[idx]);
        }
        let g = groups.last_mut().expect("group pushed above");
        if positive[idx] {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// AUROC as the Mann-Whitney statistic; a tied positive/negative pair counts
/// one half.
pub fn auroc_from_scores(scores: &[f64], positive: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), positive.len());
    let pos = positive.iter().filter(|&&p| p).count() as u64;
    let neg = positive.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    // twice the number of concordant pairs, kept integral until the end
    let mut doubled: u128 = 0;
    let mut negatives_below = neg;
    for (p, n) in tie_groups(scores, positive) {
        negatives_below -= n;
        doubled += 2 * u128::from(p) * u128::from(negatives_below) + u128::from(p) * u128::from(n);
    }
    Ok(doubled as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64)
}

fn split_scored(scored: &[ScoredSample]) -> (Vec<f64>, Vec<bool>) {
    scored.iter().map(|s| (s.score, s.label.is_passed())).unzip()
}

pub fn auroc(scored: &[ScoredSample]) -> Result<f64> {
    let (scores, positive) = split_scored(scored);
    auroc_from_scores(&scores, &positive)
}

/// Cumulative (true positives, false positives) after each distinct score,
/// from the highest score down.
fn cumulative_counts(scores: &[f64], positive: &[bool]) -> Vec<(u64, u64)> {
    let mut tp = 0;
    let mut fp = 0;
    tie_groups(scores, positive)
        .into_iter()
        .map(|(p, n)| {
            tp += p;
            fp += n;
            (tp, fp)
        })
        .collect()
}

/// Average precision: the sum over distinct score thresholds of precision
/// times the recall gained there. Tied scores enter together.
pub fn aucpr_from_scores(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let pos = positive.iter().filter(|&&p| p).count() as u64;
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut ap = 0.0;
    let mut prev_tp = 0;
    for (tp, fp) in cumulative_counts(scores, positive) {
        if tp > prev_tp {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += precision * (tp - prev_tp) as f64 / pos as f64;
        }
        prev_tp = tp;
    }
    Ok(ap)
}

pub fn aucpr(scored: &[ScoredSample]) -> Result<f64> {
    let (scores, positive) = split_scored(scored);
    aucpr_from_scores(&scores, &positive)
}

/// Trapezoidal area under the PR curve anchored at (recall 0, precision 1).
pub fn aucpr_trapezoid(scored: &[ScoredSample]) -> Result<f64> {
    let curve = pr_curve(scored)?;
    Ok(curve
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PrMode {
    #[default]
    AveragePrecision,
    Trapezoid,
}

impl std::str::FromStr for PrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ap" | "average-precision" => Ok(PrMode::AveragePrecision),
            "trapezoid" => Ok(PrMode::Trapezoid),
            other => Err(Error::InvalidConfig(format!("unknown PR mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

/// ROC points (FPR, TPR) at each distinct score, from (0, 0) to (1, 1).
pub fn roc_curve(scored: &[ScoredSample]) -> Result<Vec<CurvePoint>> {
    let (scores, positive) = split_scored(scored);
    let pos = positive.iter().filter(|&&p| p).count() as f64;
    let neg = positive.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClass);
    }
    let thresholds = distinct_descending(&scores);
    let mut points = vec![CurvePoint {
        x: 0.0,
        y: 0.0,
        threshold: f64::INFINITY,
    }];
    for ((tp, fp), t) in cumulative_counts(&scores, &positive).into_iter().zip(thresholds) {
        points.push(CurvePoint {
            x: fp as f64 / neg,
            y: tp as f64 / pos,
            threshold: t,
        });
    }
    Ok(points)
}

/// PR points (recall, precision) at each distinct score, preceded by (0, 1).
pub fn pr_curve(scored: &[ScoredSample]) -> Result<Vec<CurvePoint>> {
    let (scores, positive) = split_scored(scored);
    let pos = positive.iter().filter(|&&p| p).count() as f64;
    if pos == 0.0 {
        return Err(Error::NoPositives);
    }
    let thresholds = distinct_descending(&scores);
    let mut points = vec![CurvePoint {
        x: 0.0,
        y: 1.0,
        threshold: f64::INFINITY,
    }];
    for ((tp, fp), t) in cumulative_counts(&scores, &positive).into_iter().zip(thresholds) {
        points.push(CurvePoint {
            x: tp as f64 / pos,
            y: tp as f64 / (tp + fp) as f64,
            threshold: t,
        });
    }
    Ok(points)
}

fn distinct_descending(scores: &[f64]) -> Vec<f64> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
    sorted
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub shown_correct: usize,
    pub shown_erroneous: usize,
}

fn program_counts(s: &ScoredSample) -> Result<(usize, usize)> {
    match (s.programs_correct, s.programs_total) {
        (Some(c), Some(t)) if c <= t => Ok((c, t)),
        _ => Err(Error::MissingProgramCounts(s.id.clone())),
    }
}

/// Programs shown when every requirement scoring at least `threshold` is
/// displayed.
pub fn shown_at(scored: &[ScoredSample], threshold: f64) -> Result<SweepPoint> {
    let mut point = SweepPoint {
        threshold,
        shown_correct: 0,
        shown_erroneous: 0,
    };
    for s in scored {
        let (correct, total) = program_counts(s)?;
        if s.score >= threshold {
            point.shown_correct += correct;
            point.shown_erroneous += total - correct;
        }
    }
    Ok(point)
}

/// `points` equally spaced thresholds from the minimum to the maximum score.
/// The first point shows everything.
pub fn threshold_sweep(scored: &[ScoredSample], points: usize) -> Result<Vec<SweepPoint>> {
    if scored.is_empty() {
        return Err(Error::EmptyInput("scored samples"));
    }
    if points == 0 {
        return Err(Error::InvalidConfig("sweep needs at least one point".into()));
    }
    for s in scored {
        program_counts(s)?;
    }
    let min = scored.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
    let max = scored.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
    (0..points)
        .map(|k| {
            let t = if k + 1 == points && points > 1 {
                max
            } else if points == 1 {
                min
            } else {
                min + (max - min) * k as f64 / (points - 1) as f64
            };
            shown_at(scored, t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `None` when the ratio is 0/0.
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Predicts passed iff `score > threshold`.
pub fn confusion(scored: &[ScoredSample], threshold: f64) -> Confusion {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for s in scored {
        match (s.score > threshold, s.label.is_passed()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Confusion {
        tp,
        fp,
        tn,
        fn_,
        tpr: ratio(tp, tp + fn_),
        fpr: ratio(fp, fp + tn),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub samples: usize,
    pub passed: usize,
    pub auroc: f64,
    pub aucpr: f64,
    pub pr_mode: PrMode,
    /// The PR area under the mode not selected.
    pub aucpr_alternate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 4]>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
}

impl MetricsReport {
    pub fn compute(method: &str, scored: &[ScoredSample], pr_mode: PrMode, seed: u64) -> Result<Self> {
        let ap = aucpr(scored)?;
        let trapezoid = aucpr_trapezoid(scored)?;
        let (aucpr, aucpr_alternate) = match pr_mode {
            PrMode::AveragePrecision => (ap, trapezoid),
            PrMode::Trapezoid => (trapezoid, ap),
        };
        Ok(MetricsReport {
            method: method.to_string(),
            model: None,
            samples: scored.len(),
            passed: scored.iter().filter(|s| s.label.is_passed()).count(),
            auroc: auroc(scored)?,
            aucpr,
            pr_mode,
            aucpr_alternate,
            k: None,
            weights: None,
            seed,
            sweep: None,
        })
    }

    pub fn to_table(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("method", self.method.clone()),
            ("samples", format!("{} ({} passed)", self.samples, self.passed)),
            ("AUROC", format!("{:.4}", self.auroc)),
            ("AUCPR", format!("{:.4}", self.aucpr)),
            (
                match self.pr_mode {
                    PrMode::AveragePrecision => "AUCPR (trapezoid)",
                    PrMode::Trapezoid => "AUCPR (avg precision)",
                },
                format!("{:.4}", self.aucpr_alternate),
            ),
            ("seed", self.seed.to_string()),
        ];
        if let Some(model) = &self.model {
            rows.insert(1, ("model", model.clone()));
        }
        if let Some(k) = self.k {
            rows.push(("k", k.to_string()));
        }
        if let Some(w) = self.weights {
            rows.push(("weights", format!("{:.2} {:.2} {:.2} {:.2}", w[0], w[1], w[2], w[3])));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        if let Some(sweep) = &self.sweep {
            out.push_str(&sweep_table(sweep));
        }
        out
    }
}

pub fn sweep_table(sweep: &[SweepPoint]) -> String {
    let mut out = format!("{:>10}  {:>13}  {:>15}\n", "threshold", "shown_correct", "shown_erroneous");
    for p in sweep {
        let _ = writeln!(
            out,
            "{:>10.4}  {:>13}  {:>15}",
            p.threshold, p.shown_correct, p.shown_erroneous
        );
    }
    out
}

pub fn curve_csv(points: &[CurvePoint], x: &str, y: &str) -> String {
    let mut out = format!("{x},{y},threshold\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, p.threshold);
    }
    out
}

pub fn sweep_csv(sweep: &[SweepPoint]) -> String {
    let mut out = String::from("threshold,shown_correct,shown_erroneous\n");
    for p in sweep {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.shown_correct, p.shown_erroneous);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use Label::{Failed as F, Passed as P};

    fn scored(scores: &[f64], labels: &[Label]) -> Vec<ScoredSample> {
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&s, &l))| ScoredSample::new(i.to_string(), s, l))
            .collect()
    }

    /// Every (passed, failed) pair: 1 if ordered correctly, 1/2 if tied.
    fn pairwise_auroc(data: &[ScoredSample]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for p in data.iter().filter(|s| s.label == P) {
            for n in data.iter().filter(|s| s.label == F) {
                pairs += 1.0;
                if p.score > n.score {
                    total += 1.0;
                } else if p.score == n.score {
                    total += 0.5;
                }
            }
        }
        total / pairs
    }

    /// Precision and recall at every distinct threshold `score >= t`.
    fn enumerated_ap(data: &[ScoredSample]) -> f64 {
        let positives = data.iter().filter(|s| s.label == P).count() as f64;
        let mut thresholds: Vec<f64> = data.iter().map(|s| s.score).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for t in thresholds {
            let shown: Vec<_> = data.iter().filter(|s| s.score >= t).collect();
            let tp = shown.iter().filter(|s| s.label == P).count() as f64;
            let recall = tp / positives;
            let precision = tp / shown.len() as f64;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn auroc_examples() {
        let s = [0.9, 0.8, 0.3, 0.2];
        assert_eq!(auroc(&scored(&s, &[P, P, F, F])).unwrap(), 1.0);
        assert_eq!(auroc(&scored(&s, &[F, P, F, P])).unwrap(), 0.25);
        assert_eq!(auroc(&scored(&[0.5; 4], &[F, P, F, P])).unwrap(), 0.5);
        assert!(matches!(auroc(&scored(&s, &[P; 4])), Err(Error::SingleClass)));
    }

    #[test]
    fn aucpr_examples() {
        let s = [0.9, 0.8, 0.3, 0.2];
        assert_eq!(aucpr(&scored(&s, &[P, P, F, F])).unwrap(), 1.0);
        assert_eq!(aucpr(&scored(&s, &[P; 4])).unwrap(), 1.0);
        let data = scored(&[0.9, 0.8, 0.3], &[F, P, P]);
        let ap = aucpr(&data).unwrap();
        assert_abs_diff_eq!(ap, enumerated_ap(&data), epsilon = 1e-12);
        // precision 1/2 at recall 1/2, 2/3 at recall 1
        assert_abs_diff_eq!(ap, 0.5 * 0.5 + 0.5 * 2.0 / 3.0, epsilon = 1e-12);
        assert!(matches!(aucpr(&scored(&s, &[F; 4])), Err(Error::NoPositives)));
    }

    #[test]
    fn trapezoid_on_perfect_ranking() {
        let data = scored(&[0.9, 0.8, 0.3, 0.2], &[P, P, F, F]);
        assert_abs_diff_eq!(aucpr_trapezoid(&data).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn roc_curve_endpoints() {
        let data = scored(&[0.9, 0.8, 0.3, 0.2], &[F, P, F, P]);
        let curve = roc_curve(&data).unwrap();
        assert_eq!((curve[0].x, curve[0].y), (0.0, 0.0));
        let last = curve.last().unwrap();
        assert_eq!((last.x, last.y), (1.0, 1.0));
        assert_eq!(curve.len(), 5);
    }

    #[test]
    fn sweep_single_sample() {
        let data = vec![ScoredSample::new("a", 0.5, P).with_counts(3, 5)];
        let below = shown_at(&data, 0.4).unwrap();
        assert_eq!((below.shown_correct, below.shown_erroneous), (3, 2));
        let above = shown_at(&data, 0.6).unwrap();
        assert_eq!((above.shown_correct, above.shown_erroneous), (0, 0));
    }

    #[test]
    fn sweep_straddling_samples() {
        let data = vec![
            ScoredSample::new("a", 0.2, F).with_counts(1, 4),
            ScoredSample::new("b", 0.8, P).with_counts(3, 4),
        ];
        let sweep = threshold_sweep(&data, 100).unwrap();
        assert_eq!(sweep.len(), 100);
        assert_eq!(sweep[0].threshold, 0.2);
        assert_eq!(sweep[99].threshold, 0.8);
        assert_eq!((sweep[0].shown_correct, sweep[0].shown_erroneous), (4, 4));
        for p in &sweep[1..] {
            assert_eq!((p.shown_correct, p.shown_erroneous), (3, 1));
        }
    }

    #[test]
    fn sweep_requires_counts() {
        let data = vec![ScoredSample::new("a", 0.2, F)];
        assert!(matches!(
            threshold_sweep(&data, 10),
            Err(Error::MissingProgramCounts(_))
        ));
    }

    #[test]
    fn confusion_examples() {
        let perfect = scored(&[0.9, 0.8, 0.3, 0.2], &[P, P, F, F]);
        let c = confusion(&perfect, 0.5);
        assert_eq!((c.tpr, c.fpr), (Some(1.0), Some(0.0)));

        let c = confusion(&perfect, 1.0);
        assert_eq!((c.tp, c.fp), (0, 0));
        assert_eq!(c.precision, None);

        let data = scored(&[0.9, 0.8, 0.7, 0.1], &[P, P, F, F]);
        let c = confusion(&data, 0.5);
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (2, 1, 1, 0));
        assert_abs_diff_eq!(c.precision.unwrap(), 2.0 / 3.0);
        assert_eq!(c.recall, Some(1.0));
    }

    #[test]
    fn report_table_lists_metrics() {
        let data = scored(&[0.9, 0.8, 0.3, 0.2], &[P, P, F, F]);
        let report = MetricsReport::compute("honest", &data, PrMode::AveragePrecision, 42).unwrap();
        let table = report.to_table();
        assert!(table.contains("AUROC"));
        assert!(table.contains("1.0000"));
    }

    fn dataset() -> impl Strategy<Value = Vec<ScoredSample>> {
        proptest::collection::vec((0u8..12, any::<bool>()), 2..200).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (s, p))| {
                    ScoredSample::new(i.to_string(), f64::from(s) / 11.0, Label::from_passed(p))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn auroc_matches_pairwise(data in dataset()) {
            prop_assume!(data.iter().any(|s| s.label == P) && data.iter().any(|s| s.label == F));
            let a = auroc(&data).unwrap();
            prop_assert!((a - pairwise_auroc(&data)).abs() <= 1e-12);
            let flipped: Vec<_> = data
                .iter()
                .map(|s| ScoredSample::new(s.id.clone(), s.score, Label::from_passed(!s.label.is_passed())))
                .collect();
            prop_assert!((auroc(&flipped).unwrap() - (1.0 - a)).abs() <= 1e-12);
            let transformed: Vec<_> = data
                .iter()
                .map(|s| ScoredSample::new(s.id.clone(), (3.0 * s.score).exp(), s.label))
                .collect();
            prop_assert!((auroc(&transformed).unwrap() - a).abs() <= 1e-12);
        }

        #[test]
        fn aucpr_matches_enumeration(data in dataset()) {
            prop_assume!(data.iter().any(|s| s.label == P));
            prop_assert!((aucpr(&data).unwrap() - enumerated_ap(&data)).abs() <= 1e-9);
        }

        #[test]
        fn sweep_is_monotone(
            rows in proptest::collection::vec((0.0f64..1.0, 0usize..6, 0usize..6), 1..40)
        ) {
            let data: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, a, b))| ScoredSample::new(i.to_string(), s, F).with_counts(a.min(b), a.max(b)))
                .collect();
            let sweep = threshold_sweep(&data, 100).unwrap();
            for w in sweep.windows(2) {
                prop_assert!(w[1].shown_correct <= w[0].shown_correct);
                prop_assert!(w[1].shown_erroneous <= w[0].shown_erroneous);
            }
        }
    }
}
