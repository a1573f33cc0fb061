//! Show-or-refuse decision at a confidence threshold.

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceReport;
use crate::error::{Error, Result};
use crate::program::{Program, SampleSet};

pub const DEFAULT_REFUSAL: &str = "Sorry, I cannot solve this requirement.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Show,
    Refuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub requirement_id: String,
    pub verdict: Verdict,
    pub confidence: f64,
    pub threshold: f64,
    pub programs: Option<Vec<Program>>,
    pub message: Option<String>,
}

impl GateDecision {
    pub fn is_show(&self) -> bool {
        self.verdict == Verdict::Show
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub threshold: f64,
    pub refusal_message: String,
    /// Cap on the number of programs shown; `None` shows all of them.
    pub top: Option<usize>,
}

impl Gate {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {threshold} is outside [0, 1]"
            )));
        }
        Ok(Gate {
            threshold,
            refusal_message: DEFAULT_REFUSAL.to_string(),
            top: None,
        })
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Result<Self> {
        let message = message.into();
        if message.is_empty() {
            return Err(Error::InvalidConfig("refusal message is empty".into()));
        }
        self.refusal_message = message;
        Ok(self)
    }

    pub fn with_top(mut self, top: Option<usize>) -> Self {
        self.top = top.filter(|&t| t > 0);
        self
    }

    pub fn decide(&self, report: &ConfidenceReport, samples: &SampleSet) -> Result<GateDecision> {
        if report.requirement_id != samples.requirement_id {
            return Err(Error::IdMismatch {
                report: report.requirement_id.clone(),
                samples: samples.requirement_id.clone(),
            });
        }
        let show = report.confidence > self.threshold;
        let (verdict, programs, message) = if show {
            let take = self.top.unwrap_or(samples.programs.len());
            let programs = samples.programs.iter().take(take).cloned().collect();
            (Verdict::Show, Some(programs), None)
        } else {
            (Verdict::Refuse, None, Some(self.refusal_message.clone()))
        };
        Ok(GateDecision {
            requirement_id: report.requirement_id.clone(),
            verdict,
            confidence: report.confidence,
            threshold: self.threshold,
            programs,
            message,
        })
    }
}

pub fn decide(report: &ConfidenceReport, samples: &SampleSet, threshold: f64) -> Result<GateDecision> {
    Gate::new(threshold)?.decide(report, samples)
}
