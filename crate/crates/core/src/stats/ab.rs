//! Per-word experimental-vs-control comparison over an event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::hypothesis::{ks_test_one_sided_two_sample, welch_t_test_one_sided};
use super::{admit, AnalysisParams, ResponseVector, StatsError, TestResult};
use crate::ids::{LearnerId, WordId};
use crate::learner::Dimension;
use crate::store::{Event, EventBody};
use crate::tutor::ExperimentAssignment;

/// Responses at or above this score count as correct.
const CORRECT_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "reason", content = "admitted")]
pub enum SkipReason {
    /// No group learns the word, or every assessing group learns it.
    NoContrast,
    InsufficientControl(usize),
    InsufficientExperimental(usize),
    TooFewForTTest,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::NoContrast => f.write_str("no control/experimental contrast"),
            SkipReason::InsufficientControl(n) => write!(f, "insufficient control data ({n})"),
            SkipReason::InsufficientExperimental(n) => {
                write!(f, "insufficient experimental data ({n})")
            }
            SkipReason::TooFewForTTest => f.write_str("fewer than 2 learners per group"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum WordOutcome {
    #[serde(rename_all = "camelCase")]
    Analyzed {
        control_mean: f64,
        experimental_mean: f64,
        t_test: TestResult,
        ks_test: TestResult,
        /// Both groups had zero variance; `t_test` holds the fallback result.
        degenerate_variance: bool,
    },
    Skipped {
        reason: SkipReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WordReport {
    pub word_id: WordId,
    /// Learners whose response vector passed the minimum-responses filter.
    pub n_control: usize,
    pub n_experimental: usize,
    pub outcome: WordOutcome,
}

impl WordReport {
    pub fn difference(&self) -> Option<f64> {
        match &self.outcome {
            WordOutcome::Analyzed {
                control_mean,
                experimental_mean,
                ..
            } => Some(experimental_mean - control_mean),
            WordOutcome::Skipped { .. } => None,
        }
    }

    pub fn t_test(&self) -> Option<&TestResult> {
        match &self.outcome {
            WordOutcome::Analyzed { t_test, .. } => Some(t_test),
            WordOutcome::Skipped { .. } => None,
        }
    }

    pub fn ks_test(&self) -> Option<&TestResult> {
        match &self.outcome {
            WordOutcome::Analyzed { ks_test, .. } => Some(ks_test),
            WordOutcome::Skipped { .. } => None,
        }
    }

    pub fn is_analyzed(&self) -> bool {
        matches!(self.outcome, WordOutcome::Analyzed { .. })
    }
}

/// Final group assignments recorded in a log.
pub fn assignments_from_events(events: &[Event]) -> Vec<ExperimentAssignment> {
    let mut groups: BTreeMap<_, ExperimentAssignment> = BTreeMap::new();
    for event in events {
        match &event.body {
            EventBody::GroupAssignment(a) => {
                let g = groups
                    .entry(a.group_id.clone())
                    .or_insert_with(|| ExperimentAssignment {
                        group_id: a.group_id.clone(),
                        member_learner_ids: BTreeSet::new(),
                        learnable_word_set: BTreeSet::new(),
                        assessable_word_set: BTreeSet::new(),
                    });
                g.member_learner_ids.extend(a.learner_ids.iter().cloned());
                g.learnable_word_set = a.learnable_word_set.clone();
                g.assessable_word_set = a.assessable_word_set.clone();
            }
            EventBody::GroupRemoval(r) => {
                if let Some(g) = groups.get_mut(&r.group_id) {
                    g.member_learner_ids.remove(&r.learner_id);
                }
            }
            _ => {}
        }
    }
    groups.into_values().collect()
}

/// Chronological response vectors per (learner, word) for one dimension.
pub fn response_vectors(
    events: &[Event],
    dim: Dimension,
) -> BTreeMap<(LearnerId, WordId), ResponseVector> {
    let mut out: BTreeMap<(LearnerId, WordId), ResponseVector> = BTreeMap::new();
    for event in events {
        if let EventBody::AssessmentResponse(r) = &event.body {
            if r.dimension != dim {
                continue;
            }
            out.entry((r.learner_id.clone(), r.word_id.clone()))
                .or_insert_with(|| ResponseVector {
                    learner_id: r.learner_id.clone(),
                    word_id: r.word_id.clone(),
                    bits: Vec::new(),
                })
                .bits
                .push(r.s >= CORRECT_CUTOFF);
        }
    }
    out
}

/// For each word assessable by some group, compares learners of groups that
/// may learn it (experimental) against those that may only be assessed on
/// it (control). Analyzed words come first, ordered by ascending
/// experimental-minus-control difference; skipped words follow by id.
pub fn per_word_ab_report(
    events: &[Event],
    assignments: &[ExperimentAssignment],
    params: &AnalysisParams,
    dim: Dimension,
) -> Result<Vec<WordReport>, StatsError> {
    params.validate()?;
    let vectors = response_vectors(events, dim);
    let words: BTreeSet<&WordId> = assignments
        .iter()
        .flat_map(|a| a.assessable_word_set.iter())
        .collect();

    let mut reports = Vec::with_capacity(words.len());
    for word in words {
        let mut control = Vec::new();
        let mut experimental = Vec::new();
        let mut has_control = false;
        let mut has_experimental = false;
        for a in assignments {
            if !a.assessable_word_set.contains(word) {
                continue;
            }
            let learnable = a.learnable_word_set.contains(word);
            let (bucket, flag) = if learnable {
                (&mut experimental, &mut has_experimental)
            } else {
                (&mut control, &mut has_control)
            };
            *flag = true;
            for learner in &a.member_learner_ids {
                if let Some(v) = vectors.get(&(learner.clone(), word.clone())) {
                    bucket.push(v.clone());
                }
            }
        }
        let surviving = |vs: &[ResponseVector]| {
            vs.iter()
                .filter(|v| v.bits.len() >= params.tau_min_responses)
                .count()
        };
        let n_control = surviving(&control);
        let n_experimental = surviving(&experimental);
        let skipped = |reason| WordReport {
            word_id: word.clone(),
            n_control,
            n_experimental,
            outcome: WordOutcome::Skipped { reason },
        };
        if !has_control || !has_experimental {
            reports.push(skipped(SkipReason::NoContrast));
            continue;
        }
        let g1 = match admit("control", &control, params) {
            Ok(g) => g,
            Err(StatsError::InsufficientData(n)) => {
                reports.push(skipped(SkipReason::InsufficientControl(n)));
                continue;
            }
            Err(e) => return Err(e),
        };
        let g2 = match admit("experimental", &experimental, params) {
            Ok(g) => g,
            Err(StatsError::InsufficientData(n)) => {
                reports.push(skipped(SkipReason::InsufficientExperimental(n)));
                continue;
            }
            Err(e) => return Err(e),
        };
        let level = params.significance_level;
        let (t_test, degenerate_variance) = match welch_t_test_one_sided(&g1, &g2, level) {
            Ok(r) => (r, false),
            Err(StatsError::DegenerateVariance { fallback }) => (fallback, true),
            Err(StatsError::TooFewSamples { .. }) => {
                reports.push(skipped(SkipReason::TooFewForTTest));
                continue;
            }
            Err(e) => return Err(e),
        };
        let ks_test = ks_test_one_sided_two_sample(&g1, &g2, level)?;
        reports.push(WordReport {
            word_id: word.clone(),
            n_control,
            n_experimental,
            outcome: WordOutcome::Analyzed {
                control_mean: g1.mean(),
                experimental_mean: g2.mean(),
                t_test,
                ks_test,
                degenerate_variance,
            },
        });
    }
    reports.sort_by(|a, b| match (a.difference(), b.difference()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.word_id.cmp(&b.word_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.word_id.cmp(&b.word_id),
    });
    Ok(reports)
}

pub const REPORT_CSV_HEADER: [&str; 12] = [
    "word",
    "nControl",
    "nExperimental",
    "controlMean",
    "experimentalMean",
    "tStat",
    "tP",
    "ksStat",
    "ksP",
    "tReject",
    "ksReject",
    "skippedReason",
];

pub fn write_report_csv(reports: &[WordReport], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in reports {
        let mut row = vec![
            r.word_id.to_string(),
            r.n_control.to_string(),
            r.n_experimental.to_string(),
        ];
        match &r.outcome {
            WordOutcome::Analyzed {
                control_mean,
                experimental_mean,
                t_test,
                ks_test,
                ..
            } => row.extend([
                control_mean.to_string(),
                experimental_mean.to_string(),
                t_test.statistic.to_string(),
                t_test.p_value.to_string(),
                ks_test.statistic.to_string(),
                ks_test.p_value.to_string(),
                t_test.reject_null.to_string(),
                ks_test.reject_null.to_string(),
                String::new(),
            ]),
            WordOutcome::Skipped { reason } => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(reason.to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
