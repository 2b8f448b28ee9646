//! Outcome analysis for A/B experiments.
//!
//! Each learner's binary responses to a word are reduced to their mean, the
//! sufficient statistic under an i.i.d. Bernoulli model. Vectors with fewer
//! than `tau_min_responses` responses are dropped, and a group is only tested
//! when at least `eta_min_learners` vectors survive. Two one-sided tests ask
//! whether the second (experimental) group scores higher than the first
//! (control): Welch's t-test on the means and a two-sample Kolmogorov–Smirnov
//! test on the empirical distributions.

mod ab;
mod hypothesis;
mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{LearnerId, WordId};

pub use ab::{
    assignments_from_events, per_word_ab_report, response_vectors, write_report_csv, SkipReason,
    WordOutcome, WordReport, REPORT_CSV_HEADER,
};
pub use hypothesis::{ks_d_plus, ks_test_one_sided_two_sample, welch_t_test_one_sided};
pub use special::student_t_upper_tail;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseVector {
    pub learner_id: LearnerId,
    pub word_id: WordId,
    /// Chronological correctness bits.
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupSample {
    pub label: String,
    pub means: Vec<f64>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, means: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            means,
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AnalysisParams {
    pub tau_min_responses: usize,
    pub eta_min_learners: usize,
    pub significance_level: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            tau_min_responses: 3,
            eta_min_learners: 10,
            significance_level: 0.1,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.tau_min_responses == 0 || self.eta_min_learners == 0 {
            return Err(StatsError::InvalidParams(
                "minimum responses and minimum learners must be positive".into(),
            ));
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(StatsError::InvalidParams(format!(
                "significance level {} outside (0, 1)",
                self.significance_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TestKind {
    WelchT,
    KsOneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestResult {
    pub test_kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub reject_null: bool,
    pub n1: usize,
    pub n2: usize,
    /// Welch–Satterthwaite degrees of freedom; `None` for the KS test.
    pub df: Option<f64>,
}

impl TestResult {
    /// Re-evaluates the decision at a significance level.
    pub fn at_level(mut self, level: f64) -> Self {
        self.reject_null = self.p_value < level;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("response vector is empty")]
    EmptyVector,
    #[error("insufficient data: {0} admissible vector(s)")]
    InsufficientData(usize),
    #[error("{test:?} needs at least {needed} values per group, got {n1} and {n2}")]
    TooFewSamples {
        test: TestKind,
        needed: usize,
        n1: usize,
        n2: usize,
    },
    #[error("sample value {0} is not a finite number")]
    NonFinite(f64),
    /// Both groups have zero variance. `fallback` carries the conventional
    /// result: p = 0.5 for equal means, otherwise 0 or 1 by the sign.
    #[error("both samples have zero variance")]
    DegenerateVariance { fallback: TestResult },
    #[error("invalid analysis parameters: {0}")]
    InvalidParams(String),
}

/// Mean of a response vector.
pub fn reduce(vector: &ResponseVector) -> Result<f64, StatsError> {
    if vector.bits.is_empty() {
        return Err(StatsError::EmptyVector);
    }
    let hits = vector.bits.iter().filter(|b| **b).count();
    Ok(hits as f64 / vector.bits.len() as f64)
}

/// Applies the minimum-responses and minimum-learners filters.
pub fn admit(
    label: impl Into<String>,
    vectors: &[ResponseVector],
    params: &AnalysisParams,
) -> Result<GroupSample, StatsError> {
    let means: Vec<f64> = vectors
        .iter()
        .filter(|v| !v.bits.is_empty() && v.bits.len() >= params.tau_min_responses)
        .map(|v| reduce(v).expect("non-empty"))
        .collect();
    if means.len() < params.eta_min_learners {
        return Err(StatsError::InsufficientData(means.len()));
    }
    Ok(GroupSample::new(label, means))
}

#[cfg(test)]
mod unit {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vector(bits: &[u8]) -> ResponseVector {
        ResponseVector {
            learner_id: "l".into(),
            word_id: "w".into(),
            bits: bits.iter().map(|b| *b == 1).collect(),
        }
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&vector(&[1, 1, 1, 1])).unwrap(), 1.0);
        assert_eq!(reduce(&vector(&[0, 1, 0, 1])).unwrap(), 0.5);
        assert_eq!(reduce(&vector(&[])), Err(StatsError::EmptyVector));
    }

    #[test]
    fn reduce_matches_popcount() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let bits: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
            let popcount = bits.iter().filter(|b| **b == 1).count();
            assert_eq!(reduce(&vector(&bits)).unwrap(), popcount as f64 / 20.0);
        }
    }

    #[test]
    fn admit_filters() {
        let p = AnalysisParams::default();
        let mut vs: Vec<ResponseVector> = (0..9).map(|_| vector(&[1, 0, 1])).collect();
        vs.extend((0..3).map(|_| vector(&[1, 1])));
        assert_eq!(admit("g", &vs, &p), Err(StatsError::InsufficientData(9)));

        let ten: Vec<ResponseVector> = (0..10).map(|_| vector(&[1, 0, 1, 1])).collect();
        let g = admit("g", &ten, &p).unwrap();
        assert_eq!(g.len(), 10);
        assert!(g.means.iter().all(|m| *m == 0.75));

        assert_eq!(admit("g", &[], &p), Err(StatsError::InsufficientData(0)));
    }

    #[test]
    fn params_validation() {
        assert!(AnalysisParams::default().validate().is_ok());
        let bad = AnalysisParams {
            significance_level: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
