//! Phased learner model.
//!
//! Every (learner, word, dimension) carries a score in `[0, 1]` updated by an
//! exponentially weighted moving average of assessment outcomes, and one of
//! four phases. Scores drive the phase through a hysteresis state machine:
//!
//! ```text
//!   parked --(refill)--> learning <==> assessmentOnly <==> learned
//! ```
//!
//! Promotions fire at `score >= threshold`, demotions at `score < threshold`,
//! and the rules are applied to a fixpoint so equal promotion thresholds move
//! a word straight from learning to learned. Nothing ever demotes to parked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{LearnerId, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Dimension {
    Listening,
    Reading,
    Speaking,
    Writing,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Listening,
        Dimension::Reading,
        Dimension::Speaking,
        Dimension::Writing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Listening => "listening",
            Dimension::Reading => "reading",
            Dimension::Speaking => "speaking",
            Dimension::Writing => "writing",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown dimension `{s}`"))
    }
}

/// Phases in promotion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Phase {
    Parked,
    Learning,
    AssessmentOnly,
    Learned,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Parked,
        Phase::Learning,
        Phase::AssessmentOnly,
        Phase::Learned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Parked => "parked",
            Phase::Learning => "learning",
            Phase::AssessmentOnly => "assessmentOnly",
            Phase::Learned => "learned",
        }
    }

    pub fn in_working_set(self) -> bool {
        matches!(self, Phase::Learning | Phase::AssessmentOnly)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instantaneous score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("word `{word}` is {phase}, not parked")]
    NotParked { word: WordId, phase: Phase },
    #[error("invalid phase thresholds: {0}")]
    InvalidThresholds(String),
    #[error("smoothing factor {0} outside (0, 1)")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawThresholds {
    to_assessment_only: f64,
    to_learned: f64,
    back_to_learning: f64,
    out_of_learned: f64,
}

/// Promotion and demotion thresholds with hysteresis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds", into = "RawThresholds")]
pub struct PhaseThresholds {
    /// learning -> assessmentOnly at or above this score.
    pub to_assessment_only: f64,
    /// assessmentOnly -> learned at or above this score.
    pub to_learned: f64,
    /// assessmentOnly -> learning strictly below this score.
    pub back_to_learning: f64,
    /// learned -> assessmentOnly strictly below this score.
    pub out_of_learned: f64,
}

impl PhaseThresholds {
    pub fn new(
        to_assessment_only: f64,
        to_learned: f64,
        back_to_learning: f64,
        out_of_learned: f64,
    ) -> Result<Self, ModelError> {
        let all = [
            to_assessment_only,
            to_learned,
            back_to_learning,
            out_of_learned,
        ];
        if all.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(ModelError::InvalidThresholds(
                "every threshold must lie in (0, 1)".into(),
            ));
        }
        if back_to_learning >= to_assessment_only || out_of_learned >= to_learned {
            return Err(ModelError::InvalidThresholds(
                "demotion thresholds must sit strictly below their promotion thresholds".into(),
            ));
        }
        if to_assessment_only > to_learned {
            return Err(ModelError::InvalidThresholds(
                "learned threshold must not be below the assessment-only threshold".into(),
            ));
        }
        Ok(Self {
            to_assessment_only,
            to_learned,
            back_to_learning,
            out_of_learned,
        })
    }
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            to_assessment_only: 0.86,
            to_learned: 0.86,
            back_to_learning: 0.56,
            out_of_learned: 0.56,
        }
    }
}

impl TryFrom<RawThresholds> for PhaseThresholds {
    type Error = ModelError;

    fn try_from(r: RawThresholds) -> Result<Self, Self::Error> {
        Self::new(
            r.to_assessment_only,
            r.to_learned,
            r.back_to_learning,
            r.out_of_learned,
        )
    }
}

impl From<PhaseThresholds> for RawThresholds {
    fn from(t: PhaseThresholds) -> Self {
        Self {
            to_assessment_only: t.to_assessment_only,
            to_learned: t.to_learned,
            back_to_learning: t.back_to_learning,
            out_of_learned: t.out_of_learned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ModelParams {
    /// Weight kept on the previous score in each update.
    pub alpha: f64,
    pub thresholds: PhaseThresholds,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            thresholds: PhaseThresholds::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ModelError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerWordState {
    pub learner_id: LearnerId,
    pub word_id: WordId,
    pub dimension: Dimension,
    pub score: f64,
    pub phase: Phase,
    pub assessment_count: u32,
    pub learning_exposures: u32,
    pub last_updated: u64,
    /// Sum of instantaneous scores received; `correct_total / assessment_count`
    /// is the raw correct-response rate.
    pub correct_total: f64,
    /// Learner-local ordinal of the most recent assessment, if any.
    pub last_assessed: Option<u64>,
}

impl LearnerWordState {
    pub fn parked(learner_id: LearnerId, word_id: WordId, dimension: Dimension) -> Self {
        Self {
            learner_id,
            word_id,
            dimension,
            score: 0.0,
            phase: Phase::Parked,
            assessment_count: 0,
            learning_exposures: 0,
            last_updated: 0,
            correct_total: 0.0,
            last_assessed: None,
        }
    }
}

/// Applies the phase rules until none fires. Parked words are left alone.
pub fn transition(phase: Phase, score: f64, thresholds: &PhaseThresholds) -> Phase {
    let mut current = phase;
    loop {
        let next = match current {
            Phase::Parked => Phase::Parked,
            Phase::Learning if score >= thresholds.to_assessment_only => Phase::AssessmentOnly,
            Phase::AssessmentOnly if score >= thresholds.to_learned => Phase::Learned,
            Phase::AssessmentOnly if score < thresholds.back_to_learning => Phase::Learning,
            Phase::Learned if score < thresholds.out_of_learned => Phase::AssessmentOnly,
            other => other,
        };
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Folds one instantaneous score `s` into the state.
pub fn update_score(
    state: &LearnerWordState,
    s: f64,
    params: &ModelParams,
    now: u64,
) -> Result<LearnerWordState, ModelError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(ModelError::ScoreOutOfRange(s));
    }
    let score = (params.alpha * state.score + (1.0 - params.alpha) * s).clamp(0.0, 1.0);
    Ok(LearnerWordState {
        score,
        phase: transition(state.phase, score, &params.thresholds),
        assessment_count: state.assessment_count + 1,
        correct_total: state.correct_total + s,
        last_updated: now,
        ..state.clone()
    })
}

pub fn promote_from_parked(state: &LearnerWordState) -> Result<LearnerWordState, ModelError> {
    if state.phase != Phase::Parked {
        return Err(ModelError::NotParked {
            word: state.word_id.clone(),
            phase: state.phase,
        });
    }
    Ok(LearnerWordState {
        phase: Phase::Learning,
        ..state.clone()
    })
}

/// All word states of one learner, across every dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerBook {
    learner_id: LearnerId,
    states: BTreeMap<Dimension, BTreeMap<WordId, LearnerWordState>>,
}

impl LearnerBook {
    pub fn new<'a>(learner_id: LearnerId, words: impl IntoIterator<Item = &'a WordId>) -> Self {
        let words: Vec<&WordId> = words.into_iter().collect();
        let states = Dimension::ALL
            .into_iter()
            .map(|dim| {
                let per_word = words
                    .iter()
                    .map(|w| {
                        (
                            (*w).clone(),
                            LearnerWordState::parked(learner_id.clone(), (*w).clone(), dim),
                        )
                    })
                    .collect();
                (dim, per_word)
            })
            .collect();
        Self { learner_id, states }
    }

    pub fn learner_id(&self) -> &LearnerId {
        &self.learner_id
    }

    pub fn state(&self, dim: Dimension, word: &WordId) -> Option<&LearnerWordState> {
        self.states.get(&dim)?.get(word)
    }

    pub(crate) fn state_mut(
        &mut self,
        dim: Dimension,
        word: &WordId,
    ) -> Option<&mut LearnerWordState> {
        self.states.get_mut(&dim)?.get_mut(word)
    }

    /// States for one dimension in word-id order.
    pub fn states(&self, dim: Dimension) -> impl Iterator<Item = &LearnerWordState> {
        self.states.get(&dim).into_iter().flat_map(|m| m.values())
    }

    pub fn words_in_phase(&self, dim: Dimension, phase: Phase) -> BTreeSet<WordId> {
        self.states(dim)
            .filter(|s| s.phase == phase)
            .map(|s| s.word_id.clone())
            .collect()
    }

    pub fn phase_counts(&self, dim: Dimension) -> BTreeMap<Phase, usize> {
        let mut counts: BTreeMap<Phase, usize> = Phase::ALL.into_iter().map(|p| (p, 0)).collect();
        for s in self.states(dim) {
            *counts.entry(s.phase).or_default() += 1;
        }
        counts
    }
}
