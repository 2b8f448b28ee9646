use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{ClassId, GroupId, LearnerId, WordId};
use crate::learner::{Dimension, Phase};

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub ts: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    LearnerRegistered,
    AssessmentResponse,
    LearningExposure,
    GroupAssignment,
    GroupRemoval,
    WordIntroduction,
    PhaseChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "camelCase")]
pub enum EventBody {
    LearnerRegistered(LearnerRegistered),
    AssessmentResponse(AssessmentResponse),
    LearningExposure(LearningExposure),
    GroupAssignment(GroupAssignment),
    GroupRemoval(GroupRemoval),
    WordIntroduction(WordIntroduction),
    PhaseChange(PhaseChange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerRegistered {
    pub learner_id: LearnerId,
    pub class_id: ClassId,
}

/// A graded response and the state it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssessmentResponse {
    pub learner_id: LearnerId,
    pub word_id: WordId,
    pub dimension: Dimension,
    pub s: f64,
    pub score: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearningExposure {
    pub learner_id: LearnerId,
    pub word_id: WordId,
    pub dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupAssignment {
    pub group_id: GroupId,
    pub learner_ids: BTreeSet<LearnerId>,
    pub learnable_word_set: BTreeSet<WordId>,
    pub assessable_word_set: BTreeSet<WordId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupRemoval {
    pub group_id: GroupId,
    pub learner_id: LearnerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WordIntroduction {
    pub learner_ids: Vec<LearnerId>,
    pub word_ids: Vec<WordId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PhaseChangeCause {
    /// Refill moved a parked word into learning. Not derivable from scores.
    Promotion,
    /// Score crossed a threshold; redundant with the preceding response.
    Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseChange {
    pub learner_id: LearnerId,
    pub word_id: WordId,
    pub dimension: Dimension,
    pub from: Phase,
    pub to: Phase,
    pub cause: PhaseChangeCause,
}

impl EventBody {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::LearnerRegistered(_) => EventKind::LearnerRegistered,
            EventBody::AssessmentResponse(_) => EventKind::AssessmentResponse,
            EventBody::LearningExposure(_) => EventKind::LearningExposure,
            EventBody::GroupAssignment(_) => EventKind::GroupAssignment,
            EventBody::GroupRemoval(_) => EventKind::GroupRemoval,
            EventBody::WordIntroduction(_) => EventKind::WordIntroduction,
            EventBody::PhaseChange(_) => EventKind::PhaseChange,
        }
    }

    /// The learner an event belongs to, for per-learner events.
    pub fn learner(&self) -> Option<&LearnerId> {
        match self {
            EventBody::LearnerRegistered(e) => Some(&e.learner_id),
            EventBody::AssessmentResponse(e) => Some(&e.learner_id),
            EventBody::LearningExposure(e) => Some(&e.learner_id),
            EventBody::GroupRemoval(e) => Some(&e.learner_id),
            EventBody::PhaseChange(e) => Some(&e.learner_id),
            EventBody::GroupAssignment(_) | EventBody::WordIntroduction(_) => None,
        }
    }

    /// Checks the payload is well formed on its own, without engine context.
    pub fn validate(&self) -> Result<(), String> {
        fn id(name: &str, value: &str) -> Result<(), String> {
            if value.is_empty() {
                Err(format!("empty {name}"))
            } else {
                Ok(())
            }
        }
        fn unit(name: &str, value: f64) -> Result<(), String> {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(format!("{name} {value} outside [0, 1]"))
            }
        }
        match self {
            EventBody::LearnerRegistered(e) => {
                id("learnerId", e.learner_id.as_str())?;
                id("classId", e.class_id.as_str())
            }
            EventBody::AssessmentResponse(e) => {
                id("learnerId", e.learner_id.as_str())?;
                id("wordId", e.word_id.as_str())?;
                unit("s", e.s)?;
                unit("score", e.score)
            }
            EventBody::LearningExposure(e) => {
                id("learnerId", e.learner_id.as_str())?;
                id("wordId", e.word_id.as_str())
            }
            EventBody::GroupAssignment(e) => {
                id("groupId", e.group_id.as_str())?;
                if !e.learnable_word_set.is_subset(&e.assessable_word_set) {
                    return Err("learnable word set is not a subset of the assessable set".into());
                }
                Ok(())
            }
            EventBody::GroupRemoval(e) => {
                id("groupId", e.group_id.as_str())?;
                id("learnerId", e.learner_id.as_str())
            }
            EventBody::WordIntroduction(e) => {
                if e.learner_ids.is_empty() || e.word_ids.is_empty() {
                    return Err("introduction names no learners or no words".into());
                }
                Ok(())
            }
            EventBody::PhaseChange(e) => {
                id("learnerId", e.learner_id.as_str())?;
                id("wordId", e.word_id.as_str())?;
                if e.from == e.to {
                    return Err("phase change without a change".into());
                }
                match e.cause {
                    PhaseChangeCause::Promotion
                        if (e.from, e.to) != (Phase::Parked, Phase::Learning) =>
                    {
                        Err("promotion must move parked -> learning".into())
                    }
                    PhaseChangeCause::Score if e.from == Phase::Parked || e.to == Phase::Parked => {
                        Err("score-driven change cannot involve parked".into())
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}
