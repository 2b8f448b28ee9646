//! The tutor layer: working-set management, learning/assessment word
//! selection, experiment gating, the learning-to-assessment ratio, and
//! performance updates.
//!
//! All mutations are expressed as [`EventBody`] values. A live operation
//! validates its inputs, appends the events it implies, then folds each event
//! into the in-memory state with [`Engine::apply`]. Replay runs the same fold
//! over a stored log, so live and replayed state agree field for field.

mod experiment;
mod selection;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ClassId, GroupId, LearnerId, WordId};
use crate::learner::{
    self, Dimension, LearnerBook, LearnerWordState, ModelError, ModelParams, Phase,
};
use crate::store::{
    AssessmentResponse, Event, EventBody, EventLog, GroupAssignment, LearnerRegistered,
    LearningExposure, PhaseChange, PhaseChangeCause, StoreError, WordIntroduction,
};
use crate::wordweb::{AssessmentItem, WordWeb};

pub use selection::apportion;

/// Fractions of an assessment batch drawn from each phase bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BlendPolicy {
    pub assessment_only: f64,
    pub learning: f64,
    pub learned: f64,
}

impl Default for BlendPolicy {
    fn default() -> Self {
        Self {
            assessment_only: 0.5,
            learning: 0.3,
            learned: 0.2,
        }
    }
}

impl BlendPolicy {
    pub fn fractions(&self) -> [f64; 3] {
        [self.assessment_only, self.learning, self.learned]
    }

    pub fn validate(&self) -> Result<(), TutorError> {
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || *x < 0.0)
            || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(TutorError::InvalidArgument(format!(
                "blend fractions {f:?} must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EngineConfig {
    pub model: ModelParams,
    pub blend: BlendPolicy,
    /// Number of learnable words kept in the working set.
    pub target_size: usize,
    /// Learning activities allowed per assessment activity before an
    /// assessment is forced.
    pub max_ratio: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            blend: BlendPolicy::default(),
            target_size: 10,
            max_ratio: 2.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), TutorError> {
        self.model.validate()?;
        self.blend.validate()?;
        if self.target_size == 0 {
            return Err(TutorError::InvalidArgument(
                "targetSize must be positive".into(),
            ));
        }
        if !self.max_ratio.is_finite() || self.max_ratio <= 0.0 {
            return Err(TutorError::InvalidArgument(
                "maxRatio must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActivityLedger {
    pub learner_id: LearnerId,
    pub learning_activity_count: u64,
    pub assessment_activity_count: u64,
    pub max_ratio: f64,
}

impl ActivityLedger {
    pub fn next_activity(&self) -> ActivityType {
        let allowed = self.max_ratio * self.assessment_activity_count.max(1) as f64;
        if self.learning_activity_count as f64 > allowed {
            ActivityType::Assessment
        } else {
            ActivityType::Learning
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ActivityType {
    /// Learning is permitted (assessment is always permitted too).
    Learning,
    /// Learning is blocked until more assessments are taken.
    Assessment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentAssignment {
    pub group_id: GroupId,
    pub member_learner_ids: BTreeSet<LearnerId>,
    pub learnable_word_set: BTreeSet<WordId>,
    pub assessable_word_set: BTreeSet<WordId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkingSet {
    pub learner_id: LearnerId,
    pub dimension: Dimension,
    pub learning_words: Vec<WordId>,
    pub assessment_only_words: Vec<WordId>,
    pub target_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerRecord {
    pub class_id: ClassId,
    pub book: LearnerBook,
    pub ledger: ActivityLedger,
    /// Teacher-pushed words, head first, per dimension.
    pub queues: BTreeMap<Dimension, VecDeque<WordId>>,
    /// Number of assessments received so far; orders least-recently-assessed.
    pub assessments_seen: u64,
}

/// Everything replay must reproduce.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EngineState {
    pub learners: BTreeMap<LearnerId, LearnerRecord>,
    pub groups: BTreeMap<GroupId, ExperimentAssignment>,
    pub membership: BTreeMap<LearnerId, GroupId>,
}

#[derive(Debug, Error)]
pub enum TutorError {
    #[error("unknown learner `{0}`")]
    UnknownLearner(LearnerId),
    #[error("unknown word `{0}`")]
    UnknownWord(WordId),
    #[error("unknown class `{0}`")]
    UnknownClass(ClassId),
    #[error("learner `{0}` is already registered")]
    DuplicateLearner(LearnerId),
    #[error("instantaneous score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("learner `{learner}` already belongs to group `{group}`")]
    ConflictingAssignment { learner: LearnerId, group: GroupId },
    #[error("invalid word sets: {0}")]
    InvalidWordSets(String),
    #[error("learner `{learner}` is not in group `{group}`")]
    NotInGroup { learner: LearnerId, group: GroupId },
    #[error("learning activity on `{word}` not permitted: {reason}")]
    LearningNotPermitted { word: WordId, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<ModelError> for TutorError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ScoreOutOfRange(s) => TutorError::ScoreOutOfRange(s),
            other => TutorError::Model(other),
        }
    }
}

pub type Result<T, E = TutorError> = std::result::Result<T, E>;

/// The tutor engine. Operations for one learner must be serialized; the
/// engine itself is single-writer and callers share it behind a lock.
#[derive(Debug, Clone)]
pub struct Engine {
    web: Arc<WordWeb>,
    config: EngineConfig,
    state: EngineState,
    log: EventLog,
    clock: u64,
}

impl Engine {
    pub fn new(web: Arc<WordWeb>, config: EngineConfig) -> Result<Self> {
        Self::with_log(web, config, EventLog::in_memory())
    }

    /// Starts an engine writing to `log`, which must be empty.
    pub fn with_log(web: Arc<WordWeb>, config: EngineConfig, log: EventLog) -> Result<Self> {
        config.validate()?;
        if !log.is_empty() {
            return Err(TutorError::InvalidArgument(
                "a live engine must start from an empty log; use replay".into(),
            ));
        }
        Ok(Self {
            web,
            config,
            state: EngineState::default(),
            log,
            clock: 0,
        })
    }

    /// Rebuilds an engine by folding `events` in order.
    pub fn replay(
        web: Arc<WordWeb>,
        config: EngineConfig,
        events: &[Event],
    ) -> Result<Self, StoreError> {
        let mut engine = Self::new(web, config).map_err(|e| StoreError::CorruptLog {
            seq: 0,
            reason: format!("invalid configuration: {e}"),
        })?;
        let mut last = 0;
        for event in events {
            if event.seq <= last {
                return Err(StoreError::CorruptLog {
                    seq: event.seq,
                    reason: "sequence does not increase".into(),
                });
            }
            event
                .body
                .validate()
                .map_err(|reason| StoreError::CorruptLog {
                    seq: event.seq,
                    reason,
                })?;
            engine.clock = event.ts;
            engine
                .apply(&event.body)
                .map_err(|reason| StoreError::CorruptLog {
                    seq: event.seq,
                    reason,
                })?;
            last = event.seq;
        }
        engine.log = EventLog::from_events(events.to_vec())?;
        Ok(engine)
    }

    /// Replays an opened log and keeps appending to it.
    pub fn resume(
        web: Arc<WordWeb>,
        config: EngineConfig,
        log: EventLog,
    ) -> Result<Self, StoreError> {
        let mut engine = Self::replay(web, config, log.events())?;
        engine.log = log;
        Ok(engine)
    }

    pub fn web(&self) -> &WordWeb {
        &self.web
    }

    pub fn web_arc(&self) -> Arc<WordWeb> {
        Arc::clone(&self.web)
    }

    /// Mutable access for item verification. Copies the web if it is shared.
    pub fn web_mut(&mut self) -> &mut WordWeb {
        Arc::make_mut(&mut self.web)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn events(&self) -> &[Event] {
        self.log.events()
    }

    /// Sets the timestamp stamped on subsequent events (logical day in
    /// simulation, wall-clock millis in service mode).
    pub fn set_clock(&mut self, ts: u64) {
        self.clock = ts;
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub(crate) fn record(&self, learner: &LearnerId) -> Result<&LearnerRecord> {
        self.state
            .learners
            .get(learner)
            .ok_or_else(|| TutorError::UnknownLearner(learner.clone()))
    }

    pub fn learner(&self, learner: &LearnerId) -> Result<&LearnerRecord> {
        self.record(learner)
    }

    pub fn learners(&self) -> impl Iterator<Item = (&LearnerId, &LearnerRecord)> {
        self.state.learners.iter()
    }

    pub fn class_members(&self, class: &ClassId) -> Vec<&LearnerId> {
        self.state
            .learners
            .iter()
            .filter(|(_, r)| &r.class_id == class)
            .map(|(id, _)| id)
            .collect()
    }

    fn require_word(&self, word: &WordId) -> Result<()> {
        if self.web.contains(word) {
            Ok(())
        } else {
            Err(TutorError::UnknownWord(word.clone()))
        }
    }

    pub fn word_state(
        &self,
        learner: &LearnerId,
        word: &WordId,
        dim: Dimension,
    ) -> Result<&LearnerWordState> {
        let record = self.record(learner)?;
        record
            .book
            .state(dim, word)
            .ok_or_else(|| TutorError::UnknownWord(word.clone()))
    }

    pub fn words_in_phase(
        &self,
        learner: &LearnerId,
        dim: Dimension,
        phase: Phase,
    ) -> Result<BTreeSet<WordId>> {
        Ok(self.record(learner)?.book.words_in_phase(dim, phase))
    }

    pub fn group_of(&self, learner: &LearnerId) -> Option<&ExperimentAssignment> {
        self.state
            .membership
            .get(learner)
            .and_then(|g| self.state.groups.get(g))
    }

    pub fn groups(&self) -> impl Iterator<Item = &ExperimentAssignment> {
        self.state.groups.values()
    }

    pub fn is_learnable(&self, learner: &LearnerId, word: &WordId) -> bool {
        self.group_of(learner)
            .is_none_or(|g| g.learnable_word_set.contains(word))
    }

    pub fn is_assessable(&self, learner: &LearnerId, word: &WordId) -> bool {
        self.group_of(learner)
            .is_none_or(|g| g.assessable_word_set.contains(word))
    }

    pub fn working_set(&self, learner: &LearnerId, dim: Dimension) -> Result<WorkingSet> {
        let record = self.record(learner)?;
        let mut ws = WorkingSet {
            learner_id: learner.clone(),
            dimension: dim,
            learning_words: Vec::new(),
            assessment_only_words: Vec::new(),
            target_size: self.config.target_size,
        };
        for state in record.book.states(dim) {
            match state.phase {
                Phase::Learning => ws.learning_words.push(state.word_id.clone()),
                Phase::AssessmentOnly => ws.assessment_only_words.push(state.word_id.clone()),
                _ => {}
            }
        }
        Ok(ws)
    }

    /// Appends an event and folds it into the state.
    fn commit(&mut self, body: EventBody) -> Result<u64> {
        let seq = self.log.append(self.clock, body)?;
        let body = &self.log.events().last().expect("just appended").body;
        let body = body.clone();
        self.apply(&body)
            .map_err(|reason| TutorError::Store(StoreError::CorruptLog { seq, reason }))?;
        Ok(seq)
    }

    pub fn register_learner(&mut self, learner: LearnerId, class: ClassId) -> Result<()> {
        if self.state.learners.contains_key(&learner) {
            return Err(TutorError::DuplicateLearner(learner));
        }
        if learner.as_str().is_empty() || class.as_str().is_empty() {
            return Err(TutorError::InvalidArgument(
                "empty learner or class id".into(),
            ));
        }
        self.commit(EventBody::LearnerRegistered(LearnerRegistered {
            learner_id: learner,
            class_id: class,
        }))?;
        Ok(())
    }

    pub fn next_activity_type(&self, learner: &LearnerId) -> Result<ActivityType> {
        Ok(self.record(learner)?.ledger.next_activity())
    }

    /// Records one assessment response and returns the updated state.
    pub fn update_word_performance(
        &mut self,
        learner: &LearnerId,
        word: &WordId,
        dim: Dimension,
        s: f64,
    ) -> Result<LearnerWordState> {
        self.require_word(word)?;
        let current = self.word_state(learner, word, dim)?;
        let before = current.phase;
        let next = learner::update_score(current, s, &self.config.model, self.clock)?;
        self.commit(EventBody::AssessmentResponse(AssessmentResponse {
            learner_id: learner.clone(),
            word_id: word.clone(),
            dimension: dim,
            s,
            score: next.score,
            phase: next.phase,
        }))?;
        if next.phase != before {
            self.commit(EventBody::PhaseChange(PhaseChange {
                learner_id: learner.clone(),
                word_id: word.clone(),
                dimension: dim,
                from: before,
                to: next.phase,
                cause: PhaseChangeCause::Score,
            }))?;
        }
        Ok(self.word_state(learner, word, dim)?.clone())
    }

    /// Logs one learning exposure (e.g. a video shown) for a learning-phase,
    /// learnable word.
    pub fn record_learning_exposure(
        &mut self,
        learner: &LearnerId,
        word: &WordId,
        dim: Dimension,
    ) -> Result<()> {
        self.require_word(word)?;
        let state = self.word_state(learner, word, dim)?;
        if state.phase != Phase::Learning {
            return Err(TutorError::LearningNotPermitted {
                word: word.clone(),
                reason: format!("word is {}", state.phase),
            });
        }
        if !self.is_learnable(learner, word) {
            return Err(TutorError::LearningNotPermitted {
                word: word.clone(),
                reason: "outside the learner's learnable word set".into(),
            });
        }
        self.commit(EventBody::LearningExposure(LearningExposure {
            learner_id: learner.clone(),
            word_id: word.clone(),
            dimension: dim,
        }))?;
        Ok(())
    }

    /// Places `words` at the head of the promotion queue of each learner.
    /// Words already out of the parked phase are skipped per learner.
    pub fn introduce_words(&mut self, learners: &[LearnerId], words: &[WordId]) -> Result<()> {
        for w in words {
            self.require_word(w)?;
        }
        for l in learners {
            self.record(l)?;
        }
        if learners.is_empty() || words.is_empty() {
            return Ok(());
        }
        self.commit(EventBody::WordIntroduction(WordIntroduction {
            learner_ids: learners.to_vec(),
            word_ids: words.to_vec(),
        }))?;
        Ok(())
    }

    /// First approved picture item for a word; unverified items are never
    /// served.
    pub fn assessment_item(&self, word: &WordId) -> Option<&AssessmentItem> {
        self.web.servable_items(word).next()
    }

    /// Folds one event into the state. Errors describe why the event is
    /// inconsistent with the current state.
    pub(crate) fn apply(&mut self, body: &EventBody) -> Result<(), String> {
        match body {
            EventBody::LearnerRegistered(e) => {
                if self.state.learners.contains_key(&e.learner_id) {
                    return Err(format!("learner `{}` registered twice", e.learner_id));
                }
                let record = LearnerRecord {
                    class_id: e.class_id.clone(),
                    book: LearnerBook::new(e.learner_id.clone(), self.web.curriculum()),
                    ledger: ActivityLedger {
                        learner_id: e.learner_id.clone(),
                        learning_activity_count: 0,
                        assessment_activity_count: 0,
                        max_ratio: self.config.max_ratio,
                    },
                    queues: BTreeMap::new(),
                    assessments_seen: 0,
                };
                self.state.learners.insert(e.learner_id.clone(), record);
            }
            EventBody::AssessmentResponse(e) => {
                let params = self.config.model;
                let clock = self.clock;
                let record = self.record_mut(&e.learner_id)?;
                let state = record
                    .book
                    .state(e.dimension, &e.word_id)
                    .ok_or_else(|| format!("unknown word `{}`", e.word_id))?;
                let next = learner::update_score(state, e.s, &params, clock)
                    .map_err(|err| err.to_string())?;
                if next.score != e.score || next.phase != e.phase {
                    return Err(format!(
                        "recorded result ({}, {}) disagrees with recomputed ({}, {})",
                        e.score, e.phase, next.score, next.phase
                    ));
                }
                record.assessments_seen += 1;
                record.ledger.assessment_activity_count += 1;
                let seen = record.assessments_seen;
                let slot = record
                    .book
                    .state_mut(e.dimension, &e.word_id)
                    .expect("checked above");
                *slot = LearnerWordState {
                    last_assessed: Some(seen),
                    ..next
                };
            }
            EventBody::LearningExposure(e) => {
                let clock = self.clock;
                let record = self.record_mut(&e.learner_id)?;
                let state = record
                    .book
                    .state_mut(e.dimension, &e.word_id)
                    .ok_or_else(|| format!("unknown word `{}`", e.word_id))?;
                if state.phase != Phase::Learning {
                    return Err(format!("exposure on {} word `{}`", state.phase, e.word_id));
                }
                state.learning_exposures += 1;
                state.last_updated = clock;
                record.ledger.learning_activity_count += 1;
            }
            EventBody::GroupAssignment(e) => self.apply_group_assignment(e)?,
            EventBody::GroupRemoval(e) => {
                match self.state.membership.get(&e.learner_id) {
                    Some(g) if g == &e.group_id => {}
                    _ => {
                        return Err(format!(
                            "learner `{}` is not in group `{}`",
                            e.learner_id, e.group_id
                        ))
                    }
                }
                self.state.membership.remove(&e.learner_id);
                if let Some(group) = self.state.groups.get_mut(&e.group_id) {
                    group.member_learner_ids.remove(&e.learner_id);
                }
            }
            EventBody::WordIntroduction(e) => {
                for l in &e.learner_ids {
                    let record = self.record_mut(l)?;
                    for dim in Dimension::ALL {
                        let parked: Vec<WordId> = e
                            .word_ids
                            .iter()
                            .filter(|w| {
                                record
                                    .book
                                    .state(dim, w)
                                    .is_some_and(|s| s.phase == Phase::Parked)
                            })
                            .cloned()
                            .collect();
                        if parked.is_empty() {
                            continue;
                        }
                        let queue = record.queues.entry(dim).or_default();
                        queue.retain(|w| !parked.contains(w));
                        for w in parked.into_iter().rev() {
                            if !queue.contains(&w) {
                                queue.push_front(w);
                            }
                        }
                    }
                }
            }
            EventBody::PhaseChange(e) => {
                let record = self.record_mut(&e.learner_id)?;
                let state = record
                    .book
                    .state_mut(e.dimension, &e.word_id)
                    .ok_or_else(|| format!("unknown word `{}`", e.word_id))?;
                match e.cause {
                    crate::store::PhaseChangeCause::Promotion => {
                        *state =
                            learner::promote_from_parked(state).map_err(|err| err.to_string())?;
                        if let Some(queue) = record.queues.get_mut(&e.dimension) {
                            queue.retain(|w| w != &e.word_id);
                        }
                    }
                    crate::store::PhaseChangeCause::Score => {
                        if state.phase != e.to {
                            return Err(format!(
                                "phase change to {} but replayed phase is {}",
                                e.to, state.phase
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn record_mut(&mut self, learner: &LearnerId) -> Result<&mut LearnerRecord, String> {
        self.state
            .learners
            .get_mut(learner)
            .ok_or_else(|| format!("unknown learner `{learner}`"))
    }

    fn apply_group_assignment(&mut self, e: &GroupAssignment) -> Result<(), String> {
        for l in &e.learner_ids {
            if !self.state.learners.contains_key(l) {
                return Err(format!("unknown learner `{l}`"));
            }
            if let Some(g) = self.state.membership.get(l) {
                if g != &e.group_id {
                    return Err(format!("learner `{l}` already in group `{g}`"));
                }
            }
        }
        let group = self
            .state
            .groups
            .entry(e.group_id.clone())
            .or_insert_with(|| ExperimentAssignment {
                group_id: e.group_id.clone(),
                member_learner_ids: BTreeSet::new(),
                learnable_word_set: BTreeSet::new(),
                assessable_word_set: BTreeSet::new(),
            });
        group.learnable_word_set = e.learnable_word_set.clone();
        group.assessable_word_set = e.assessable_word_set.clone();
        group
            .member_learner_ids
            .extend(e.learner_ids.iter().cloned());
        for l in &e.learner_ids {
            self.state.membership.insert(l.clone(), e.group_id.clone());
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::wordweb::WordNode;

    /// A web of single-letter-prefixed words in curriculum order `w00..`.
    pub fn web(n: usize) -> Arc<WordWeb> {
        let mut web = WordWeb::new();
        for i in 0..n {
            let id = format!("w{i:02}");
            web.add_word(WordNode::new(id.as_str(), id.as_str()))
                .unwrap();
        }
        Arc::new(web)
    }

    pub fn engine(n_words: usize, learners: &[&str]) -> Engine {
        let mut engine = Engine::new(web(n_words), EngineConfig::default()).unwrap();
        for l in learners {
            engine
                .register_learner((*l).into(), "class-1".into())
                .unwrap();
        }
        engine
    }
}
