//! Day-by-day classroom simulator driving the engine with synthetic learners.
//!
//! Classes are split at random into two groups. Group A may learn word set X
//! and group B word set Y; both are assessed on all words, so each group is
//! the control for the other group's set. Learners answer picture questions
//! according to [`answer_model`].

mod vocabulary;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ClassId, GroupId, LearnerId, WordId};
use crate::learner::{Dimension, Phase};
use crate::stats::{per_word_ab_report, AnalysisParams, StatsError, WordReport};
use crate::store::EventLog;
use crate::tutor::{ActivityType, Engine, EngineConfig, ExperimentAssignment, TutorError};
use crate::wordweb::WordWeb;

pub use vocabulary::{synthetic_web, CLUSTERS};

/// Session RNG streams are keyed off the seed mixed with this salt so they
/// never coincide with the profile streams.
const SESSION_SALT: u64 = 0x5e55_1015_d00d_f00d;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimConfig {
    pub num_classes: usize,
    /// Total learners, spread over classes as evenly as possible.
    pub num_learners: usize,
    pub num_words: usize,
    pub duration_days: u32,
    pub rng_seed: u64,
    pub engine: EngineConfig,
    pub analysis: AnalysisParams,
    pub dimension: Dimension,
    /// Fraction of words a learner already knows at the start.
    pub known_fraction: f64,
    pub known_baseline: (f64, f64),
    pub guess_probability: f64,
    pub learning_gain: (f64, f64),
    pub sessions_per_week: (u32, u32),
    /// Probability of picking an assessment when learning is also allowed.
    pub assessment_appetite: (f64, f64),
    pub activities_per_session: usize,
    pub words_per_activity: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_classes: 8,
            num_learners: 180,
            num_words: 40,
            duration_days: 63,
            rng_seed: 2019,
            engine: EngineConfig::default(),
            analysis: AnalysisParams::default(),
            dimension: Dimension::Listening,
            known_fraction: 0.3,
            known_baseline: (0.75, 1.0),
            guess_probability: 1.0 / 3.0,
            learning_gain: (0.08, 0.4),
            sessions_per_week: (2, 5),
            assessment_appetite: (0.3, 0.7),
            activities_per_session: 6,
            words_per_activity: 5,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<(), SimError> {
    if !(lo >= min && lo <= hi && hi <= max) {
        return Err(SimError::InvalidConfig(format!(
            "{name} range ({lo}, {hi}) must lie within [{min}, {max}]"
        )));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_classes == 0 || self.num_classes % 2 == 1 {
            return Err(SimError::OddClassCount(self.num_classes));
        }
        if self.num_learners < self.num_classes {
            return Err(SimError::InvalidConfig(format!(
                "{} learners cannot fill {} classes",
                self.num_learners, self.num_classes
            )));
        }
        if self.num_words < 2 {
            return Err(SimError::InvalidConfig("need at least 2 words".into()));
        }
        if self.activities_per_session == 0 || self.words_per_activity == 0 {
            return Err(SimError::InvalidConfig(
                "activities per session and words per activity must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.known_fraction) {
            return Err(SimError::InvalidConfig(
                "known fraction outside [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.guess_probability) {
            return Err(SimError::InvalidConfig(
                "guess probability outside [0, 1]".into(),
            ));
        }
        check_range("known baseline", self.known_baseline, 0.0, 1.0)?;
        check_range("learning gain", self.learning_gain, 0.0, 1.0)?;
        check_range("assessment appetite", self.assessment_appetite, 0.0, 1.0)?;
        let (lo, hi) = self.sessions_per_week;
        if lo == 0 || lo > hi || hi > 7 {
            return Err(SimError::InvalidConfig(format!(
                "sessions per week ({lo}, {hi}) must lie within 1..=7"
            )));
        }
        self.engine
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.analysis
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("class count {0} cannot be split into two equal groups")]
    OddClassCount(usize),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("day {day}, learner {learner}: {source}")]
    Engine {
        day: u32,
        learner: LearnerId,
        #[source]
        source: TutorError,
    },
    #[error("setup failed: {0}")]
    Setup(#[from] TutorError),
    #[error("invariant violated on day {day}: {message}")]
    Invariant { day: u32, message: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimLearnerProfile {
    pub learner_id: LearnerId,
    pub class_id: ClassId,
    pub baseline_knowledge: BTreeMap<WordId, f64>,
    pub learning_gain: f64,
    pub guess_probability: f64,
    pub sessions_per_week: u32,
    pub assessment_appetite: f64,
}

/// Probability of a correct answer after `exposures` learning exposures.
pub fn answer_model(profile: &SimLearnerProfile, word: &WordId, exposures: u32) -> f64 {
    let baseline = profile.baseline_knowledge.get(word).copied().unwrap_or(0.0);
    let unknown = (1.0 - baseline) * (1.0 - profile.learning_gain).powi(exposures as i32);
    (1.0 - unknown)
        .max(profile.guess_probability)
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassPlan {
    pub class_id: ClassId,
    pub group_id: GroupId,
    pub learners: Vec<LearnerId>,
}

/// A built pilot: the engine with learners and groups registered, plus the
/// ground truth the simulated learners answer from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SimConfig,
    pub engine: Engine,
    pub classes: Vec<ClassPlan>,
    pub set_x: BTreeSet<WordId>,
    pub set_y: BTreeSet<WordId>,
    pub profiles: Vec<SimLearnerProfile>,
}

impl Scenario {
    pub fn assignments(&self) -> Vec<ExperimentAssignment> {
        self.engine.groups().cloned().collect()
    }
}

pub fn build_pilot(config: SimConfig) -> Result<Scenario, SimError> {
    build_pilot_with_log(config, EventLog::in_memory())
}

/// Like [`build_pilot`] but writes events to the given (empty) log.
pub fn build_pilot_with_log(config: SimConfig, log: EventLog) -> Result<Scenario, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let web = Arc::new(synthetic_web(config.num_words));

    let mut class_order: Vec<usize> = (0..config.num_classes).collect();
    class_order.shuffle(&mut rng);
    let half = config.num_classes / 2;
    let group_a: BTreeSet<usize> = class_order[..half].iter().copied().collect();

    let mut words: Vec<WordId> = web.curriculum().to_vec();
    words.shuffle(&mut rng);
    let split = config.num_words / 2;
    let set_x: BTreeSet<WordId> = words[..split].iter().cloned().collect();
    let set_y: BTreeSet<WordId> = words[split..].iter().cloned().collect();

    let base = config.num_learners / config.num_classes;
    let extra = config.num_learners % config.num_classes;
    let mut classes = Vec::with_capacity(config.num_classes);
    let mut profiles = Vec::with_capacity(config.num_learners);
    for c in 0..config.num_classes {
        let class_id = ClassId::new(format!("class-{}", c + 1));
        let group_id = GroupId::new(if group_a.contains(&c) { "A" } else { "B" });
        let size = base + usize::from(c < extra);
        let mut learners = Vec::with_capacity(size);
        for k in 0..size {
            let index = profiles.len();
            let learner_id = LearnerId::new(format!("c{}-l{:02}", c + 1, k + 1));
            profiles.push(sample_profile(
                &config,
                &web,
                learner_id.clone(),
                class_id.clone(),
                index,
            ));
            learners.push(learner_id);
        }
        classes.push(ClassPlan {
            class_id,
            group_id,
            learners,
        });
    }

    let mut engine = Engine::with_log(web, config.engine, log)?;
    for plan in &classes {
        for l in &plan.learners {
            engine.register_learner(l.clone(), plan.class_id.clone())?;
        }
    }
    let all: BTreeSet<WordId> = set_x.union(&set_y).cloned().collect();
    for (group, learnable) in [("A", &set_x), ("B", &set_y)] {
        let members: BTreeSet<LearnerId> = classes
            .iter()
            .filter(|p| p.group_id.as_str() == group)
            .flat_map(|p| p.learners.iter().cloned())
            .collect();
        engine.assign_words_to_learner_group(
            group.into(),
            members,
            learnable.clone(),
            all.clone(),
        )?;
    }

    Ok(Scenario {
        config,
        engine,
        classes,
        set_x,
        set_y,
        profiles,
    })
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn sample_profile(
    config: &SimConfig,
    web: &WordWeb,
    learner_id: LearnerId,
    class_id: ClassId,
    index: usize,
) -> SimLearnerProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64 + 1);
    let baseline_knowledge = web
        .curriculum()
        .iter()
        .map(|w| {
            let known = rng.random_bool(config.known_fraction);
            let b = if known {
                uniform(&mut rng, config.known_baseline)
            } else {
                0.0
            };
            (w.clone(), b)
        })
        .collect();
    let (lo, hi) = config.sessions_per_week;
    SimLearnerProfile {
        learner_id,
        class_id,
        baseline_knowledge,
        learning_gain: uniform(&mut rng, config.learning_gain),
        guess_probability: config.guess_probability,
        sessions_per_week: rng.random_range(lo..=hi),
        assessment_appetite: uniform(&mut rng, config.assessment_appetite),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScheduleOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunOptions {
    pub order: ScheduleOrder,
    /// Record every learner's per-word phase and score at the end of each day.
    pub snapshots: bool,
    /// Check score bounds, gating and the working-set bound after each session.
    pub check_invariants: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            order: ScheduleOrder::Forward,
            snapshots: true,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub day: u32,
    pub learner_id: LearnerId,
    pub word_id: WordId,
    pub phase: Phase,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct PilotRun {
    pub engine: Engine,
    pub snapshots: Vec<Snapshot>,
    /// Learned-word count per learner at the end of each day, days 1..=N.
    pub learned_counts: BTreeMap<LearnerId, Vec<usize>>,
    pub profiles: Vec<SimLearnerProfile>,
    pub classes: Vec<ClassPlan>,
    pub set_x: BTreeSet<WordId>,
    pub set_y: BTreeSet<WordId>,
    pub config: SimConfig,
}

impl PilotRun {
    pub fn assignments(&self) -> Vec<ExperimentAssignment> {
        self.engine.groups().cloned().collect()
    }

    pub fn ab_report(&self) -> Result<Vec<WordReport>, StatsError> {
        per_word_ab_report(
            self.engine.events(),
            &self.assignments(),
            &self.config.analysis,
            self.config.dimension,
        )
    }

    pub fn snapshots_on(&self, day: u32) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter().filter(move |s| s.day == day)
    }
}

pub fn run_pilot(scenario: Scenario, options: RunOptions) -> Result<PilotRun, SimError> {
    let Scenario {
        config,
        mut engine,
        classes,
        set_x,
        set_y,
        profiles,
    } = scenario;
    let dim = config.dimension;
    let mut rngs: Vec<ChaCha8Rng> = (0..profiles.len())
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(config.rng_seed ^ SESSION_SALT);
            r.set_stream(i as u64 + 1);
            r
        })
        .collect();
    let mut schedule: Vec<usize> = (0..profiles.len()).collect();
    if options.order == ScheduleOrder::Reverse {
        schedule.reverse();
    }

    let mut snapshots = Vec::new();
    let mut learned_counts: BTreeMap<LearnerId, Vec<usize>> = profiles
        .iter()
        .map(|p| {
            (
                p.learner_id.clone(),
                Vec::with_capacity(config.duration_days as usize),
            )
        })
        .collect();

    for day in 1..=config.duration_days {
        engine.set_clock(u64::from(day));
        for &i in &schedule {
            let profile = &profiles[i];
            let rng = &mut rngs[i];
            let wrap = |source| SimError::Engine {
                day,
                learner: profile.learner_id.clone(),
                source,
            };
            run_session(&mut engine, &config, profile, rng).map_err(wrap)?;
            if options.check_invariants {
                check_learner(&engine, &config, &profile.learner_id)
                    .map_err(|message| SimError::Invariant { day, message })?;
            }
        }
        for p in &profiles {
            let book = &engine.learner(&p.learner_id).map_err(SimError::Setup)?.book;
            let mut learned = 0;
            for st in book.states(dim) {
                learned += usize::from(st.phase == Phase::Learned);
                if options.snapshots {
                    snapshots.push(Snapshot {
                        day,
                        learner_id: p.learner_id.clone(),
                        word_id: st.word_id.clone(),
                        phase: st.phase,
                        score: st.score,
                    });
                }
            }
            learned_counts
                .get_mut(&p.learner_id)
                .expect("known")
                .push(learned);
        }
    }

    Ok(PilotRun {
        engine,
        snapshots,
        learned_counts,
        profiles,
        classes,
        set_x,
        set_y,
        config,
    })
}

fn run_session(
    engine: &mut Engine,
    config: &SimConfig,
    profile: &SimLearnerProfile,
    rng: &mut ChaCha8Rng,
) -> Result<(), TutorError> {
    let learner = &profile.learner_id;
    let dim = config.dimension;
    if !rng.random_bool(f64::from(profile.sessions_per_week) / 7.0) {
        return Ok(());
    }
    for _ in 0..config.activities_per_session {
        let prefer_assessment = rng.random_bool(profile.assessment_appetite);
        let learning_allowed = engine.next_activity_type(learner)? == ActivityType::Learning;
        let mut did_something = false;
        if learning_allowed && !prefer_assessment {
            did_something = learn(engine, learner, dim, config.words_per_activity)?;
        }
        if !did_something {
            did_something = assess(engine, profile, dim, config.words_per_activity, rng)?;
        }
        if !did_something && learning_allowed {
            did_something = learn(engine, learner, dim, config.words_per_activity)?;
        }
        if !did_something {
            break;
        }
    }
    Ok(())
}

fn learn(
    engine: &mut Engine,
    learner: &LearnerId,
    dim: Dimension,
    n: usize,
) -> Result<bool, TutorError> {
    let words = engine.next_learning_words(learner, dim, n)?;
    for w in &words {
        engine.record_learning_exposure(learner, w, dim)?;
    }
    Ok(!words.is_empty())
}

fn assess(
    engine: &mut Engine,
    profile: &SimLearnerProfile,
    dim: Dimension,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<bool, TutorError> {
    let learner = &profile.learner_id;
    let words = engine.next_assessment_words(learner, dim, n)?;
    for w in &words {
        let exposures = engine.word_state(learner, w, dim)?.learning_exposures;
        let p = answer_model(profile, w, exposures);
        let s = if rng.random_bool(p) { 1.0 } else { 0.0 };
        engine.update_word_performance(learner, w, dim, s)?;
    }
    Ok(!words.is_empty())
}

fn check_learner(engine: &Engine, config: &SimConfig, learner: &LearnerId) -> Result<(), String> {
    let record = engine.learner(learner).map_err(|e| e.to_string())?;
    for dim in Dimension::ALL {
        let mut learnable_working = 0;
        for st in record.book.states(dim) {
            if !(0.0..=1.0).contains(&st.score) {
                return Err(format!("{learner}/{}: score {}", st.word_id, st.score));
            }
            if st.learning_exposures > 0 && !engine.is_learnable(learner, &st.word_id) {
                return Err(format!("{learner} was taught gated word {}", st.word_id));
            }
            if st.phase.in_working_set() && engine.is_learnable(learner, &st.word_id) {
                learnable_working += 1;
            }
        }
        // Demotions may push the set past the target, but never by more
        // than one activity's worth of words.
        let bound = config.engine.target_size + config.words_per_activity;
        if learnable_working > bound {
            return Err(format!(
                "{learner} has {learnable_working} working words in {dim} (bound {bound})"
            ));
        }
    }
    Ok(())
}
