//! Adaptive vocabulary tutoring: a word web, per-learner phase models, a
//! selection engine with A/B gating, an event-sourced store, outcome
//! statistics and a classroom simulator.

pub mod ids;
pub mod learner;
pub mod sim;
pub mod stats;
pub mod store;
pub mod tutor;
pub mod wordweb;

pub use ids::{AssetId, ClassId, GroupId, ItemId, LearnerId, WordId};
pub use learner::{Dimension, ModelParams, Phase, PhaseThresholds};
pub use tutor::{Engine, EngineConfig, TutorError};
pub use wordweb::{WordNode, WordWeb};
