//! Event-sourced persistence and insight reports.
//!
//! Every state change in the [`Engine`](crate::tutor::Engine) goes through an
//! [`Event`] appended to an [`EventLog`]; replaying the log against the same
//! word web and configuration rebuilds the engine state exactly.

mod event;
mod log;
mod reports;

use std::sync::Arc;

use thiserror::Error;

use crate::tutor::{Engine, EngineConfig};
use crate::wordweb::WordWeb;

pub use event::{
    AssessmentResponse, Event, EventBody, EventKind, GroupAssignment, GroupRemoval,
    LearnerRegistered, LearningExposure, PhaseChange, PhaseChangeCause, WordIntroduction,
};
pub use log::{read_jsonl, read_jsonl_file, EventLog};
pub use reports::{
    word_status_for_class, word_status_for_learner, ClassWordStatus, LearnerWordStatus,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("invalid event payload: {0}")]
    InvalidPayload(String),
    #[error("corrupt log at sequence {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
    #[error("unparseable log line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Rebuilds engine state from a log. The returned engine holds an in-memory
/// copy of the replayed events.
pub fn replay(
    web: Arc<WordWeb>,
    config: EngineConfig,
    events: &[Event],
) -> Result<Engine, StoreError> {
    Engine::replay(web, config, events)
}
