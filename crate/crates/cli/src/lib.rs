//! `tutor` command-line and HTTP front end.
//!
//! Exit codes: 0 on success, 1 when an input, argument or request is invalid,
//! 2 when reading or writing files fails or an event log is unreadable.

mod commands;
pub mod server;

use std::fmt;

pub use commands::{run, Cli, Command};

/// A failed command, tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub const VALIDATION: u8 = 1;
    pub const STORAGE: u8 = 2;

    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: Self::VALIDATION,
            error: error.into(),
        }
    }

    pub fn storage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: Self::STORAGE,
            error: error.into(),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            error: self.error.context(what.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Library errors often embed their source in the message already.
        let mut shown = String::new();
        for cause in self.error.chain() {
            let text = cause.to_string();
            if shown.contains(&text) {
                continue;
            }
            if !shown.is_empty() {
                shown.push_str(": ");
            }
            shown.push_str(&text);
        }
        f.write_str(&shown)
    }
}

impl From<vocab_tutor::store::StoreError> for Failure {
    fn from(e: vocab_tutor::store::StoreError) -> Self {
        use vocab_tutor::store::StoreError;
        match e {
            StoreError::InvalidPayload(_) => Failure::validation(e),
            StoreError::Storage(_) | StoreError::CorruptLog { .. } | StoreError::Parse { .. } => {
                Failure::storage(e)
            }
        }
    }
}

impl From<vocab_tutor::TutorError> for Failure {
    fn from(e: vocab_tutor::TutorError) -> Self {
        match e {
            vocab_tutor::TutorError::Store(s) => s.into(),
            other => Failure::validation(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::storage(e)
    }
}
