//! A/B group assignment and online re-gating.

use std::collections::BTreeSet;

use super::{Engine, Result, TutorError};
use crate::ids::{GroupId, LearnerId, WordId};
use crate::store::{EventBody, GroupAssignment, GroupRemoval};

impl Engine {
    /// Puts `learners` into `group` with the given word sets. Re-using an
    /// existing group id replaces its word sets and adds the learners; the
    /// new gating applies to the very next selection.
    pub fn assign_words_to_learner_group(
        &mut self,
        group: GroupId,
        learners: BTreeSet<LearnerId>,
        learnable: BTreeSet<WordId>,
        assessable: BTreeSet<WordId>,
    ) -> Result<()> {
        if group.as_str().is_empty() {
            return Err(TutorError::InvalidArgument("empty group id".into()));
        }
        if !learnable.is_subset(&assessable) {
            let stray: Vec<&str> = learnable
                .difference(&assessable)
                .map(WordId::as_str)
                .collect();
            return Err(TutorError::InvalidWordSets(format!(
                "learnable words not assessable: {}",
                stray.join(", ")
            )));
        }
        if let Some(unknown) = assessable.iter().find(|w| !self.web().contains(w)) {
            return Err(TutorError::UnknownWord(unknown.clone()));
        }
        for learner in &learners {
            self.record(learner)?;
            if let Some(current) = self.state().membership.get(learner) {
                if current != &group {
                    return Err(TutorError::ConflictingAssignment {
                        learner: learner.clone(),
                        group: current.clone(),
                    });
                }
            }
        }
        self.commit(EventBody::GroupAssignment(GroupAssignment {
            group_id: group,
            learner_ids: learners,
            learnable_word_set: learnable,
            assessable_word_set: assessable,
        }))?;
        Ok(())
    }

    pub fn remove_from_group(&mut self, group: &GroupId, learner: &LearnerId) -> Result<()> {
        self.record(learner)?;
        if self.state().membership.get(learner) != Some(group) {
            return Err(TutorError::NotInGroup {
                learner: learner.clone(),
                group: group.clone(),
            });
        }
        self.commit(EventBody::GroupRemoval(GroupRemoval {
            group_id: group.clone(),
            learner_id: learner.clone(),
        }))?;
        Ok(())
    }
}
