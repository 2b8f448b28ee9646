//! Teacher-facing insight reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{ClassId, LearnerId, WordId};
use crate::learner::{Dimension, Phase};
use crate::tutor::{Engine, TutorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LearnerWordStatus {
    pub word_id: WordId,
    pub phase: Phase,
    pub score: f64,
    pub assessment_count: u32,
}

/// Every word for one learner, sorted by phase then descending score.
pub fn word_status_for_learner(
    engine: &Engine,
    learner: &LearnerId,
    dim: Dimension,
) -> Result<Vec<LearnerWordStatus>, TutorError> {
    let record = engine.learner(learner)?;
    let web = engine.web();
    let mut rows: Vec<LearnerWordStatus> = record
        .book
        .states(dim)
        .map(|s| LearnerWordStatus {
            word_id: s.word_id.clone(),
            phase: s.phase,
            score: s.score,
            assessment_count: s.assessment_count,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.phase
            .cmp(&b.phase)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| web.lemma_key(&a.word_id).cmp(&web.lemma_key(&b.word_id)))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassWordStatus {
    pub word_id: WordId,
    /// Mean learner score across the class.
    pub mean_score: f64,
    pub phase_histogram: BTreeMap<Phase, usize>,
    /// Pooled fraction of correct responses; `None` when nobody was assessed.
    pub correct_rate: Option<f64>,
    pub responses: u64,
    /// 1 = weakest word, first candidate for manual intervention.
    pub intervention_priority_rank: usize,
}

/// Per-word class summary ordered by intervention priority: lowest correct
/// rate first, ties by lemma, never-assessed words last.
pub fn word_status_for_class(
    engine: &Engine,
    class: &ClassId,
    dim: Dimension,
) -> Result<Vec<ClassWordStatus>, TutorError> {
    let members = engine.class_members(class);
    if members.is_empty() {
        return Err(TutorError::UnknownClass(class.clone()));
    }
    let web = engine.web();
    let mut rows = Vec::with_capacity(web.len());
    for word in web.curriculum() {
        let mut histogram: BTreeMap<Phase, usize> =
            Phase::ALL.into_iter().map(|p| (p, 0)).collect();
        let mut score_sum = 0.0;
        let mut correct = 0.0;
        let mut responses = 0u64;
        for learner in &members {
            let st = engine.word_state(learner, word, dim)?;
            *histogram.entry(st.phase).or_default() += 1;
            score_sum += st.score;
            correct += st.correct_total;
            responses += u64::from(st.assessment_count);
        }
        rows.push(ClassWordStatus {
            word_id: word.clone(),
            mean_score: score_sum / members.len() as f64,
            phase_histogram: histogram,
            correct_rate: (responses > 0).then(|| correct / responses as f64),
            responses,
            intervention_priority_rank: 0,
        });
    }
    rows.sort_by(|a, b| {
        let rate = |r: &ClassWordStatus| r.correct_rate.unwrap_or(f64::INFINITY);
        rate(a)
            .total_cmp(&rate(b))
            .then_with(|| web.lemma_key(&a.word_id).cmp(&web.lemma_key(&b.word_id)))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.intervention_priority_rank = i + 1;
    }
    Ok(rows)
}
