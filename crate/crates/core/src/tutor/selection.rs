//! Working-set refill and word selection.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{Engine, Result, TutorError};
use crate::ids::{LearnerId, WordId};
use crate::learner::{Dimension, LearnerWordState, Phase};
use crate::store::{EventBody, PhaseChange, PhaseChangeCause};

/// Largest-remainder apportionment of `n` slots over `fractions` (which sum
/// to 1). Equal remainders favor the earlier bucket.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    // Absorb representation error such as 10 * 0.3 = 3.0000000000000004.
    const SLACK: f64 = 1e-9;
    let exact: Vec<f64> = fractions.iter().map(|f| n as f64 * f).collect();
    let mut counts: Vec<usize> = exact.iter().map(|q| (q + SLACK).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    let remainder = |i: usize| (exact[i] - counts[i] as f64).max(0.0);
    order.sort_by(|&a, &b| {
        let (ra, rb) = (remainder(a), remainder(b));
        if (ra - rb).abs() <= SLACK {
            a.cmp(&b)
        } else {
            rb.partial_cmp(&ra).unwrap_or(Ordering::Equal)
        }
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

impl Engine {
    fn learnable_working_count(&self, learner: &LearnerId, dim: Dimension) -> Result<usize> {
        let record = self.record(learner)?;
        Ok(record
            .book
            .states(dim)
            .filter(|s| s.phase.in_working_set() && self.is_learnable(learner, &s.word_id))
            .count())
    }

    fn refill_candidate(&self, learner: &LearnerId, dim: Dimension) -> Result<Option<WordId>> {
        let record = self.record(learner)?;
        let eligible = |w: &WordId| {
            record
                .book
                .state(dim, w)
                .is_some_and(|s| s.phase == Phase::Parked)
                && self.is_learnable(learner, w)
        };
        if let Some(w) = record
            .queues
            .get(&dim)
            .and_then(|q| q.iter().find(|w| eligible(w)))
        {
            return Ok(Some(w.clone()));
        }
        let seeds: BTreeSet<WordId> = record
            .book
            .states(dim)
            .filter(|s| matches!(s.phase, Phase::Learned | Phase::AssessmentOnly))
            .map(|s| s.word_id.clone())
            .collect();
        if !seeds.is_empty() {
            let ranked = self
                .web()
                .rank_related(&seeds, eligible)
                .map_err(|e| TutorError::InvalidArgument(e.to_string()))?;
            if let Some((w, _)) = ranked.into_iter().next() {
                return Ok(Some(w));
            }
        }
        Ok(self
            .web()
            .curriculum()
            .iter()
            .find(|w| eligible(w))
            .cloned())
    }

    /// Promotes parked words until the learnable working set reaches the
    /// target size or no eligible parked word is left. Returns the number
    /// promoted.
    pub fn refill_working_set(&mut self, learner: &LearnerId, dim: Dimension) -> Result<usize> {
        let mut size = self.learnable_working_count(learner, dim)?;
        let mut promoted = 0;
        while size < self.config().target_size {
            let Some(word) = self.refill_candidate(learner, dim)? else {
                break;
            };
            self.commit(EventBody::PhaseChange(PhaseChange {
                learner_id: learner.clone(),
                word_id: word,
                dimension: dim,
                from: Phase::Parked,
                to: Phase::Learning,
                cause: PhaseChangeCause::Promotion,
            }))?;
            size += 1;
            promoted += 1;
        }
        Ok(promoted)
    }

    /// Up to `n` learning-phase words the learner may study, weakest first.
    pub fn next_learning_words(
        &mut self,
        learner: &LearnerId,
        dim: Dimension,
        n: usize,
    ) -> Result<Vec<WordId>> {
        if self.learnable_working_count(learner, dim)? < self.config().target_size {
            self.refill_working_set(learner, dim)?;
        }
        let record = self.record(learner)?;
        let web = self.web();
        let mut words: Vec<&LearnerWordState> = record
            .book
            .states(dim)
            .filter(|s| s.phase == Phase::Learning && self.is_learnable(learner, &s.word_id))
            .collect();
        words.sort_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then_with(|| web.lemma_key(&a.word_id).cmp(&web.lemma_key(&b.word_id)))
        });
        Ok(words
            .into_iter()
            .take(n)
            .map(|s| s.word_id.clone())
            .collect())
    }

    /// Candidate words for assessment split into the assessment-only,
    /// learning and learned buckets, each least-recently-assessed first.
    ///
    /// For experiment learners, parked words that are assessable but not
    /// learnable join the assessment-only bucket: they receive no learning
    /// activity by design, and assessing them is what yields control data.
    pub fn assessment_buckets(
        &self,
        learner: &LearnerId,
        dim: Dimension,
    ) -> Result<[Vec<WordId>; 3]> {
        let record = self.record(learner)?;
        let web = self.web();
        let in_group = self.group_of(learner).is_some();
        let mut buckets: [Vec<&LearnerWordState>; 3] = Default::default();
        for state in record.book.states(dim) {
            if !self.is_assessable(learner, &state.word_id) {
                continue;
            }
            let slot = match state.phase {
                Phase::AssessmentOnly => 0,
                Phase::Learning => 1,
                Phase::Learned => 2,
                Phase::Parked if in_group && !self.is_learnable(learner, &state.word_id) => 0,
                Phase::Parked => continue,
            };
            buckets[slot].push(state);
        }
        Ok(buckets.map(|mut bucket| {
            bucket.sort_by(|a, b| {
                a.last_assessed
                    .cmp(&b.last_assessed)
                    .then_with(|| web.lemma_key(&a.word_id).cmp(&web.lemma_key(&b.word_id)))
            });
            bucket.into_iter().map(|s| s.word_id.clone()).collect()
        }))
    }

    /// Up to `n` words blending the three buckets per the blend policy, with
    /// shortfalls backfilled in assessment-only, learning, learned order.
    pub fn next_assessment_words(
        &self,
        learner: &LearnerId,
        dim: Dimension,
        n: usize,
    ) -> Result<Vec<WordId>> {
        if n == 0 {
            return Err(TutorError::InvalidArgument("n must be at least 1".into()));
        }
        let buckets = self.assessment_buckets(learner, dim)?;
        let quotas = apportion(n, &self.config().blend.fractions());
        let mut take: Vec<usize> = quotas
            .iter()
            .zip(&buckets)
            .map(|(q, b)| (*q).min(b.len()))
            .collect();
        let mut shortfall = n - take.iter().sum::<usize>();
        for (t, bucket) in take.iter_mut().zip(&buckets) {
            let extra = shortfall.min(bucket.len() - *t);
            *t += extra;
            shortfall -= extra;
        }
        Ok(buckets
            .iter()
            .zip(take)
            .flat_map(|(bucket, t)| bucket[..t].iter().cloned())
            .collect())
    }
}
