use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{RelationKind, Result, WordWeb, WordWebError};
use crate::ids::WordId;

impl WordWeb {
    /// Breadth-first neighborhood of `word` over relations of the given kinds.
    ///
    /// Each reachable word is reported once, at its minimum depth, sorted by
    /// `(depth, lemma)`. The start word itself is not included.
    pub fn neighbors(
        &self,
        word: &WordId,
        kinds: &BTreeSet<RelationKind>,
        max_depth: usize,
    ) -> Result<Vec<(WordId, usize)>> {
        self.require(word)?;
        if max_depth == 0 {
            return Err(WordWebError::InvalidDepth);
        }
        let mut found: Vec<(WordId, usize)> = self
            .distances(word, |kind| kinds.contains(&kind), max_depth)
            .into_iter()
            .filter(|(id, _)| id != word)
            .collect();
        found.sort_by(|(a, da), (b, db)| {
            da.cmp(db)
                .then_with(|| self.lemma_key(a).cmp(&self.lemma_key(b)))
        });
        Ok(found)
    }

    /// Hop distances from `start` (inclusive, at 0) up to `max_depth`.
    pub(crate) fn distances(
        &self,
        start: &WordId,
        follow: impl Fn(RelationKind) -> bool,
        max_depth: usize,
    ) -> BTreeMap<WordId, usize> {
        let mut dist = BTreeMap::new();
        dist.insert(start.clone(), 0);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(current) = queue.pop_front() {
            let depth = dist[&current];
            if depth == max_depth {
                continue;
            }
            for edge in self.edges(&current) {
                if follow(edge.kind) && !dist.contains_key(&edge.to) {
                    dist.insert(edge.to.clone(), depth + 1);
                    queue.push_back(edge.to.clone());
                }
            }
        }
        dist
    }

    /// Candidates outside `seeds` ranked by the summed weight of their
    /// relations to any seed, heaviest first, ties by lemma. Only words with
    /// at least one relation to a seed and accepted by `eligible` are ranked.
    pub fn rank_related(
        &self,
        seeds: &BTreeSet<WordId>,
        eligible: impl Fn(&WordId) -> bool,
    ) -> Result<Vec<(WordId, f64)>> {
        for seed in seeds {
            self.require(seed)?;
        }
        let mut totals: BTreeMap<&WordId, f64> = BTreeMap::new();
        for seed in seeds {
            for edge in self.edges(seed) {
                if !seeds.contains(&edge.to) && eligible(&edge.to) {
                    *totals.entry(&edge.to).or_insert(0.0) += edge.weight;
                }
            }
        }
        let mut ranked: Vec<(WordId, f64)> =
            totals.into_iter().map(|(id, w)| (id.clone(), w)).collect();
        ranked.sort_by(|(a, wa), (b, wb)| {
            wb.total_cmp(wa)
                .then_with(|| self.lemma_key(a).cmp(&self.lemma_key(b)))
        });
        Ok(ranked)
    }

    /// The top-`k` related-word expansion of `seeds`. Returns fewer than `k`
    /// words once the candidate pool is exhausted.
    pub fn related_expansion(&self, seeds: &BTreeSet<WordId>, k: usize) -> Result<Vec<WordId>> {
        Ok(self
            .rank_related(seeds, |_| true)?
            .into_iter()
            .take(k)
            .map(|(id, _)| id)
            .collect())
    }
}
