//! Picture multiple-choice generation by graph traversal.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AssessmentItem, MediaKind, Result, WordWeb, WordWebError};
use crate::ids::{AssetId, ItemId, WordId};

/// Distractor words must sit at least this many hops from the target.
pub const MIN_DISTRACTOR_DISTANCE: usize = 2;
/// ...and at most this many.
pub const MAX_DISTRACTOR_DISTANCE: usize = 4;

impl WordWeb {
    fn usable_images(&self, word: &WordId) -> Vec<&AssetId> {
        self.word(word)
            .map(|node| {
                node.image_ids
                    .iter()
                    .filter(|id| {
                        self.media(id)
                            .is_some_and(|m| m.kind == MediaKind::Image && m.age_appropriate)
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Words eligible to supply a distractor image for `target`, in id order,
    /// each paired with its usable images that the target does not share.
    pub fn distractor_pool(&self, target: &WordId) -> Result<Vec<(WordId, Vec<AssetId>)>> {
        let node = self.require(target)?;
        let own: BTreeSet<&AssetId> = node.image_ids.iter().collect();
        let near_equivalent: BTreeSet<&WordId> = self
            .edges(target)
            .iter()
            .filter(|e| e.kind.is_near_equivalent())
            .map(|e| &e.to)
            .collect();
        let pool = self
            .distances(target, |_| true, MAX_DISTRACTOR_DISTANCE)
            .into_iter()
            .filter(|(id, d)| *d >= MIN_DISTRACTOR_DISTANCE && !near_equivalent.contains(id))
            .filter_map(|(id, _)| {
                let images: Vec<AssetId> = self
                    .usable_images(&id)
                    .into_iter()
                    .filter(|img| !own.contains(img))
                    .cloned()
                    .collect();
                (!images.is_empty()).then_some((id, images))
            })
            .collect();
        Ok(pool)
    }

    /// Builds an unverified picture question for `target`. The same seed
    /// always yields the same item.
    pub fn generate_picture_mcq(&self, target: &WordId, rng_seed: u64) -> Result<AssessmentItem> {
        let correct_pool = self.usable_images(target);
        if self.word(target).is_some() && correct_pool.is_empty() {
            return Err(WordWebError::InsufficientMedia(target.clone()));
        }
        let mut pool = self.distractor_pool(target)?;
        if pool.len() < 2 {
            return Err(WordWebError::InsufficientDistractors {
                word: target.clone(),
                found: pool.len(),
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let correct = correct_pool[rng.random_range(0..correct_pool.len())].clone();
        pool.shuffle(&mut rng);

        let (_, first_images) = &pool[0];
        let first = first_images[rng.random_range(0..first_images.len())].clone();
        let second = pool[1..].iter().find_map(|(_, images)| {
            let options: Vec<&AssetId> = images.iter().filter(|img| **img != first).collect();
            (!options.is_empty()).then(|| options[rng.random_range(0..options.len())].clone())
        });
        let Some(second) = second else {
            return Err(WordWebError::InsufficientDistractors {
                word: target.clone(),
                found: 1,
            });
        };

        Ok(AssessmentItem {
            item_id: ItemId::new(format!("mcq-{target}-{rng_seed}")),
            target_word_id: target.clone(),
            correct_image_id: correct,
            distractor_image_ids: [first, second],
            verified: false,
        })
    }
}
