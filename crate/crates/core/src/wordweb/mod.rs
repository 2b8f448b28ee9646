//! The knowledge layer: a graph of word/concept nodes joined by typed semantic
//! relations, with the image and video assets each word indexes.
//!
//! The graph is built once (from a JSON document or by successive
//! [`WordWeb::add_word`] calls) and is read-mostly afterwards. Traversals treat
//! relations as undirected: a `desert -> cactus` link makes each word a
//! neighbor of the other.

mod document;
mod mcq;
mod traversal;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AssetId, ItemId, WordId};

pub use document::WordWebDocument;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "camelCase")]
pub enum Tier {
    Tier2,
    Tier3,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WordNode {
    pub word_id: WordId,
    pub lemma: String,
    #[serde(default)]
    pub tier: Tier,
    #[serde(default)]
    pub definition: String,
    #[serde(default)]
    pub image_ids: Vec<AssetId>,
    #[serde(default)]
    pub video_ids: Vec<AssetId>,
    /// Stored for future assessment types; nothing consumes these yet.
    #[serde(default)]
    pub example_sentences: Vec<String>,
}

impl WordNode {
    pub fn new(word_id: impl Into<WordId>, lemma: impl Into<String>) -> Self {
        Self {
            word_id: word_id.into(),
            lemma: lemma.into(),
            tier: Tier::Other,
            definition: String::new(),
            image_ids: Vec::new(),
            video_ids: Vec::new(),
            example_sentences: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RelationKind {
    Synonym,
    Antonym,
    Hypernym,
    Hyponym,
    Related,
    Category,
}

impl RelationKind {
    pub const ALL: [RelationKind; 6] = [
        RelationKind::Synonym,
        RelationKind::Antonym,
        RelationKind::Hypernym,
        RelationKind::Hyponym,
        RelationKind::Related,
        RelationKind::Category,
    ];

    /// Kinds whose endpoints could pass as the same picture.
    pub fn is_near_equivalent(self) -> bool {
        matches!(
            self,
            RelationKind::Synonym | RelationKind::Hypernym | RelationKind::Hyponym
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Relation {
    pub from_word_id: WordId,
    pub to_word_id: WordId,
    pub kind: RelationKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MediaKind {
    Image,
    Video,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MediaAsset {
    pub asset_id: AssetId,
    pub kind: MediaKind,
    pub uri: String,
    #[serde(default)]
    pub age_appropriate: bool,
}

/// A "Which picture represents the word ...?" question with one correct
/// image and two distractors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssessmentItem {
    pub item_id: ItemId,
    pub target_word_id: WordId,
    pub correct_image_id: AssetId,
    pub distractor_image_ids: [AssetId; 2],
    pub verified: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum WordWebError {
    #[error("word `{0}` already exists")]
    DuplicateWord(WordId),
    #[error("word `{word}` is invalid: {reason}")]
    InvalidWord { word: WordId, reason: String },
    #[error("word `{word}` references unknown media `{asset}`")]
    DanglingMediaReference { word: WordId, asset: AssetId },
    #[error("media `{0}` already exists")]
    DuplicateMedia(AssetId),
    #[error("media `{asset}` is invalid: {reason}")]
    InvalidMedia { asset: AssetId, reason: String },
    #[error("relation {from} -> {to} is invalid: {reason}")]
    InvalidRelation {
        from: WordId,
        to: WordId,
        reason: String,
    },
    #[error("relation {from} -{kind:?}-> {to} already exists")]
    DuplicateRelation {
        from: WordId,
        to: WordId,
        kind: RelationKind,
    },
    #[error("unknown word `{0}`")]
    UnknownWord(WordId),
    #[error("traversal depth must be at least 1")]
    InvalidDepth,
    #[error("word `{0}` has no age-appropriate image")]
    InsufficientMedia(WordId),
    #[error("word `{word}` has {found} eligible distractor word(s), need 2")]
    InsufficientDistractors { word: WordId, found: usize },
    #[error("unknown assessment item `{0}`")]
    UnknownItem(ItemId),
    #[error("malformed word-web document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{section}[{index}]: {source}")]
    InvalidRecord {
        section: &'static str,
        index: usize,
        source: Box<WordWebError>,
    },
}

pub type Result<T, E = WordWebError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Edge {
    pub to: WordId,
    pub kind: RelationKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct WordWeb {
    words: BTreeMap<WordId, WordNode>,
    /// Insertion order, used as the curriculum order.
    order: Vec<WordId>,
    media: BTreeMap<AssetId, MediaAsset>,
    relations: Vec<Relation>,
    relation_keys: HashSet<(WordId, WordId, RelationKind)>,
    adjacency: BTreeMap<WordId, Vec<Edge>>,
    items: BTreeMap<ItemId, AssessmentItem>,
}

impl WordWeb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_media(&mut self, asset: MediaAsset) -> Result<()> {
        if asset.asset_id.as_str().is_empty() {
            return Err(WordWebError::InvalidMedia {
                asset: asset.asset_id,
                reason: "empty asset id".into(),
            });
        }
        if asset.uri.trim().is_empty() {
            return Err(WordWebError::InvalidMedia {
                asset: asset.asset_id,
                reason: "empty uri".into(),
            });
        }
        if self.media.contains_key(&asset.asset_id) {
            return Err(WordWebError::DuplicateMedia(asset.asset_id));
        }
        self.media.insert(asset.asset_id.clone(), asset);
        Ok(())
    }

    pub fn add_word(&mut self, node: WordNode) -> Result<()> {
        if node.word_id.as_str().is_empty() {
            return Err(WordWebError::InvalidWord {
                word: node.word_id,
                reason: "empty word id".into(),
            });
        }
        if node.lemma.trim().is_empty() {
            return Err(WordWebError::InvalidWord {
                word: node.word_id,
                reason: "empty lemma".into(),
            });
        }
        if self.words.contains_key(&node.word_id) {
            return Err(WordWebError::DuplicateWord(node.word_id));
        }
        let refs = node
            .image_ids
            .iter()
            .map(|id| (id, MediaKind::Image))
            .chain(node.video_ids.iter().map(|id| (id, MediaKind::Video)));
        for (asset_id, expected) in refs {
            match self.media.get(asset_id) {
                None => {
                    return Err(WordWebError::DanglingMediaReference {
                        word: node.word_id.clone(),
                        asset: asset_id.clone(),
                    })
                }
                Some(asset) if asset.kind != expected => {
                    return Err(WordWebError::InvalidWord {
                        word: node.word_id.clone(),
                        reason: format!("media `{asset_id}` is not of kind {expected:?}"),
                    })
                }
                Some(_) => {}
            }
        }
        self.order.push(node.word_id.clone());
        self.adjacency.entry(node.word_id.clone()).or_default();
        self.words.insert(node.word_id.clone(), node);
        Ok(())
    }

    pub fn add_relation(&mut self, relation: Relation) -> Result<()> {
        let Relation {
            from_word_id: from,
            to_word_id: to,
            kind,
            weight,
        } = &relation;
        let invalid = |reason: &str| WordWebError::InvalidRelation {
            from: from.clone(),
            to: to.clone(),
            reason: reason.into(),
        };
        if from == to {
            return Err(invalid("self-loop"));
        }
        if !(*weight > 0.0 && *weight <= 1.0) {
            return Err(invalid("weight must lie in (0, 1]"));
        }
        for id in [from, to] {
            if !self.words.contains_key(id) {
                return Err(WordWebError::UnknownWord(id.clone()));
            }
        }
        let key = (from.clone(), to.clone(), *kind);
        if self.relation_keys.contains(&key) {
            return Err(WordWebError::DuplicateRelation {
                from: from.clone(),
                to: to.clone(),
                kind: *kind,
            });
        }
        self.relation_keys.insert(key);
        for (a, b) in [(from, to), (to, from)] {
            self.adjacency.entry(a.clone()).or_default().push(Edge {
                to: b.clone(),
                kind: *kind,
                weight: *weight,
            });
        }
        self.relations.push(relation);
        Ok(())
    }

    pub fn word(&self, id: &WordId) -> Option<&WordNode> {
        self.words.get(id)
    }

    pub fn contains(&self, id: &WordId) -> bool {
        self.words.contains_key(id)
    }

    pub fn lemma<'a>(&'a self, id: &'a WordId) -> &'a str {
        self.words.get(id).map_or(id.as_str(), |w| w.lemma.as_str())
    }

    pub fn media(&self, id: &AssetId) -> Option<&MediaAsset> {
        self.media.get(id)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Word ids in curriculum (insertion) order.
    pub fn curriculum(&self) -> &[WordId] {
        &self.order
    }

    pub fn word_ids(&self) -> BTreeSet<WordId> {
        self.words.keys().cloned().collect()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn media_assets(&self) -> impl Iterator<Item = &MediaAsset> {
        self.media.values()
    }

    pub(crate) fn edges(&self, id: &WordId) -> &[Edge] {
        self.adjacency.get(id).map_or(&[], Vec::as_slice)
    }

    /// Ordering key used wherever ties are broken by lemma.
    pub fn lemma_key<'a>(&'a self, id: &'a WordId) -> (&'a str, &'a str) {
        (self.lemma(id), id.as_str())
    }

    fn require(&self, id: &WordId) -> Result<&WordNode> {
        self.words
            .get(id)
            .ok_or_else(|| WordWebError::UnknownWord(id.clone()))
    }

    /// Stores a generated item. Re-registering an identical item id keeps the
    /// existing verification status.
    pub fn register_item(&mut self, item: AssessmentItem) -> ItemId {
        let id = item.item_id.clone();
        self.items.entry(id.clone()).or_insert(item);
        id
    }

    pub fn verify_item(&mut self, item_id: &ItemId, approved: bool) -> Result<()> {
        let item = self
            .items
            .get_mut(item_id)
            .ok_or_else(|| WordWebError::UnknownItem(item_id.clone()))?;
        item.verified = approved;
        Ok(())
    }

    pub fn item(&self, item_id: &ItemId) -> Option<&AssessmentItem> {
        self.items.get(item_id)
    }

    /// Approved items for a word, in item-id order. Unverified items never
    /// appear here.
    pub fn servable_items<'a>(
        &'a self,
        word: &WordId,
    ) -> impl Iterator<Item = &'a AssessmentItem> + 'a {
        let word = word.clone();
        self.items
            .values()
            .filter(move |item| item.verified && item.target_word_id == word)
    }
}
