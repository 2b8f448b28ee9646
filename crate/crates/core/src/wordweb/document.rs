//! JSON ingestion format: `{ "words": [...], "relations": [...], "media": [...] }`.

use serde::{Deserialize, Serialize};

use super::{MediaAsset, Relation, RelationKind, Result, WordNode, WordWeb, WordWebError};
use crate::ids::WordId;

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationRecord {
    pub from_word_id: WordId,
    pub to_word_id: WordId,
    pub kind: RelationKind,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordWebDocument {
    #[serde(default)]
    pub words: Vec<WordNode>,
    #[serde(default)]
    pub relations: Vec<RelationRecord>,
    #[serde(default)]
    pub media: Vec<MediaAsset>,
}

fn in_record(section: &'static str, index: usize) -> impl FnOnce(WordWebError) -> WordWebError {
    move |source| WordWebError::InvalidRecord {
        section,
        index,
        source: Box::new(source),
    }
}

impl WordWeb {
    pub fn from_document(doc: WordWebDocument) -> Result<Self> {
        let mut web = WordWeb::new();
        for (i, asset) in doc.media.into_iter().enumerate() {
            web.add_media(asset).map_err(in_record("media", i))?;
        }
        for (i, word) in doc.words.into_iter().enumerate() {
            web.add_word(word).map_err(in_record("words", i))?;
        }
        for (i, rel) in doc.relations.into_iter().enumerate() {
            web.add_relation(Relation {
                from_word_id: rel.from_word_id,
                to_word_id: rel.to_word_id,
                kind: rel.kind,
                weight: rel.weight,
            })
            .map_err(in_record("relations", i))?;
        }
        Ok(web)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: WordWebDocument =
            serde_json::from_str(text).map_err(|e| WordWebError::Malformed {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        Self::from_document(doc)
    }

    /// Serializable form; words keep curriculum order.
    pub fn to_document(&self) -> WordWebDocument {
        WordWebDocument {
            words: self
                .curriculum()
                .iter()
                .filter_map(|id| self.word(id).cloned())
                .collect(),
            relations: self
                .relations()
                .iter()
                .map(|r| RelationRecord {
                    from_word_id: r.from_word_id.clone(),
                    to_word_id: r.to_word_id.clone(),
                    kind: r.kind,
                    weight: r.weight,
                })
                .collect(),
            media: self.media_assets().cloned().collect(),
        }
    }
}
