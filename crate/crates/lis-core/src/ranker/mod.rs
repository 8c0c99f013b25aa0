//! The stand-in production ranking model: hashed sparse logistic regression
//! with per-id embedding tables, trained by chronological SGD.
//!
//! Featurization maps an event onto (a) hashed categorical indices,
//! (b) embedding-dot interactions and (c) dense pass-through vectors. Leak
//! and dense slots take their values from an externally supplied
//! [`SlotValues`] map so that baseline and leaked arms share one code path
//! and cannot be confused silently: a declared slot with no supplied value
//! is an error, as is a supplied value with no declared slot.

mod auc;
mod model;

pub use auc::{auc_from_scores, evaluate_auc, score_events};
pub use model::{train, EventGradient, ModelSnapshot, RankModel, TrainConfig};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::InteractionEvent;
use crate::hash;

/// Marker token for absent categorical values; supplied-but-missing leak
/// values hash to this so event counts stay identical across arms.
pub const MISSING_TOKEN: &str = "__missing__";

/// Separator for multi-token categorical values ("12|77|3" hashes three
/// tokens into the same slot).
pub const TOKEN_SEPARATOR: char = '|';

/// One active feature slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    /// Hashed user id.
    UserId,
    /// Hashed item id (per-item linear weight).
    ItemIdWeight,
    /// Dot product of the user and item embedding rows.
    ItemIdEmbedding,
    /// Hashed categorical read from the event's own context map.
    Context(String),
    /// Hashed categorical supplied externally (a leaked feature).
    LeakToken(String),
    /// Leaked item id, scored as the dot of its item embedding with the
    /// candidate item's embedding.
    LeakItemEmbed(String),
    /// Leaked dense vector, scored against a learned weight vector.
    LeakDense { name: String, dim: usize },
    /// Non-leaked dense vector (e.g. an encoded content representation).
    Dense { name: String, dim: usize },
}

impl Slot {
    /// Unique key used for duplicate detection and hashing.
    pub fn key(&self) -> String {
        match self {
            Slot::UserId => "user_id".into(),
            Slot::ItemIdWeight => "item_id_weight".into(),
            Slot::ItemIdEmbedding => "item_id_embedding".into(),
            Slot::Context(n) => format!("context:{n}"),
            Slot::LeakToken(n) | Slot::LeakItemEmbed(n) => format!("leak:{n}"),
            Slot::LeakDense { name, .. } => format!("leak:{name}"),
            Slot::Dense { name, .. } => format!("dense:{name}"),
        }
    }

    /// Name under which a supplied value is looked up, if this slot takes one.
    pub fn supplied_name(&self) -> Option<&str> {
        match self {
            Slot::LeakToken(n) | Slot::LeakItemEmbed(n) => Some(n),
            Slot::LeakDense { name, .. } | Slot::Dense { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn is_leak(&self) -> bool {
        matches!(
            self,
            Slot::LeakToken(_) | Slot::LeakItemEmbed(_) | Slot::LeakDense { .. }
        )
    }
}

/// Active slots plus the sizes of the hashed table and the embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    /// Hashed weight table size; must be a power of two.
    pub hash_dim: usize,
    /// Item/user embedding width; dense side inputs stay under 100 dims.
    pub embed_dim: usize,
    pub slots: Vec<Slot>,
}

impl FeatureSchema {
    /// The leak-free schema every experiment starts from: hashed user id,
    /// hashed item id, and the user x item embedding interaction.
    pub fn baseline(hash_dim: usize, embed_dim: usize) -> Self {
        Self {
            hash_dim,
            embed_dim,
            slots: vec![Slot::UserId, Slot::ItemIdWeight, Slot::ItemIdEmbedding],
        }
    }

    pub fn with_slot(mut self, slot: Slot) -> Self {
        self.slots.push(slot);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.hash_dim.is_power_of_two() {
            return Err(Error::Schema(format!(
                "hash_dim must be a power of two, got {}",
                self.hash_dim
            )));
        }
        if self.embed_dim < 1 || self.embed_dim > 99 {
            return Err(Error::Schema(format!(
                "embed_dim must be in [1, 99], got {}",
                self.embed_dim
            )));
        }
        let mut seen = BTreeSet::new();
        for slot in &self.slots {
            if !seen.insert(slot.key()) {
                return Err(Error::Schema(format!("duplicate slot `{}`", slot.key())));
            }
        }
        Ok(())
    }

    /// True when no leak or dense slots are present.
    pub fn is_baseline(&self) -> bool {
        !self.slots.iter().any(|s| {
            matches!(
                s,
                Slot::LeakToken(_)
                    | Slot::LeakItemEmbed(_)
                    | Slot::LeakDense { .. }
                    | Slot::Dense { .. }
            )
        })
    }

    pub fn has_leak_slots(&self) -> bool {
        self.slots.iter().any(Slot::is_leak)
    }

    /// Names of slots that require supplied values.
    pub fn supplied_slot_names(&self) -> Vec<&str> {
        self.slots.iter().filter_map(Slot::supplied_name).collect()
    }
}

/// Externally supplied value for one leak or dense slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotValue {
    /// Explicit missing marker; hashed as [`MISSING_TOKEN`] for categorical
    /// slots and treated as an all-zero vector for dense ones.
    Missing,
    Token(String),
    Tokens(Vec<String>),
    Item(u64),
    Dense(Vec<f64>),
}

/// Per-event map from slot name to supplied value.
pub type SlotValues = BTreeMap<String, SlotValue>;

/// Featurized event, ready for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// (hashed index, value) pairs; indices may repeat.
    pub hashed: Vec<(usize, f64)>,
    /// (user id, item id) for the user x item embedding dot.
    pub user_item: Option<(u64, u64)>,
    /// (candidate item id, other item id) pairs scored as item-embedding dots.
    pub item_pairs: Vec<(u64, u64)>,
    /// (slot name, vector) dense inputs.
    pub dense: Vec<(String, Vec<f64>)>,
}

fn push_tokens(hashed: &mut Vec<(usize, f64)>, tag: &str, value: &str, hash_dim: usize) {
    for token in value.split(TOKEN_SEPARATOR) {
        hashed.push((hash::feature_index(tag, token, hash_dim), 1.0));
    }
}

/// Maps an event onto a [`FeatureVector`] under `schema`.
///
/// `supplied` carries values for leak/dense slots. Every declared leak or
/// dense slot must have an entry (use [`SlotValue::Missing`] explicitly);
/// every entry must match a declared slot.
pub fn featurize(
    event: &InteractionEvent,
    schema: &FeatureSchema,
    supplied: Option<&SlotValues>,
) -> Result<FeatureVector> {
    if let Some(values) = supplied {
        let declared = schema.supplied_slot_names();
        for name in values.keys() {
            if !declared.contains(&name.as_str()) {
                return Err(Error::UndeclaredLeakSlot(name.clone()));
            }
        }
    }

    let mut fv = FeatureVector {
        hashed: Vec::with_capacity(schema.slots.len() + 2),
        user_item: None,
        item_pairs: Vec::new(),
        dense: Vec::new(),
    };
    let dim = schema.hash_dim;

    for slot in &schema.slots {
        match slot {
            Slot::UserId => {
                let idx = hash::feature_index_u64("user_id", event.user_id, dim);
                fv.hashed.push((idx, 1.0));
            }
            Slot::ItemIdWeight => {
                let idx = hash::feature_index_u64("item_id", event.item_id, dim);
                fv.hashed.push((idx, 1.0));
            }
            Slot::ItemIdEmbedding => {
                fv.user_item = Some((event.user_id, event.item_id));
            }
            Slot::Context(name) => {
                let tag = slot.key();
                match event.context.get(name) {
                    Some(value) => push_tokens(&mut fv.hashed, &tag, value, dim),
                    None => push_tokens(&mut fv.hashed, &tag, MISSING_TOKEN, dim),
                }
            }
            Slot::LeakToken(name) => {
                let tag = slot.key();
                match required(supplied, name)? {
                    SlotValue::Missing => push_tokens(&mut fv.hashed, &tag, MISSING_TOKEN, dim),
                    SlotValue::Token(t) => push_tokens(&mut fv.hashed, &tag, t, dim),
                    SlotValue::Tokens(ts) if ts.is_empty() => {
                        push_tokens(&mut fv.hashed, &tag, MISSING_TOKEN, dim)
                    }
                    SlotValue::Tokens(ts) => {
                        for t in ts {
                            push_tokens(&mut fv.hashed, &tag, t, dim);
                        }
                    }
                    SlotValue::Item(id) => {
                        fv.hashed
                            .push((hash::feature_index_u64(&tag, *id, dim), 1.0));
                    }
                    SlotValue::Dense(_) => {
                        return Err(Error::Schema(format!(
                            "slot `{name}` is categorical but was given a dense value"
                        )))
                    }
                }
            }
            Slot::LeakItemEmbed(name) => match required(supplied, name)? {
                SlotValue::Missing => {}
                SlotValue::Item(id) => fv.item_pairs.push((event.item_id, *id)),
                other => {
                    return Err(Error::Schema(format!(
                        "slot `{name}` expects an item id, got {other:?}"
                    )))
                }
            },
            Slot::LeakDense { name, dim: d } | Slot::Dense { name, dim: d } => {
                match required(supplied, name)? {
                    SlotValue::Missing => fv.dense.push((name.clone(), vec![0.0; *d])),
                    SlotValue::Dense(v) => {
                        if v.len() != *d {
                            return Err(Error::DenseDimMismatch {
                                slot: name.clone(),
                                expected: *d,
                                got: v.len(),
                            });
                        }
                        fv.dense.push((name.clone(), v.clone()));
                    }
                    other => {
                        return Err(Error::Schema(format!(
                            "slot `{name}` expects a dense vector, got {other:?}"
                        )))
                    }
                }
            }
        }
    }
    Ok(fv)
}

fn required<'a>(supplied: Option<&'a SlotValues>, name: &str) -> Result<&'a SlotValue> {
    supplied
        .and_then(|m| m.get(name))
        .ok_or_else(|| Error::MissingLeakValue(name.to_string()))
}
