//! Distills reliable item embeddings into a content encoder and measures
//! the downstream value of the encoded content on items the alignment data
//! never contained.
//!
//! The alignment set keeps only items whose embeddings received enough
//! gradient updates to be trustworthy. The encoder maps content vectors
//! onto embedding space under a cosine loss, validated by mean recall@k.
//! [`downstream_eval`] then runs a later, item-disjoint period three ways:
//! plain baseline, baseline + encoded content, and baseline + raw embedding
//! lookups (which all miss by construction).

mod downstream;
mod encoder;

pub use downstream::{downstream_eval, DownstreamReport};
pub use encoder::{mean_recall, train_encoder, ContentEncoder, EncoderHyper, RecallReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::ItemContentTable;
use crate::ranker::ModelSnapshot;

/// One (item, content, target-embedding) training triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignPair {
    pub item_id: u64,
    pub content: Vec<f64>,
    pub target: Vec<f64>,
}

/// Items whose snapshot embeddings passed the update-count filter, paired
/// with their content vectors. Items are unique and sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentDataset {
    pub pairs: Vec<AlignPair>,
    pub min_updates: u64,
}

impl AlignmentDataset {
    pub fn content_dim(&self) -> usize {
        self.pairs.first().map_or(0, |p| p.content.len())
    }

    pub fn target_dim(&self) -> usize {
        self.pairs.first().map_or(0, |p| p.target.len())
    }

    pub fn item_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.pairs.iter().map(|p| p.item_id)
    }
}

/// Pairs every item holding at least `min_updates` updates in the snapshot
/// with its content vector. Errors when the filter leaves nothing.
pub fn build_alignment_data(
    snap: &ModelSnapshot,
    content: &ItemContentTable,
    min_updates: u64,
) -> Result<AlignmentDataset> {
    let mut pairs = Vec::new();
    for (item_id, embedding) in &snap.item_embeddings {
        let updates = snap.update_counts.get(item_id).copied().unwrap_or(0);
        if updates < min_updates {
            continue;
        }
        if let Some(row) = content.get(*item_id) {
            pairs.push(AlignPair {
                item_id: *item_id,
                content: row.to_vec(),
                target: embedding.clone(),
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::FilterTooStrict { min_updates });
    }
    Ok(AlignmentDataset { pairs, min_updates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn snapshot(items: &[(u64, u64)]) -> ModelSnapshot {
        let mut item_embeddings = BTreeMap::new();
        let mut update_counts = BTreeMap::new();
        for &(id, updates) in items {
            item_embeddings.insert(id, vec![id as f64, 1.0]);
            update_counts.insert(id, updates);
        }
        ModelSnapshot {
            date_tag: 100,
            embed_dim: 2,
            item_embeddings,
            update_counts,
        }
    }

    fn content_for(ids: &[u64]) -> ItemContentTable {
        let mut t = ItemContentTable::new(3);
        for &id in ids {
            t.insert(id, vec![id as f64; 3]).unwrap();
        }
        t
    }

    #[test]
    fn zero_threshold_keeps_full_intersection() {
        let snap = snapshot(&[(1, 5), (2, 50), (3, 500)]);
        let content = content_for(&[1, 2, 4]); // 3 has no content, 4 no embedding
        let data = build_alignment_data(&snap, &content, 0).unwrap();
        let ids: Vec<u64> = data.item_ids().collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn threshold_filters_by_update_count() {
        let snap = snapshot(&[(1, 5), (2, 50), (3, 500)]);
        let content = content_for(&[1, 2, 3]);
        let data = build_alignment_data(&snap, &content, 50).unwrap();
        let ids: Vec<u64> = data.item_ids().collect();
        assert_eq!(ids, vec![2, 3]);
    }

    #[test]
    fn over_strict_filter_errors() {
        let snap = snapshot(&[(1, 5), (2, 50)]);
        let content = content_for(&[1, 2]);
        let err = build_alignment_data(&snap, &content, 51).unwrap_err();
        assert!(matches!(err, Error::FilterTooStrict { min_updates: 51 }));
    }
}
