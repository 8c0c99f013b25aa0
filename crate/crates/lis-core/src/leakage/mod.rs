//! Deliberate temporal-leak construction and the paired LIS evaluation.
//!
//! Three informative leak kinds plus two diagnostic probes:
//!
//! * `next_click` — each event is told the item its user clicks next,
//!   strictly after the event's own timestamp.
//! * `future_embedding(n)` — the baseline model's item embedding table is
//!   swapped for a snapshot taken n days past the training cutoff, with no
//!   retraining.
//! * `similar_items(k)` — each item is told its top-k co-click neighbors,
//!   computed over the full (future-inclusive) log.
//! * `oracle_probability` — scores eval events by the generator's true click
//!   probabilities; the Bayes upper bound no constructed leak can beat.
//! * `constant_probe` / `self_item` — null probes carrying no information
//!   beyond what the baseline already has; their LIS should be negligible.

mod lis;

pub use lis::{compute_lis, LeakSource, LisOptions, LISReport};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::ranker::{ModelSnapshot, RankModel};

/// Which leak to inject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeakSpec {
    /// The user's next clicked item after each event.
    NextClick,
    /// Item embeddings from a model trained `horizon_days` past the cutoff.
    FutureEmbedding { horizon_days: u32 },
    /// Top-k co-click neighbors from the full log.
    SimilarItems { k: usize },
    /// Ground-truth click probability from the generator sidecar.
    OracleProbability,
    /// The same token for every event; an uninformative control.
    ConstantProbe,
    /// The event's own item id, re-supplied through the leak channel; the
    /// baseline already has this feature, so the leak is redundant.
    SelfItem,
}

impl LeakSpec {
    /// Stable label used in reports and file names.
    pub fn label(&self) -> String {
        match self {
            LeakSpec::NextClick => "next_click".into(),
            LeakSpec::FutureEmbedding { horizon_days } => {
                format!("future_embedding_n{horizon_days}")
            }
            LeakSpec::SimilarItems { k } => format!("similar_items_k{k}"),
            LeakSpec::OracleProbability => "oracle_probability".into(),
            LeakSpec::ConstantProbe => "constant_probe".into(),
            LeakSpec::SelfItem => "self_item".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LeakSpec::FutureEmbedding { horizon_days } if *horizon_days < 1 => Err(
                Error::InvalidConfig("future_embedding horizon_days must be >= 1".into()),
            ),
            LeakSpec::SimilarItems { k } if *k < 1 => {
                Err(Error::InvalidConfig("similar_items k must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for LeakSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// For each target event, the item id of that user's earliest click strictly
/// after the event's timestamp, or None when no such click exists in
/// `full_log`. Output is parallel to `targets`.
///
/// Users absent from `full_log` simply get None; ties on the earliest future
/// timestamp resolve to the click that appears first in the (stable-sorted)
/// full log.
pub fn inject_next_click(full_log: &EventLog, targets: &EventLog) -> Vec<Option<u64>> {
    let mut clicks_by_user: HashMap<u64, Vec<(i64, u64)>> = HashMap::new();
    for ev in full_log {
        if ev.label == 1 {
            clicks_by_user
                .entry(ev.user_id)
                .or_default()
                .push((ev.timestamp, ev.item_id));
        }
    }
    targets
        .iter()
        .map(|ev| {
            clicks_by_user.get(&ev.user_id).and_then(|clicks| {
                let idx = clicks.partition_point(|&(t, _)| t <= ev.timestamp);
                clicks.get(idx).map(|&(_, item)| item)
            })
        })
        .collect()
}

/// Item-item similarity over co-click user incidence vectors, computed from
/// the entire log: `sim(i, j) = |U_i n U_j| / sqrt(|U_i| |U_j|)` where `U_i`
/// is the set of users who clicked item i. Returns the top-k neighbors per
/// item (descending similarity, ties to the smaller item id). Items sharing
/// no user with any other item map to empty lists.
pub fn build_similar_items(full_log: &EventLog, k: usize) -> Result<BTreeMap<u64, Vec<u64>>> {
    if k == 0 {
        return Err(Error::InvalidConfig("similar_items k must be >= 1".into()));
    }
    // Distinct clicked items per user.
    let mut user_items: HashMap<u64, Vec<u64>> = HashMap::new();
    for ev in full_log {
        if ev.label == 1 {
            let items = user_items.entry(ev.user_id).or_default();
            if !items.contains(&ev.item_id) {
                items.push(ev.item_id);
            }
        }
    }

    let mut click_users: HashMap<u64, u64> = HashMap::new();
    let mut co_counts: HashMap<(u64, u64), u64> = HashMap::new();
    for items in user_items.values_mut() {
        items.sort_unstable();
        for (a_idx, &a) in items.iter().enumerate() {
            *click_users.entry(a).or_insert(0) += 1;
            for &b in &items[a_idx + 1..] {
                *co_counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }

    let mut neighbors: BTreeMap<u64, Vec<(f64, u64)>> = BTreeMap::new();
    for item in full_log.item_ids() {
        neighbors.insert(item, Vec::new());
    }
    for (&(a, b), &co) in &co_counts {
        let sim = co as f64 / ((click_users[&a] as f64).sqrt() * (click_users[&b] as f64).sqrt());
        neighbors.get_mut(&a).expect("item present").push((sim, b));
        neighbors.get_mut(&b).expect("item present").push((sim, a));
    }

    let mut out = BTreeMap::new();
    for (item, mut cands) in neighbors {
        cands.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .expect("finite similarity")
                .then(x.1.cmp(&y.1))
        });
        cands.truncate(k);
        out.insert(item, cands.into_iter().map(|(_, id)| id).collect());
    }
    Ok(out)
}

/// Neighbor lists rendered as multi-token categorical values
/// (`"12|77|3"`), keyed by item. Items with no neighbors are omitted so the
/// featurizer falls back to the explicit missing marker.
pub fn similar_items_tokens(neighbors: &BTreeMap<u64, Vec<u64>>) -> BTreeMap<u64, String> {
    neighbors
        .iter()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(item, ids)| {
            let toks: Vec<String> = ids.iter().map(u64::to_string).collect();
            (*item, toks.join("|"))
        })
        .collect()
}

/// Attaches a temporally clean collaborative feature: top-k co-click
/// neighbors computed from the TRAIN log only, written into the context of
/// both logs under `slot`. This is the baseline-side analogue of the
/// similar-items leak — items the ranking model can already relate on its
/// own — used to probe whether the leaked version adds anything.
pub fn attach_co_click_feature(
    train: &EventLog,
    eval: &EventLog,
    k: usize,
    slot: &str,
) -> Result<(EventLog, EventLog)> {
    let tokens = similar_items_tokens(&build_similar_items(train, k)?);
    Ok((
        train.with_context_slot(slot, &tokens),
        eval.with_context_slot(slot, &tokens),
    ))
}

/// Returns a copy of `model` whose item embedding rows are replaced by the
/// snapshot's rows for every item the snapshot holds (including items the
/// model never saw). Everything else — linear weights, user embeddings,
/// bias, counts, cutoff — is untouched, and no retraining occurs.
pub fn substitute_future_embeddings(
    model: &RankModel,
    snap_future: &ModelSnapshot,
) -> Result<RankModel> {
    if snap_future.embed_dim != model.schema().embed_dim {
        return Err(Error::EmbedDimMismatch {
            model: model.schema().embed_dim,
            snapshot: snap_future.embed_dim,
        });
    }
    if snap_future.date_tag <= model.cutoff_date() {
        return Err(Error::SnapshotNotFuture {
            snapshot: snap_future.date_tag,
            cutoff: model.cutoff_date(),
        });
    }
    let mut out = model.clone();
    out.replace_item_embedding_rows(&snap_future.item_embeddings);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::InteractionEvent;
    use crate::ranker::{train, FeatureSchema, TrainConfig};

    fn log(rows: &[(u64, u64, i64, u8)]) -> EventLog {
        EventLog::from_events(
            rows.iter()
                .map(|&(u, i, t, l)| InteractionEvent::new(u, i, t, l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn next_click_returns_strictly_later_click() {
        // user 1 clicks item 100 @ t1 and item 200 @ t3; impression @ t2
        let full = log(&[(1, 100, 1, 1), (1, 300, 2, 0), (1, 200, 3, 1)]);
        let targets = log(&[(1, 300, 2, 0)]);
        assert_eq!(inject_next_click(&full, &targets), vec![Some(200)]);
    }

    #[test]
    fn next_click_at_same_timestamp_is_excluded() {
        let full = log(&[(1, 100, 2, 1), (1, 200, 5, 1)]);
        let targets = log(&[(1, 100, 2, 1)]);
        // the click at t=2 is not strictly later; the t=5 click is
        assert_eq!(inject_next_click(&full, &targets), vec![Some(200)]);
    }

    #[test]
    fn next_click_missing_when_no_future_click() {
        let full = log(&[(1, 100, 1, 1), (2, 200, 5, 0)]);
        let targets = log(&[(1, 100, 1, 1), (2, 200, 5, 0), (3, 300, 2, 0)]);
        // user 1 has no click after t=1; user 2 never clicks; user 3 unknown
        assert_eq!(inject_next_click(&full, &targets), vec![None, None, None]);
    }

    #[test]
    fn similar_items_identical_user_sets_are_mutual_top1() {
        // items 10 and 20 clicked by exactly users {1, 2}; item 30 by user 3
        let full = log(&[
            (1, 10, 0, 1),
            (1, 20, 1, 1),
            (2, 10, 2, 1),
            (2, 20, 3, 1),
            (3, 30, 4, 1),
        ]);
        let nbrs = build_similar_items(&full, 2).unwrap();
        assert_eq!(nbrs[&10], vec![20]);
        assert_eq!(nbrs[&20], vec![10]);
        // item 30 shares no user with anything
        assert!(nbrs[&30].is_empty());
    }

    #[test]
    fn similar_items_ties_break_to_smaller_id() {
        // items 5 and 6 both co-clicked once with item 1 by the same pattern
        let full = log(&[
            (1, 1, 0, 1),
            (1, 5, 1, 1),
            (2, 1, 2, 1),
            (2, 6, 3, 1),
            (3, 5, 4, 1),
            (4, 6, 5, 1),
        ]);
        let nbrs = build_similar_items(&full, 1).unwrap();
        // sim(1,5) == sim(1,6); the smaller id wins the single slot
        assert_eq!(nbrs[&1], vec![5]);
    }

    #[test]
    fn similar_items_k_zero_errors() {
        let full = log(&[(1, 1, 0, 1)]);
        assert!(build_similar_items(&full, 0).is_err());
    }

    #[test]
    fn unclicked_items_get_empty_lists() {
        let full = log(&[(1, 1, 0, 1), (1, 2, 1, 1), (9, 7, 2, 0)]);
        let nbrs = build_similar_items(&full, 3).unwrap();
        assert!(nbrs[&7].is_empty());
    }

    #[test]
    fn substitution_with_identical_rows_predicts_identically() {
        let events = log(&[
            (1, 1, 0, 1),
            (2, 2, 10, 0),
            (1, 2, 20, 1),
            (2, 1, 30, 0),
            (3, 1, 40, 1),
        ]);
        let model = train(
            &events,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let mut snap = model.snapshot();
        snap.date_tag = model.cutoff_date() + 1;
        let substituted = substitute_future_embeddings(&model, &snap).unwrap();
        for ev in &events {
            let a = model.predict_event(ev, None).unwrap();
            let b = substituted.predict_event(ev, None).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn substitution_keeps_rows_missing_from_snapshot() {
        let events = log(&[(1, 1, 0, 1), (2, 9, 10, 0), (3, 9, 20, 1)]);
        let model = train(
            &events,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let mut snap = model.snapshot();
        snap.date_tag = model.cutoff_date() + 1;
        snap.item_embeddings.remove(&9);
        snap.item_embeddings.insert(1, vec![9.0; 4]);
        let substituted = substitute_future_embeddings(&model, &snap).unwrap();
        assert_eq!(substituted.item_embedding(9), model.item_embedding(9));
        assert_eq!(substituted.item_embedding(1).unwrap(), &[9.0; 4]);
    }

    #[test]
    fn substitution_rejects_wrong_width_and_stale_snapshot() {
        let events = log(&[(1, 1, 0, 1), (2, 2, 10, 0)]);
        let model = train(
            &events,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let mut snap = model.snapshot();
        snap.date_tag = model.cutoff_date() + 1;
        snap.embed_dim = 8;
        assert!(matches!(
            substitute_future_embeddings(&model, &snap),
            Err(Error::EmbedDimMismatch { .. })
        ));
        let stale = model.snapshot(); // date_tag == cutoff, not strictly later
        assert!(matches!(
            substitute_future_embeddings(&model, &stale),
            Err(Error::SnapshotNotFuture { .. })
        ));
    }
}
