//! Event-log data model, file ingestion and strict temporal splitting.
//!
//! An [`EventLog`] is an immutable, timestamp-sorted sequence of
//! [`InteractionEvent`]s. Sorting is stable, so ties keep input order and
//! ingestion is reproducible. [`temporal_split`] is the only sanctioned way
//! to carve a log into train/eval sets; it guarantees that no training event
//! has a timestamp at or after the cutoff.

mod io;
mod synth;

pub use io::{load_events, load_events_from_reader, save_events, EventFormat};
pub use synth::{generate_synthetic, GroundTruth, SyntheticConfig};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// One timestamped user-item interaction with a binary click label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub user_id: u64,
    pub item_id: u64,
    /// Seconds since epoch. Never negative.
    pub timestamp: i64,
    /// 1 = click, 0 = no click.
    pub label: u8,
    /// Categorical side features. Keys are slot names, unique by construction.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub context: BTreeMap<String, String>,
}

impl InteractionEvent {
    pub fn new(user_id: u64, item_id: u64, timestamp: i64, label: u8) -> Self {
        Self {
            user_id,
            item_id,
            timestamp,
            label,
            context: BTreeMap::new(),
        }
    }

    fn validate(&self, line: usize) -> Result<()> {
        if self.label > 1 {
            return Err(Error::Parse {
                line,
                field: "label".into(),
                message: format!("label must be 0 or 1, got {}", self.label),
            });
        }
        if self.timestamp < 0 {
            return Err(Error::Parse {
                line,
                field: "timestamp".into(),
                message: format!("timestamp must be >= 0, got {}", self.timestamp),
            });
        }
        Ok(())
    }
}

/// Immutable event sequence, sorted ascending by timestamp (stable on ties).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<InteractionEvent>,
}

impl EventLog {
    /// Validates per-event invariants and stably sorts by timestamp.
    pub fn from_events(mut events: Vec<InteractionEvent>) -> Result<Self> {
        for (i, ev) in events.iter().enumerate() {
            ev.validate(i + 1)?;
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(Self { events })
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, InteractionEvent> {
        self.events.iter()
    }

    /// (min, max) timestamp, or None for an empty log.
    pub fn time_range(&self) -> Option<(i64, i64)> {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => Some((a.timestamp, b.timestamp)),
            _ => None,
        }
    }

    /// Number of positive labels.
    pub fn positives(&self) -> usize {
        self.events.iter().filter(|e| e.label == 1).count()
    }

    /// Events with timestamp in `[start, end)`, preserving order.
    pub fn slice_time(&self, start: i64, end: i64) -> EventLog {
        let lo = self.events.partition_point(|e| e.timestamp < start);
        let hi = self.events.partition_point(|e| e.timestamp < end);
        EventLog {
            events: self.events[lo..hi].to_vec(),
        }
    }

    /// Sorted distinct item ids.
    pub fn item_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.events.iter().map(|e| e.item_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Returns a copy of this log with `slot` set to `value_for(item_id)` on
    /// every event whose item has a value. Events without a value get the
    /// explicit missing marker handled downstream by the featurizer.
    pub fn with_context_slot(
        &self,
        slot: &str,
        value_for: &BTreeMap<u64, String>,
    ) -> EventLog {
        let events = self
            .events
            .iter()
            .map(|e| {
                let mut ev = e.clone();
                if let Some(v) = value_for.get(&e.item_id) {
                    ev.context.insert(slot.to_string(), v.clone());
                }
                ev
            })
            .collect();
        EventLog { events }
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a InteractionEvent;
    type IntoIter = std::slice::Iter<'a, InteractionEvent>;
    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

/// Per-item dense content vectors, all sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemContentTable {
    pub dim: usize,
    pub rows: BTreeMap<u64, Vec<f64>>,
}

impl ItemContentTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
        }
    }

    /// Inserting enforces the shared dimension; item ids are unique because
    /// the storage is a map.
    pub fn insert(&mut self, item_id: u64, features: Vec<f64>) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::InvalidConfig(format!(
                "content vector for item {item_id} has dimension {}, table dimension is {}",
                features.len(),
                self.dim
            )));
        }
        self.rows.insert(item_id, features);
        Ok(())
    }

    pub fn get(&self, item_id: u64) -> Option<&[f64]> {
        self.rows.get(&item_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Train/eval boundary: train strictly before `train_end`, eval in
/// `[train_end, train_end + eval_window)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalSplit {
    /// The cutoff T, in seconds. Conventionally a midnight boundary.
    pub train_end: i64,
    /// Eval window length in seconds.
    pub eval_window: i64,
    /// Default horizon n (days) for future-snapshot leaks.
    pub leak_horizon_days: u32,
}

impl TemporalSplit {
    pub fn from_days(train_end_day: u32, eval_window_days: u32, leak_horizon_days: u32) -> Self {
        Self {
            train_end: i64::from(train_end_day) * SECONDS_PER_DAY,
            eval_window: i64::from(eval_window_days) * SECONDS_PER_DAY,
            leak_horizon_days,
        }
    }

    pub fn eval_end(&self) -> i64 {
        self.train_end + self.eval_window
    }
}

/// Splits a sorted log into (train, eval). Train takes every event with
/// timestamp < T, eval takes `[T, T + eval_window)`; events at or after the
/// window end are dropped. Errors when the eval range is empty, since no AUC
/// can be computed from it.
pub fn temporal_split(log: &EventLog, split: &TemporalSplit) -> Result<(EventLog, EventLog)> {
    let train = log.slice_time(i64::MIN, split.train_end);
    let eval = log.slice_time(split.train_end, split.eval_end());
    if eval.is_empty() {
        return Err(Error::EmptyEvalSet {
            train_end: split.train_end,
            eval_window: split.eval_window,
        });
    }
    Ok((train, eval))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(user: u64, item: u64, ts: i64, label: u8) -> InteractionEvent {
        InteractionEvent::new(user, item, ts, label)
    }

    fn day(d: i64) -> i64 {
        d * SECONDS_PER_DAY
    }

    #[test]
    fn from_events_sorts_stably() {
        let log = EventLog::from_events(vec![
            ev(1, 10, 5, 0),
            ev(2, 20, 3, 1),
            ev(3, 30, 5, 1),
            ev(4, 40, 1, 0),
        ])
        .unwrap();
        let ts: Vec<i64> = log.iter().map(|e| e.timestamp).collect();
        assert_eq!(ts, vec![1, 3, 5, 5]);
        // stable: user 1 (input first) still precedes user 3 at ts=5
        assert_eq!(log.events()[2].user_id, 1);
        assert_eq!(log.events()[3].user_id, 3);
    }

    #[test]
    fn bad_label_rejected() {
        let err = EventLog::from_events(vec![ev(1, 1, 0, 2)]).unwrap_err();
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn negative_timestamp_rejected() {
        let err = EventLog::from_events(vec![ev(1, 1, -5, 0)]).unwrap_err();
        assert!(err.to_string().contains("timestamp"));
    }

    #[test]
    fn split_days_one_to_ten() {
        // Events on days 1..=10; T = day 8, window 2 days -> train days 1-7,
        // eval days 8-9, day 10 dropped.
        let events: Vec<_> = (1..=10).map(|d| ev(d, d, day(d as i64), 0)).collect();
        let log = EventLog::from_events(events).unwrap();
        let split = TemporalSplit::from_days(8, 2, 7);
        let (train, eval) = temporal_split(&log, &split).unwrap();
        assert_eq!(train.len(), 7);
        assert!(train.iter().all(|e| e.timestamp < day(8)));
        assert_eq!(eval.len(), 2);
        assert!(eval
            .iter()
            .all(|e| e.timestamp >= day(8) && e.timestamp < day(10)));
    }

    #[test]
    fn split_empty_eval_errors() {
        let log = EventLog::from_events(vec![ev(1, 1, day(1), 0), ev(2, 2, day(2), 1)]).unwrap();
        let split = TemporalSplit::from_days(5, 2, 7);
        let err = temporal_split(&log, &split).unwrap_err();
        assert!(err.to_string().contains("empty eval set"));
    }

    #[test]
    fn content_table_rejects_wrong_dim() {
        let mut t = ItemContentTable::new(3);
        t.insert(1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(t.insert(2, vec![1.0]).is_err());
    }

    #[test]
    fn with_context_slot_adds_values() {
        let log = EventLog::from_events(vec![ev(1, 10, 0, 0), ev(1, 11, 1, 1)]).unwrap();
        let mut vals = BTreeMap::new();
        vals.insert(10u64, "a|b".to_string());
        let out = log.with_context_slot("nbr", &vals);
        assert_eq!(out.events()[0].context.get("nbr").unwrap(), "a|b");
        assert!(out.events()[1].context.get("nbr").is_none());
    }
}
