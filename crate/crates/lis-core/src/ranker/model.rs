//! Model parameters, SGD training, prediction and snapshotting.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, InteractionEvent};
use crate::hash::derive_seed_indexed;

use super::{featurize, FeatureSchema, FeatureVector, Slot, SlotValues};

/// Embedding rows are initialized uniformly in +/- this bound on first touch.
/// Zero init would leave the bilinear terms with no gradient.
const EMBED_INIT_BOUND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2: f64,
    pub seed: u64,
    /// Off by default: chronological order mirrors streaming production
    /// training. On, each epoch visits events in a seeded shuffled order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2,
            l2: 1e-6,
            seed: 0,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::InvalidConfig(format!("l2 must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Frozen copy of the item embedding table and its update counts, tagged
/// with the source model's training cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub date_tag: i64,
    pub embed_dim: usize,
    pub item_embeddings: BTreeMap<u64, Vec<f64>>,
    pub update_counts: BTreeMap<u64, u64>,
}

impl ModelSnapshot {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Hashed linear weights + user/item embedding tables + dense weights.
///
/// `update_counts[i]` is exactly the number of gradient updates item `i`'s
/// embedding has received; `cutoff_date` never precedes any trained event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankModel {
    schema: FeatureSchema,
    bias: f64,
    linear: Vec<f64>,
    user_embeddings: BTreeMap<u64, Vec<f64>>,
    item_embeddings: BTreeMap<u64, Vec<f64>>,
    dense_weights: BTreeMap<String, Vec<f64>>,
    update_counts: BTreeMap<u64, u64>,
    cutoff_date: i64,
    init_seed: u64,
    warnings: Vec<String>,
    /// Mean training log-loss per epoch, across all fit calls.
    loss_history: Vec<f64>,
}

/// Per-event gradient of the (unregularized) logistic loss with respect to
/// every parameter the event touches. Duplicate hashed indices and repeated
/// item ids are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGradient {
    pub bias: f64,
    pub linear: Vec<(usize, f64)>,
    pub user: Option<(u64, Vec<f64>)>,
    pub items: Vec<(u64, Vec<f64>)>,
    pub dense: Vec<(String, Vec<f64>)>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains a fresh model on `log` under `schema`.
///
/// `extras` must be parallel to the log when the schema declares leak or
/// dense slots. Training is bit-reproducible given (data, schema, config).
pub fn train(
    log: &EventLog,
    schema: &FeatureSchema,
    cfg: &TrainConfig,
    extras: Option<&[SlotValues]>,
) -> Result<RankModel> {
    let mut model = RankModel::new(schema.clone(), cfg.seed)?;
    model.fit(log, cfg, extras)?;
    Ok(model)
}

impl RankModel {
    /// Zero-weight model. Embedding rows appear lazily during training.
    pub fn new(schema: FeatureSchema, init_seed: u64) -> Result<Self> {
        schema.validate()?;
        let mut dense_weights = BTreeMap::new();
        for slot in &schema.slots {
            if let Slot::LeakDense { name, dim } | Slot::Dense { name, dim } = slot {
                dense_weights.insert(name.clone(), vec![0.0; *dim]);
            }
        }
        Ok(Self {
            linear: vec![0.0; schema.hash_dim],
            schema,
            bias: 0.0,
            user_embeddings: BTreeMap::new(),
            item_embeddings: BTreeMap::new(),
            dense_weights,
            update_counts: BTreeMap::new(),
            cutoff_date: 0,
            init_seed,
            warnings: Vec::new(),
            loss_history: Vec::new(),
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn cutoff_date(&self) -> i64 {
        self.cutoff_date
    }

    pub fn update_counts(&self) -> &BTreeMap<u64, u64> {
        &self.update_counts
    }

    pub fn item_embedding(&self, item_id: u64) -> Option<&[f64]> {
        self.item_embeddings.get(&item_id).map(Vec::as_slice)
    }

    pub fn user_embedding(&self, user_id: u64) -> Option<&[f64]> {
        self.user_embeddings.get(&user_id).map(Vec::as_slice)
    }

    pub fn item_embeddings(&self) -> &BTreeMap<u64, Vec<f64>> {
        &self.item_embeddings
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn set_bias(&mut self, bias: f64) {
        self.bias = bias;
    }

    pub fn set_linear_weight(&mut self, index: usize, weight: f64) {
        self.linear[index] = weight;
    }

    pub fn linear_weight(&self, index: usize) -> f64 {
        self.linear[index]
    }

    pub fn set_user_embedding(&mut self, user_id: u64, row: Vec<f64>) {
        assert_eq!(row.len(), self.schema.embed_dim);
        self.user_embeddings.insert(user_id, row);
    }

    pub fn set_item_embedding(&mut self, item_id: u64, row: Vec<f64>) {
        assert_eq!(row.len(), self.schema.embed_dim);
        self.item_embeddings.insert(item_id, row);
    }

    pub fn set_dense_weights(&mut self, slot: &str, weights: Vec<f64>) {
        assert_eq!(
            self.dense_weights.get(slot).map(Vec::len),
            Some(weights.len())
        );
        self.dense_weights.insert(slot.to_string(), weights);
    }

    pub fn dense_weight_table(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.dense_weights
    }

    pub(crate) fn replace_item_embedding_rows(&mut self, rows: &BTreeMap<u64, Vec<f64>>) {
        for (id, row) in rows {
            self.item_embeddings.insert(*id, row.clone());
        }
    }

    fn init_row(&self, table: &str, id: u64) -> Vec<f64> {
        let seed = derive_seed_indexed(self.init_seed, table, id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.schema.embed_dim)
            .map(|_| rng.gen_range(-EMBED_INIT_BOUND..EMBED_INIT_BOUND))
            .collect()
    }

    /// Materializes embedding rows the event will touch so the SGD step and
    /// the gradient both see the same (initialized) values.
    fn ensure_rows(&mut self, fv: &FeatureVector) {
        if let Some((u, i)) = fv.user_item {
            if !self.user_embeddings.contains_key(&u) {
                let row = self.init_row("user_embed", u);
                self.user_embeddings.insert(u, row);
            }
            if !self.item_embeddings.contains_key(&i) {
                let row = self.init_row("item_embed", i);
                self.item_embeddings.insert(i, row);
            }
        }
        for &(a, b) in &fv.item_pairs {
            for id in [a, b] {
                if !self.item_embeddings.contains_key(&id) {
                    let row = self.init_row("item_embed", id);
                    self.item_embeddings.insert(id, row);
                }
            }
        }
    }

    /// Raw score (logit). Unknown ids contribute a zero embedding.
    pub fn score(&self, fv: &FeatureVector) -> Result<f64> {
        let mut z = self.bias;
        for &(idx, x) in &fv.hashed {
            z += self.linear[idx] * x;
        }
        if let Some((u, i)) = fv.user_item {
            if let (Some(eu), Some(ei)) = (self.user_embeddings.get(&u), self.item_embeddings.get(&i))
            {
                z += dot(eu, ei);
            }
        }
        for &(a, b) in &fv.item_pairs {
            if let (Some(ea), Some(eb)) = (self.item_embeddings.get(&a), self.item_embeddings.get(&b))
            {
                z += dot(ea, eb);
            }
        }
        for (name, x) in &fv.dense {
            let w = self.dense_weights.get(name).ok_or_else(|| {
                Error::Schema(format!("dense slot `{name}` not present in model"))
            })?;
            if w.len() != x.len() {
                return Err(Error::DenseDimMismatch {
                    slot: name.clone(),
                    expected: w.len(),
                    got: x.len(),
                });
            }
            z += dot(w, x);
        }
        if !z.is_finite() {
            return Err(Error::Numeric("non-finite score".into()));
        }
        Ok(z)
    }

    /// Click probability, strictly inside (0, 1).
    pub fn predict(&self, fv: &FeatureVector) -> Result<f64> {
        let p = sigmoid(self.score(fv)?);
        Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// Convenience: featurize then predict.
    pub fn predict_event(
        &self,
        event: &InteractionEvent,
        extras: Option<&SlotValues>,
    ) -> Result<f64> {
        let fv = featurize(event, &self.schema, extras)?;
        self.predict(&fv)
    }

    /// Logistic loss of one event at the current parameters (no L2 term).
    pub fn event_loss(&self, event: &InteractionEvent, extras: Option<&SlotValues>) -> Result<f64> {
        let fv = featurize(event, &self.schema, extras)?;
        let z = self.score(&fv)?;
        // -[y ln p + (1-y) ln(1-p)] = softplus(z) - y z
        Ok(softplus(z) - f64::from(event.label) * z)
    }

    /// Analytic gradient of [`Self::event_loss`] with respect to every
    /// parameter the event touches, evaluated at the current parameters.
    pub fn event_gradient(
        &self,
        event: &InteractionEvent,
        extras: Option<&SlotValues>,
    ) -> Result<EventGradient> {
        let fv = featurize(event, &self.schema, extras)?;
        self.gradient_for(&fv, event.label)
    }

    fn gradient_for(&self, fv: &FeatureVector, label: u8) -> Result<EventGradient> {
        let z = self.score(fv)?;
        let g = sigmoid(z) - f64::from(label);

        let mut linear: Vec<(usize, f64)> = Vec::with_capacity(fv.hashed.len());
        for &(idx, x) in &fv.hashed {
            match linear.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, acc)) => *acc += g * x,
                None => linear.push((idx, g * x)),
            }
        }

        let zero = vec![0.0; self.schema.embed_dim];
        let emb = |table: &BTreeMap<u64, Vec<f64>>, id: u64| -> Vec<f64> {
            table.get(&id).cloned().unwrap_or_else(|| zero.clone())
        };

        let mut items: Vec<(u64, Vec<f64>)> = Vec::new();
        let mut add_item_grad = |id: u64, contrib: Vec<f64>| {
            match items.iter_mut().find(|(i, _)| *i == id) {
                Some((_, acc)) => {
                    for (a, c) in acc.iter_mut().zip(&contrib) {
                        *a += c;
                    }
                }
                None => items.push((id, contrib)),
            }
        };

        let mut user = None;
        if let Some((u, i)) = fv.user_item {
            let eu = emb(&self.user_embeddings, u);
            let ei = emb(&self.item_embeddings, i);
            user = Some((u, ei.iter().map(|x| g * x).collect()));
            add_item_grad(i, eu.iter().map(|x| g * x).collect());
        }
        for &(a, b) in &fv.item_pairs {
            let ea = emb(&self.item_embeddings, a);
            let eb = emb(&self.item_embeddings, b);
            // d/d ea <ea, eb> = eb (and symmetrically); a == b folds into 2e.
            add_item_grad(a, eb.iter().map(|x| g * x).collect());
            add_item_grad(b, ea.iter().map(|x| g * x).collect());
        }

        let mut dense = Vec::with_capacity(fv.dense.len());
        for (name, x) in &fv.dense {
            dense.push((name.clone(), x.iter().map(|v| g * v).collect()));
        }

        Ok(EventGradient {
            bias: g,
            linear,
            user,
            items,
            dense,
        })
    }

    /// One SGD pass setup: trains `cfg.epochs` epochs over `log`, appending
    /// to the existing parameters (incremental training continues from the
    /// current state and advances the cutoff).
    pub fn fit(
        &mut self,
        log: &EventLog,
        cfg: &TrainConfig,
        extras: Option<&[SlotValues]>,
    ) -> Result<()> {
        cfg.validate()?;
        if log.is_empty() {
            return Err(Error::InvalidConfig("training log is empty".into()));
        }
        if let Some(ex) = extras {
            if ex.len() != log.len() {
                return Err(Error::InvalidConfig(format!(
                    "extras length {} does not match log length {}",
                    ex.len(),
                    log.len()
                )));
            }
        } else if !self.schema.supplied_slot_names().is_empty() {
            return Err(Error::MissingLeakValue(
                self.schema.supplied_slot_names()[0].to_string(),
            ));
        }

        let n = log.len();
        let positives = log.positives();
        if positives == 0 || positives == n {
            let class = u8::from(positives == n);
            self.warnings.push(format!(
                "training data contains a single label class ({class}); AUC on such data is undefined"
            ));
        }

        let lr = cfg.learning_rate;
        let l2 = cfg.l2;
        let events = log.events();
        let mut order: Vec<usize> = (0..n).collect();
        for epoch in 0..cfg.epochs {
            if cfg.shuffle {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_indexed(
                    cfg.seed,
                    "train/shuffle",
                    u64::from(epoch),
                ));
                // Fisher-Yates
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    order.swap(i, j);
                }
            }
            let mut loss_sum = 0.0;
            for &i in &order {
                let ev = &events[i];
                let ex = extras.map(|e| &e[i]);
                let fv = featurize(ev, &self.schema, ex)?;
                self.ensure_rows(&fv);

                let z = self.score(&fv)?;
                let loss = softplus(z) - f64::from(ev.label) * z;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "training diverged (non-finite loss) at epoch {epoch}, event {i}"
                    )));
                }
                loss_sum += loss;

                let grad = self.gradient_for(&fv, ev.label)?;
                self.bias -= lr * grad.bias;
                for (idx, gval) in &grad.linear {
                    let w = self.linear[*idx];
                    self.linear[*idx] = w - lr * (gval + l2 * w);
                }
                if let Some((u, gu)) = &grad.user {
                    let row = self.user_embeddings.get_mut(u).expect("ensured");
                    for (w, gval) in row.iter_mut().zip(gu) {
                        *w -= lr * (gval + l2 * *w);
                    }
                }
                for (id, gi) in &grad.items {
                    let row = self.item_embeddings.get_mut(id).expect("ensured");
                    for (w, gval) in row.iter_mut().zip(gi) {
                        *w -= lr * (gval + l2 * *w);
                    }
                }
                for (name, gd) in &grad.dense {
                    let row = self.dense_weights.get_mut(name).expect("schema slot");
                    for (w, gval) in row.iter_mut().zip(gd) {
                        *w -= lr * (gval + l2 * *w);
                    }
                }

                *self.update_counts.entry(ev.item_id).or_insert(0) += 1;
            }
            self.loss_history.push(loss_sum / n as f64);
        }

        if let Some((_, max_ts)) = log.time_range() {
            self.cutoff_date = self.cutoff_date.max(max_ts);
        }
        Ok(())
    }

    /// Deep immutable copy of the item embedding table and update counts,
    /// tagged with the current cutoff.
    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            date_tag: self.cutoff_date,
            embed_dim: self.schema.embed_dim,
            item_embeddings: self.item_embeddings.clone(),
            update_counts: self.update_counts.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    let json = serde_json::to_string(value).map_err(|e| Error::Numeric(e.to_string()))?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let data = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&data).map_err(|e| Error::Parse {
        line: e.line(),
        field: "model".into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::EventLog;
    use crate::ranker::featurize;

    fn toy_log(rows: &[(u64, u64, i64, u8)]) -> EventLog {
        EventLog::from_events(
            rows.iter()
                .map(|&(u, i, t, l)| InteractionEvent::new(u, i, t, l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_model_predicts_half() {
        let schema = FeatureSchema::baseline(1 << 8, 4);
        let model = RankModel::new(schema.clone(), 0).unwrap();
        let ev = InteractionEvent::new(1, 2, 0, 0);
        let fv = featurize(&ev, &schema, None).unwrap();
        assert_eq!(model.predict(&fv).unwrap(), 0.5);
    }

    #[test]
    fn prediction_monotone_in_bias() {
        let schema = FeatureSchema::baseline(1 << 8, 4);
        let ev = InteractionEvent::new(1, 2, 0, 0);
        let fv = featurize(&ev, &schema, None).unwrap();
        let mut last = 0.0;
        for k in 0..20 {
            let mut model = RankModel::new(schema.clone(), 0).unwrap();
            model.set_bias(k as f64 * 0.5);
            let p = model.predict(&fv).unwrap();
            assert!(p > last);
            assert!(p > 0.0 && p < 1.0);
            last = p;
        }
    }

    #[test]
    fn hand_built_predictions_match_sigmoid() {
        // bias + one linear weight + a 2-dim user/item dot, computed by hand.
        let schema = FeatureSchema::baseline(1 << 8, 2);
        let mut model = RankModel::new(schema.clone(), 0).unwrap();
        model.set_bias(0.25);
        model.set_user_embedding(7, vec![0.5, -1.0]);
        model.set_item_embedding(3, vec![2.0, 0.5]);
        let ev = InteractionEvent::new(7, 3, 0, 1);
        let fv = featurize(&ev, &schema, None).unwrap();
        for &(w_user, w_item) in &[(0.0, 0.0), (0.3, -0.2), (1.5, 2.5), (-4.0, 0.1), (0.01, 0.02)]
        {
            let iu = crate::hash::feature_index_u64("user_id", 7, 1 << 8);
            let ii = crate::hash::feature_index_u64("item_id", 3, 1 << 8);
            model.set_linear_weight(iu, w_user);
            model.set_linear_weight(ii, w_item);
            // <eu, ei> = 0.5*2.0 + (-1.0)*0.5 = 0.5
            let z = 0.25 + w_user + w_item + 0.5;
            let expected = 1.0 / (1.0 + (-z).exp());
            let got = model.predict(&fv).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn update_counts_track_events_times_epochs() {
        let mut rows = Vec::new();
        for k in 0..42 {
            rows.push((k % 5, 7, k as i64, (k % 2) as u8));
        }
        for k in 0..10 {
            rows.push((k, 3, (100 + k) as i64, 1));
        }
        let log = toy_log(&rows);
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let model = train(&log, &FeatureSchema::baseline(1 << 8, 4), &cfg, None).unwrap();
        assert_eq!(model.update_counts()[&7], 42 * 3);
        assert_eq!(model.update_counts()[&3], 10 * 3);
        let total: u64 = model.update_counts().values().sum();
        assert_eq!(total, log.len() as u64 * 3);
    }

    #[test]
    fn loss_decreases_on_separable_data() {
        // user ids 0..10 always click, 10..20 never do: linearly separable
        // through the hashed user feature.
        let mut rows = Vec::new();
        for k in 0..100u64 {
            let user = k % 20;
            let label = u8::from(user < 10);
            rows.push((user, k % 7, k as i64, label));
        }
        let log = toy_log(&rows);
        let cfg = TrainConfig {
            epochs: 8,
            learning_rate: 0.2,
            l2: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&log, &FeatureSchema::baseline(1 << 10, 4), &cfg, None).unwrap();
        let losses = model.loss_history();
        assert_eq!(losses.len(), 8);
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "loss did not decrease: {losses:?}");
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let mut rows = Vec::new();
        for k in 0..200u64 {
            rows.push((k % 13, k % 11, k as i64, ((k * 7) % 3 == 0) as u8));
        }
        let log = toy_log(&rows);
        let cfg = TrainConfig {
            seed: 9,
            shuffle: true,
            ..TrainConfig::default()
        };
        let schema = FeatureSchema::baseline(1 << 10, 8);
        let a = train(&log, &schema, &cfg, None).unwrap();
        let b = train(&log, &schema, &cfg, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn single_class_training_records_warning() {
        let log = toy_log(&[(1, 1, 0, 1), (2, 2, 1, 1)]);
        let model = train(
            &log,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(model.warnings().len(), 1);
        assert!(model.warnings()[0].contains("single label class"));
    }

    #[test]
    fn cutoff_date_is_max_trained_timestamp() {
        let log = toy_log(&[(1, 1, 5, 1), (2, 2, 99, 0), (3, 3, 42, 1)]);
        let model = train(
            &log,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(model.cutoff_date(), 99);
    }

    #[test]
    fn snapshot_is_immutable_under_further_training() {
        let log = toy_log(&[(1, 1, 0, 1), (2, 2, 1, 0), (1, 2, 2, 1), (2, 1, 3, 0)]);
        let cfg = TrainConfig::default();
        let mut model = train(&log, &FeatureSchema::baseline(1 << 8, 4), &cfg, None).unwrap();
        let snap = model.snapshot();
        assert_eq!(snap.date_tag, model.cutoff_date());
        assert_eq!(snap.item_embeddings.len(), 2);
        assert_eq!(snap.update_counts.len(), 2);
        let before = snap.clone();
        let more = toy_log(&[(1, 1, 10, 0), (2, 2, 11, 1)]);
        model.fit(&more, &cfg, None).unwrap();
        assert_eq!(snap, before);
        assert_ne!(model.snapshot().item_embeddings, snap.item_embeddings);
    }

    #[test]
    fn snapshot_round_trips_through_disk() {
        let log = toy_log(&[(1, 5, 0, 1), (2, 6, 1, 0), (3, 7, 2, 1)]);
        let model = train(
            &log,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let snap = model.snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        snap.save(&path).unwrap();
        assert_eq!(ModelSnapshot::load(&path).unwrap(), snap);
    }

    #[test]
    fn model_round_trips_through_disk() {
        let log = toy_log(&[(1, 5, 0, 1), (2, 6, 1, 0), (3, 7, 2, 1)]);
        let model = train(
            &log,
            &FeatureSchema::baseline(1 << 8, 4),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = RankModel::load(&path).unwrap();
        assert_eq!(loaded, model);
    }
}
