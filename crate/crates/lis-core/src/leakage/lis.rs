//! Paired baseline-vs-leaked evaluation and the LIS report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, GroundTruth, TemporalSplit, SECONDS_PER_DAY};
use crate::hash::derive_seed_indexed;
use crate::ranker::{
    auc_from_scores, score_events, train, FeatureSchema, Slot, SlotValue, SlotValues, TrainConfig,
};

use super::{
    build_similar_items, inject_next_click, similar_items_tokens, substitute_future_embeddings,
    LeakSpec,
};

/// What the leak constructors are allowed to read: the full future-inclusive
/// log, the split that produced (train, eval), and — only for the oracle
/// probe — the generator's ground truth.
pub struct LeakSource<'a> {
    pub full_log: &'a EventLog,
    pub split: &'a TemporalSplit,
    pub ground_truth: Option<&'a GroundTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LisOptions {
    /// Bootstrap resamples for the confidence interval.
    pub n_boot: u32,
    /// Absolute AUC delta considered significant.
    pub threshold: f64,
}

impl Default for LisOptions {
    fn default() -> Self {
        Self {
            n_boot: 200,
            threshold: 0.0010,
        }
    }
}

/// Paired AUC measurement with a bootstrap interval on the delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LISReport {
    pub leak: LeakSpec,
    pub auc_base: f64,
    pub auc_leak: f64,
    /// `auc_leak - auc_base`, stored redundantly for the summary tables.
    pub lis: f64,
    /// 2.5th percentile of the bootstrap delta distribution.
    pub ci_low: f64,
    /// 97.5th percentile.
    pub ci_high: f64,
    pub n_boot: u32,
    pub threshold: f64,
    /// `lis > threshold` and the interval excludes zero from below.
    pub significant: bool,
    pub train_end: i64,
    pub eval_window: i64,
    pub train_events: usize,
    pub eval_events: usize,
    pub seed: u64,
}

impl LISReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                    path: parent.display().to_string(),
                    source,
                })?;
            }
        }
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&data).map_err(|e| Error::Parse {
            line: e.line(),
            field: "lis_report".into(),
            message: e.to_string(),
        })
    }

    /// One fixed-width row for the plain-text summary table.
    pub fn summary_row(&self) -> String {
        format!(
            "{:<24} {:>9.6} {:>9.6} {:>+10.6} [{:>+9.6}, {:>+9.6}] {}",
            self.leak.label(),
            self.auc_base,
            self.auc_leak,
            self.lis,
            self.ci_low,
            self.ci_high,
            if self.significant { "significant" } else { "not significant" }
        )
    }

    pub fn summary_header() -> String {
        format!(
            "{:<24} {:>9} {:>9} {:>10} {:>22} verdict",
            "leak", "auc_base", "auc_leak", "lis", "95% CI"
        )
    }
}

/// Runs the paired evaluation for one leak.
///
/// Baseline and leaked arms share the training config (and therefore the
/// seed and every per-id embedding init), so the injected leak is the only
/// difference between them. Re-running with the same inputs reproduces the
/// report byte for byte.
pub fn compute_lis(
    train_log: &EventLog,
    eval_log: &EventLog,
    schema_base: &FeatureSchema,
    leak: &LeakSpec,
    source: &LeakSource<'_>,
    cfg: &TrainConfig,
    opts: &LisOptions,
) -> Result<LISReport> {
    leak.validate()?;
    schema_base.validate()?;
    if !schema_base.supplied_slot_names().is_empty() {
        return Err(Error::Schema(
            "baseline schema must not declare leak or dense slots".into(),
        ));
    }
    check_split_hygiene(train_log, eval_log, source.split)?;

    let model_base = train(train_log, schema_base, cfg, None)?;
    let scores_base = score_events(&model_base, eval_log, None)?;
    let labels: Vec<u8> = eval_log.iter().map(|e| e.label).collect();
    let auc_base = auc_from_scores(&scores_base, &labels)?;

    let scores_leak = match leak {
        LeakSpec::NextClick => {
            require_eval_coverage(source, eval_log)?;
            // Two tokens per event: the leaked item id, and a match marker
            // when the leaked id IS the candidate — the user demonstrably
            // clicks this very item right after the impression.
            let slot = "next_click";
            let schema = schema_base.clone().with_slot(Slot::LeakToken(slot.into()));
            let to_values = |log: &EventLog, picks: Vec<Option<u64>>| -> Vec<SlotValues> {
                log.iter()
                    .zip(picks)
                    .map(|(ev, p)| {
                        let mut m = SlotValues::new();
                        let v = match p {
                            None => SlotValue::Missing,
                            Some(id) if id == ev.item_id => {
                                SlotValue::Token("@match".into())
                            }
                            Some(_) => SlotValue::Token("@other".into()),
                        };
                        m.insert(slot.to_string(), v);
                        m
                    })
                    .collect()
            };
            let train_vals = to_values(train_log, inject_next_click(source.full_log, train_log));
            let eval_vals = to_values(eval_log, inject_next_click(source.full_log, eval_log));
            let model = train(train_log, &schema, cfg, Some(&train_vals))?;
            score_events(&model, eval_log, Some(&eval_vals))?
        }
        LeakSpec::SimilarItems { k } => {
            require_eval_coverage(source, eval_log)?;
            let slot = "similar_items";
            let schema = schema_base.clone().with_slot(Slot::LeakToken(slot.into()));
            let tokens = similar_items_tokens(&build_similar_items(source.full_log, *k)?);
            let to_values = |log: &EventLog| -> Vec<SlotValues> {
                log.iter()
                    .map(|ev| {
                        let mut m = SlotValues::new();
                        let v = tokens
                            .get(&ev.item_id)
                            .map_or(SlotValue::Missing, |t| SlotValue::Token(t.clone()));
                        m.insert(slot.to_string(), v);
                        m
                    })
                    .collect()
            };
            let train_vals = to_values(train_log);
            let eval_vals = to_values(eval_log);
            let model = train(train_log, &schema, cfg, Some(&train_vals))?;
            score_events(&model, eval_log, Some(&eval_vals))?
        }
        LeakSpec::FutureEmbedding { horizon_days } => {
            let t = source.split.train_end;
            let future_cutoff = t + i64::from(*horizon_days) * SECONDS_PER_DAY;
            let full_max = source
                .full_log
                .time_range()
                .map(|(_, hi)| hi)
                .unwrap_or(i64::MIN);
            if full_max < future_cutoff - SECONDS_PER_DAY {
                return Err(Error::HorizonMismatch(format!(
                    "future_embedding needs data through {} but the full log ends at {}",
                    future_cutoff - SECONDS_PER_DAY,
                    full_max
                )));
            }
            let window = source.full_log.slice_time(t, future_cutoff);
            if window.is_empty() {
                return Err(Error::HorizonMismatch(format!(
                    "no events in the future window [{t}, {future_cutoff})"
                )));
            }
            // M_{T+n}: the baseline model trained onward through T+n, the way
            // a production model keeps absorbing traffic after a snapshot.
            let mut future_model = model_base.clone();
            future_model.fit(&window, cfg, None)?;
            let substituted = substitute_future_embeddings(&model_base, &future_model.snapshot())?;
            score_events(&substituted, eval_log, None)?
        }
        LeakSpec::OracleProbability => {
            let truth = source.ground_truth.ok_or_else(|| {
                Error::InvalidConfig(
                    "oracle_probability leak requires the ground-truth sidecar".into(),
                )
            })?;
            oracle_scores(source.full_log, truth, eval_log)?
        }
        LeakSpec::ConstantProbe => {
            let slot = "constant_probe";
            let schema = schema_base.clone().with_slot(Slot::LeakToken(slot.into()));
            let constant = |log: &EventLog| -> Vec<SlotValues> {
                log.iter()
                    .map(|_| {
                        let mut m = SlotValues::new();
                        m.insert(slot.to_string(), SlotValue::Token("probe".into()));
                        m
                    })
                    .collect()
            };
            let train_vals = constant(train_log);
            let eval_vals = constant(eval_log);
            let model = train(train_log, &schema, cfg, Some(&train_vals))?;
            score_events(&model, eval_log, Some(&eval_vals))?
        }
        LeakSpec::SelfItem => {
            let slot = "self_item";
            let schema = schema_base.clone().with_slot(Slot::LeakToken(slot.into()));
            let own_item = |log: &EventLog| -> Vec<SlotValues> {
                log.iter()
                    .map(|ev| {
                        let mut m = SlotValues::new();
                        m.insert(slot.to_string(), SlotValue::Token(ev.item_id.to_string()));
                        m
                    })
                    .collect()
            };
            let train_vals = own_item(train_log);
            let eval_vals = own_item(eval_log);
            let model = train(train_log, &schema, cfg, Some(&train_vals))?;
            score_events(&model, eval_log, Some(&eval_vals))?
        }
    };

    let auc_leak = auc_from_scores(&scores_leak, &labels)?;
    let lis = auc_leak - auc_base;
    let (ci_low, ci_high) = bootstrap_delta_ci(
        &scores_base,
        &scores_leak,
        &labels,
        opts.n_boot,
        cfg.seed,
    )?;

    Ok(LISReport {
        leak: leak.clone(),
        auc_base,
        auc_leak,
        lis,
        ci_low,
        ci_high,
        n_boot: opts.n_boot,
        threshold: opts.threshold,
        significant: lis > opts.threshold && ci_low > 0.0,
        train_end: source.split.train_end,
        eval_window: source.split.eval_window,
        train_events: train_log.len(),
        eval_events: eval_log.len(),
        seed: cfg.seed,
    })
}

/// The (train, eval) pair must actually come from the declared split.
fn check_split_hygiene(train: &EventLog, eval: &EventLog, split: &TemporalSplit) -> Result<()> {
    if let Some((_, hi)) = train.time_range() {
        if hi >= split.train_end {
            return Err(Error::InvalidConfig(format!(
                "train log contains an event at {hi}, at or after the cutoff {}",
                split.train_end
            )));
        }
    }
    if eval.is_empty() {
        return Err(Error::EmptyEvalSet {
            train_end: split.train_end,
            eval_window: split.eval_window,
        });
    }
    if let Some((lo, hi)) = eval.time_range() {
        if lo < split.train_end || hi >= split.eval_end() {
            return Err(Error::InvalidConfig(format!(
                "eval log spans [{lo}, {hi}] outside the split window [{}, {})",
                split.train_end,
                split.eval_end()
            )));
        }
    }
    Ok(())
}

fn require_eval_coverage(source: &LeakSource<'_>, eval: &EventLog) -> Result<()> {
    let full_max = source
        .full_log
        .time_range()
        .map(|(_, hi)| hi)
        .unwrap_or(i64::MIN);
    let eval_max = eval.time_range().map(|(_, hi)| hi).unwrap_or(i64::MAX);
    if full_max < eval_max {
        return Err(Error::HorizonMismatch(format!(
            "full log ends at {full_max}, before the eval horizon {eval_max}"
        )));
    }
    Ok(())
}

/// Looks up each eval event's true click probability by (timestamp, user,
/// item) in the generated log. Identical triples share one probability, so
/// duplicates are harmless.
fn oracle_scores(full_log: &EventLog, truth: &GroundTruth, eval: &EventLog) -> Result<Vec<f64>> {
    if truth.click_prob.len() != full_log.len() {
        return Err(Error::InvalidConfig(format!(
            "ground truth has {} probabilities for {} events",
            truth.click_prob.len(),
            full_log.len()
        )));
    }
    let mut by_key: std::collections::HashMap<(i64, u64, u64), f64> =
        std::collections::HashMap::with_capacity(full_log.len());
    for (ev, &p) in full_log.iter().zip(&truth.click_prob) {
        by_key.insert((ev.timestamp, ev.user_id, ev.item_id), p);
    }
    eval.iter()
        .map(|ev| {
            by_key
                .get(&(ev.timestamp, ev.user_id, ev.item_id))
                .copied()
                .ok_or_else(|| {
                    Error::HorizonMismatch(format!(
                        "ground truth does not cover eval event (user {}, item {}, ts {})",
                        ev.user_id, ev.item_id, ev.timestamp
                    ))
                })
        })
        .collect()
}

/// Paired bootstrap over eval events: resample indices with replacement,
/// recompute both AUCs on the resample, and take the 2.5/97.5 percentiles of
/// the delta. Each resample derives its own RNG from (seed, index), so the
/// interval does not depend on evaluation order. Single-class resamples are
/// redrawn from follow-up streams.
fn bootstrap_delta_ci(
    scores_base: &[f64],
    scores_leak: &[f64],
    labels: &[u8],
    n_boot: u32,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = labels.len();
    let mut deltas = Vec::with_capacity(n_boot as usize);
    let mut idx = Vec::with_capacity(n);
    let mut lab = Vec::with_capacity(n);
    let mut sb = Vec::with_capacity(n);
    let mut sl = Vec::with_capacity(n);
    for b in 0..n_boot {
        let mut drawn = None;
        for attempt in 0..100u64 {
            let stream = (u64::from(b) << 32) | attempt;
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed_indexed(seed, "lis/bootstrap", stream));
            idx.clear();
            idx.extend((0..n).map(|_| rng.gen_range(0..n)));
            lab.clear();
            lab.extend(idx.iter().map(|&i| labels[i]));
            if lab.iter().any(|&l| l == 1) && lab.iter().any(|&l| l == 0) {
                drawn = Some(());
                break;
            }
        }
        if drawn.is_none() {
            return Err(Error::Numeric(
                "bootstrap could not draw a two-class resample in 100 attempts".into(),
            ));
        }
        sb.clear();
        sb.extend(idx.iter().map(|&i| scores_base[i]));
        sl.clear();
        sl.extend(idx.iter().map(|&i| scores_leak[i]));
        let delta = auc_from_scores(&sl, &lab)? - auc_from_scores(&sb, &lab)?;
        deltas.push(delta);
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite deltas"));
    Ok((quantile(&deltas, 0.025), quantile(&deltas, 0.975)))
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
