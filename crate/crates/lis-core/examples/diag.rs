//! Scratch diagnostics for tuning (not part of the test suite).

use std::time::Instant;

use lis_core::eventlog::{generate_synthetic, temporal_split, SyntheticConfig, TemporalSplit};
use lis_core::leakage::{attach_co_click_feature, compute_lis, LeakSource, LeakSpec, LisOptions};
use lis_core::ranker::{FeatureSchema, Slot, TrainConfig};

fn main() {
    let t0 = Instant::now();
    let mode = std::env::args().nth(1).unwrap_or_else(|| "next".into());
    let seeds: Vec<u64> = std::env::args()
        .nth(2)
        .map(|s| s.parse::<u64>().unwrap())
        .map(|n| (1..=n).collect())
        .unwrap_or_else(|| vec![1, 2, 3]);

    match mode.as_str() {
        "next" => {
            // criterion: next-click LIS > 0.0010 with ci_low > 0
            for &seed in &seeds {
                let synth = SyntheticConfig {
                    num_users: 1000,
                    num_items: 150,
                    latent_dim: 16,
                    drift_rate: 0.1,
                    item_lifecycle_days: 10,
                    days: 53,
                    events_per_day: 4000,
                    content_noise: 0.0,
                    seed,
                };
                let split = TemporalSplit::from_days(45, 6, 7);
                let cfg = TrainConfig {
                    seed,
                    learning_rate: 0.05,
                    epochs: 5,
                    l2: 1e-3,
                    ..TrainConfig::default()
                };
                run_one(&synth, &split, &cfg, LeakSpec::NextClick, false, seed);
            }
        }
        "future" => {
            for &seed in &seeds {
                let synth = SyntheticConfig {
                    num_users: 2000,
                    num_items: 600,
                    latent_dim: 16,
                    drift_rate: 0.1,
                    item_lifecycle_days: 20,
                    days: 80,
                    events_per_day: 2000,
                    content_noise: 0.0,
                    seed,
                };
                let split = TemporalSplit::from_days(45, 5, 7);
                let cfg = TrainConfig {
                    seed,
                    learning_rate: 0.05,
                    epochs: 6,
                    l2: 1e-3,
                    ..TrainConfig::default()
                };
                run_one(
                    &synth,
                    &split,
                    &cfg,
                    LeakSpec::FutureEmbedding { horizon_days: 7 },
                    false,
                    seed,
                );
                run_one(
                    &synth,
                    &split,
                    &cfg,
                    LeakSpec::FutureEmbedding { horizon_days: 30 },
                    false,
                    seed,
                );
            }
        }
        "sim" => {
            for &seed in &seeds {
                let synth = SyntheticConfig {
                    num_users: 2500,
                    num_items: 2500,
                    latent_dim: 16,
                    drift_rate: 0.02,
                    item_lifecycle_days: 25,
                    days: 48,
                    events_per_day: 2000,
                    content_noise: 0.0,
                    seed,
                };
                let split = TemporalSplit::from_days(45, 3, 7);
                let cfg = TrainConfig {
                    seed,
                    learning_rate: 0.05,
                    epochs: 4,
                    l2: 1e-3,
                    ..TrainConfig::default()
                };
                run_one(&synth, &split, &cfg, LeakSpec::SimilarItems { k: 5 }, false, seed);
                run_one(&synth, &split, &cfg, LeakSpec::SimilarItems { k: 5 }, true, seed);
            }
        }
        "down" => {
            for &seed in &seeds {
                run_downstream(seed);
            }
        }
        "null" => {
            // 100k-event log: constant probe and self-item probe
            for &seed in &seeds {
                let synth = SyntheticConfig {
                    num_users: 2000,
                    num_items: 600,
                    latent_dim: 16,
                    drift_rate: 0.05,
                    item_lifecycle_days: 20,
                    days: 50,
                    events_per_day: 2000,
                    content_noise: 0.0,
                    seed,
                };
                let split = TemporalSplit::from_days(45, 5, 7);
                let cfg = TrainConfig {
                    seed,
                    learning_rate: 0.05,
                    epochs: 6,
                    l2: 1e-3,
                    ..TrainConfig::default()
                };
                run_one(&synth, &split, &cfg, LeakSpec::ConstantProbe, false, seed);
                run_one(&synth, &split, &cfg, LeakSpec::SelfItem, false, seed);
            }
        }
        "dom" => {
            for &seed in &seeds {
                let synth = SyntheticConfig {
                    num_users: 1000,
                    num_items: 150,
                    latent_dim: 16,
                    drift_rate: 0.1,
                    item_lifecycle_days: 10,
                    days: 53,
                    events_per_day: 4000,
                    content_noise: 0.0,
                    seed,
                };
                let split = TemporalSplit::from_days(45, 6, 7);
                let cfg = TrainConfig {
                    seed,
                    learning_rate: 0.05,
                    epochs: 5,
                    l2: 1e-3,
                    ..TrainConfig::default()
                };
                for leak in [
                    LeakSpec::OracleProbability,
                    LeakSpec::NextClick,
                    LeakSpec::SimilarItems { k: 5 },
                    LeakSpec::FutureEmbedding { horizon_days: 7 },
                    LeakSpec::ConstantProbe,
                    LeakSpec::SelfItem,
                ] {
                    run_one(&synth, &split, &cfg, leak, false, seed);
                }
            }
        }
        other => panic!("unknown mode {other}"),
    }
    println!("total {:?}", t0.elapsed());
}

fn run_downstream(seed: u64) {
    use lis_core::align::{build_alignment_data, downstream_eval, train_encoder, EncoderHyper};
    use lis_core::ranker::train;
    use std::collections::BTreeSet;

    let synth = SyntheticConfig {
        num_users: 1500,
        num_items: 1200,
        latent_dim: 16,
        drift_rate: 0.02,
        item_lifecycle_days: 10,
        days: 48,
        events_per_day: 4000,
        content_noise: 0.0,
        seed,
    };
    let (log, content, _truth) = generate_synthetic(&synth).unwrap();

    // period A: train the production proxy, snapshot its embeddings
    let a_log = log.slice_time(0, 25 * 86_400);
    let cfg = TrainConfig {
        seed,
        learning_rate: 0.05,
        epochs: 4,
        l2: 1e-3,
        ..TrainConfig::default()
    };
    let cfg_a = TrainConfig { epochs: 8, ..cfg.clone() };
    let schema = FeatureSchema::baseline(1 << 16, 16);
    let model_a = train(&a_log, &schema, &cfg_a, None).unwrap();
    let snap_a = model_a.snapshot();

    let data = build_alignment_data(&snap_a, &content, 50).unwrap();
    let hyper = EncoderHyper {
        hidden: 64,
        learning_rate: 0.1,
        max_epochs: 200,
        patience: 10,
        recall_k: 10,
        seed,
    };
    let t = Instant::now();
    let (encoder, history) = train_encoder(&data, 0.25, &hyper).unwrap();
    let best = history
        .iter()
        .map(|r| r.mean_recall_at_k)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "seed={seed} pairs={} encoder epochs={} best recall@10 {:.3} ({:?})",
        data.pairs.len(),
        history.len(),
        best,
        t.elapsed()
    );

    // period B: disjoint items by construction (gap > lifecycle)
    let b_train = log.slice_time(35 * 86_400, 45 * 86_400);
    let b_eval = log.slice_time(45 * 86_400, 48 * 86_400);
    let align_items: BTreeSet<u64> = data.item_ids().collect();
    let report = downstream_eval(
        &encoder,
        &align_items,
        &snap_a,
        &content,
        &b_train,
        &b_eval,
        &schema,
        &cfg,
    )
    .unwrap();
    println!(
        "seed={seed} base {:.4} enc {:.4} raw {:.4} | d_enc {:+.5} d_raw {:+.5} hits={}",
        report.auc_baseline,
        report.auc_encoder,
        report.auc_raw_lookup,
        report.delta_encoder,
        report.delta_raw,
        report.raw_lookup_hits
    );
}

fn run_one(
    synth: &SyntheticConfig,
    split: &TemporalSplit,
    cfg: &TrainConfig,
    leak: LeakSpec,
    co_click: bool,
    seed: u64,
) {
    let (log, _content, truth) = generate_synthetic(synth).unwrap();
    let (mut train_log, mut eval_log) = temporal_split(&log, split).unwrap();
    let mut schema = FeatureSchema::baseline(1 << 16, 16);
    if co_click {
        let (t, e) = attach_co_click_feature(&train_log, &eval_log, 10, "co_click").unwrap();
        train_log = t;
        eval_log = e;
        schema = schema.with_slot(Slot::Context("co_click".into()));
    }
    let source = LeakSource {
        full_log: &log,
        split,
        ground_truth: Some(&truth),
    };
    let opts = LisOptions {
        n_boot: 200,
        ..LisOptions::default()
    };
    let t = Instant::now();
    let rep = compute_lis(&train_log, &eval_log, &schema, &leak, &source, cfg, &opts).unwrap();
    println!(
        "seed={seed} cc={} {:<22} base {:.4} leak {:.4} lis {:+.5} ci [{:+.5},{:+.5}] sig={} ({:?})",
        u8::from(co_click),
        leak.label(),
        rep.auc_base,
        rep.auc_leak,
        rep.lis,
        rep.ci_low,
        rep.ci_high,
        rep.significant,
        t.elapsed()
    );
}
