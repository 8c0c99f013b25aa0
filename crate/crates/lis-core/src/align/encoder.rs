//! Two-layer content encoder trained with a cosine loss, validated by mean
//! recall@k over the held-out pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{derive_seed, derive_seed_indexed};

use super::{AlignPair, AlignmentDataset};

const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderHyper {
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: u32,
    /// Stop after this many epochs without a validation-recall improvement.
    pub patience: u32,
    pub recall_k: usize,
    pub seed: u64,
}

impl Default for EncoderHyper {
    fn default() -> Self {
        Self {
            hidden: 64,
            learning_rate: 0.1,
            max_epochs: 200,
            patience: 10,
            recall_k: 10,
            seed: 0,
        }
    }
}

/// Mean recall@k over one validation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub k: usize,
    pub mean_recall_at_k: f64,
    pub n_queries: usize,
}

/// `content -> tanh(W1 x + b1) -> W2 h + b2`, output in embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentEncoder {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    /// Row-major `hidden_dim x in_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `out_dim x hidden_dim`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub seed: u64,
}

impl ContentEncoder {
    /// Glorot-uniform init from a seeded stream.
    pub fn new(in_dim: usize, hidden_dim: usize, out_dim: usize, seed: u64) -> Result<Self> {
        if out_dim >= 100 {
            return Err(Error::InvalidConfig(format!(
                "encoder output dimension must stay under 100, got {out_dim}"
            )));
        }
        if in_dim == 0 || hidden_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidConfig("encoder dimensions must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "encoder/init"));
        let mut layer = |rows: usize, cols: usize| -> Vec<f64> {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let w1 = layer(hidden_dim, in_dim);
        let w2 = layer(out_dim, hidden_dim);
        Ok(Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; out_dim],
            seed,
        })
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        (0..self.hidden_dim)
            .map(|r| {
                let row = &self.w1[r * self.in_dim..(r + 1) * self.in_dim];
                let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
                (z + self.b1[r]).tanh()
            })
            .collect()
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let h = self.hidden(x);
        (0..self.out_dim)
            .map(|r| {
                let row = &self.w2[r * self.hidden_dim..(r + 1) * self.hidden_dim];
                let z: f64 = row.iter().zip(&h).map(|(w, v)| w * v).sum();
                z + self.b2[r]
            })
            .collect()
    }

    /// Cosine-distance loss `1 - cos(encode(x), y)` for one pair, plus the
    /// SGD update. Returns the pre-update loss.
    fn sgd_step(&mut self, x: &[f64], y: &[f64], lr: f64) -> f64 {
        let h = self.hidden(x);
        let f: Vec<f64> = (0..self.out_dim)
            .map(|r| {
                let row = &self.w2[r * self.hidden_dim..(r + 1) * self.hidden_dim];
                let z: f64 = row.iter().zip(&h).map(|(w, v)| w * v).sum();
                z + self.b2[r]
            })
            .collect();

        let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nf < NORM_EPS || ny < NORM_EPS {
            // Degenerate direction: cosine undefined, nothing to push against.
            return 1.0;
        }
        let cos = f.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (nf * ny);
        let loss = 1.0 - cos;

        // dL/df = -(y_hat - cos * f_hat) / |f|
        let grad_f: Vec<f64> = f
            .iter()
            .zip(y)
            .map(|(fi, yi)| -((yi / ny) - cos * (fi / nf)) / nf)
            .collect();

        // Backprop through the linear output layer.
        let mut grad_h = vec![0.0; self.hidden_dim];
        for r in 0..self.out_dim {
            let g = grad_f[r];
            let row_start = r * self.hidden_dim;
            for c in 0..self.hidden_dim {
                grad_h[c] += g * self.w2[row_start + c];
                self.w2[row_start + c] -= lr * g * h[c];
            }
            self.b2[r] -= lr * g;
        }
        // Through tanh into the first layer.
        for r in 0..self.hidden_dim {
            let g = grad_h[r] * (1.0 - h[r] * h[r]);
            let row_start = r * self.in_dim;
            for c in 0..self.in_dim {
                self.w1[row_start + c] -= lr * g * x[c];
            }
            self.b1[r] -= lr * g;
        }
        loss
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
        let json = serde_json::to_string(self).expect("encoder serializes");
        std::fs::write(path, json).map_err(|source| Error::Io {
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
            field: "encoder".into(),
            message: e.to_string(),
        })
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// Mean recall@k with the validation set as both query and corpus: for each
/// pair, rank every validation target by cosine similarity to the encoded
/// content (ties to the smaller item id) and score a hit when the pair's own
/// target lands in the top k.
pub fn mean_recall(encoder: &ContentEncoder, val_pairs: &[AlignPair], k: usize) -> Result<RecallReport> {
    if k == 0 {
        return Err(Error::InvalidConfig("recall k must be >= 1".into()));
    }
    if k >= val_pairs.len() {
        return Err(Error::InvalidConfig(format!(
            "recall k = {k} must be smaller than the validation set ({} pairs)",
            val_pairs.len()
        )));
    }
    let mut hits = 0usize;
    for query in val_pairs {
        let encoded = encoder.encode(&query.content);
        let mut ranked: Vec<(f64, u64)> = val_pairs
            .iter()
            .map(|cand| (cosine(&encoded, &cand.target), cand.item_id))
            .collect();
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("finite similarity")
                .then(a.1.cmp(&b.1))
        });
        if ranked[..k].iter().any(|&(_, id)| id == query.item_id) {
            hits += 1;
        }
    }
    Ok(RecallReport {
        k,
        mean_recall_at_k: hits as f64 / val_pairs.len() as f64,
        n_queries: val_pairs.len(),
    })
}

/// Deterministic train/validation split of the dataset.
pub fn split_pairs(
    data: &AlignmentDataset,
    val_fraction: f64,
    seed: u64,
) -> (Vec<AlignPair>, Vec<AlignPair>) {
    let n = data.pairs.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "encoder/val_split"));
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
    let val: Vec<AlignPair> = order[..n_val].iter().map(|&i| data.pairs[i].clone()).collect();
    let train: Vec<AlignPair> = order[n_val..].iter().map(|&i| data.pairs[i].clone()).collect();
    (train, val)
}

/// Fits an encoder to the dataset's train portion under a cosine loss,
/// evaluating mean recall@k on the validation portion after every epoch.
/// Stops when recall has not improved for `patience` epochs and returns the
/// best-recall encoder together with the full per-epoch recall history.
pub fn train_encoder(
    data: &AlignmentDataset,
    val_fraction: f64,
    hyper: &EncoderHyper,
) -> Result<(ContentEncoder, Vec<RecallReport>)> {
    if data.pairs.len() < 10 {
        return Err(Error::InvalidConfig(format!(
            "alignment needs at least 10 pairs, got {}",
            data.pairs.len()
        )));
    }
    if !(val_fraction > 0.0 && val_fraction <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "val_fraction must be in (0, 0.5], got {val_fraction}"
        )));
    }
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig("encoder learning_rate must be > 0".into()));
    }
    let (train, val) = split_pairs(data, val_fraction, hyper.seed);
    if hyper.recall_k >= val.len() {
        return Err(Error::InvalidConfig(format!(
            "recall k = {} must be smaller than the validation set ({} pairs)",
            hyper.recall_k,
            val.len()
        )));
    }

    let mut encoder = ContentEncoder::new(
        data.content_dim(),
        hyper.hidden,
        data.target_dim(),
        hyper.seed,
    )?;
    let mut best = encoder.clone();
    let mut best_recall = f64::NEG_INFINITY;
    let mut since_best = 0u32;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..hyper.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_indexed(
            hyper.seed,
            "encoder/shuffle",
            u64::from(epoch),
        ));
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        for &i in &order {
            let pair = &train[i];
            let loss = encoder.sgd_step(&pair.content, &pair.target, hyper.learning_rate);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "encoder training diverged at epoch {epoch}; last finite mean recall {:.6}, best so far {:.6}",
                    history.last().map_or(0.0, |r: &RecallReport| r.mean_recall_at_k),
                    best_recall.max(0.0),
                )));
            }
            loss_sum += loss;
        }
        let _ = loss_sum;

        let report = mean_recall(&encoder, &val, hyper.recall_k)?;
        let recall = report.mean_recall_at_k;
        history.push(report);
        if recall > best_recall {
            best_recall = recall;
            best = encoder.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                break;
            }
        }
    }
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs_with(n: usize, dim: usize, f: impl Fn(usize, usize) -> f64) -> Vec<AlignPair> {
        (0..n)
            .map(|i| {
                let v: Vec<f64> = (0..dim).map(|d| f(i, d)).collect();
                AlignPair {
                    item_id: i as u64,
                    content: v.clone(),
                    target: v,
                }
            })
            .collect()
    }

    /// Identity encoder for recall tests: out = W2 tanh(W1 x) undoes nothing,
    /// so build one whose encode(x) ~ x via direct weight assignment is
    /// fiddly; instead exercise mean_recall with a hand-made encoder whose
    /// output equals its input by construction (tanh inverted via atanh).
    fn exact_encoder(dim: usize) -> ContentEncoder {
        // hidden = tanh(x * 0.001) ~ 0.001 x, out = hidden * 1000 ~ x.
        // With inputs of magnitude <= 1 the relative error is ~3e-7, far
        // below the separation of the test vectors.
        let mut w1 = vec![0.0; dim * dim];
        let mut w2 = vec![0.0; dim * dim];
        for i in 0..dim {
            w1[i * dim + i] = 1e-3;
            w2[i * dim + i] = 1e3;
        }
        ContentEncoder {
            in_dim: dim,
            hidden_dim: dim,
            out_dim: dim,
            w1,
            b1: vec![0.0; dim],
            w2,
            b2: vec![0.0; dim],
            seed: 0,
        }
    }

    #[test]
    fn exact_targets_give_recall_one() {
        // sin() keeps all 20 target directions distinct
        let pairs = pairs_with(20, 6, |i, d| ((i * 6 + d) as f64 * 0.7).sin());
        let enc = exact_encoder(6);
        let report = mean_recall(&enc, &pairs, 1).unwrap();
        assert_eq!(report.mean_recall_at_k, 1.0);
        assert_eq!(report.n_queries, 20);
    }

    #[test]
    fn near_total_k_gives_recall_one() {
        let pairs = pairs_with(12, 5, |i, d| ((i * 5 + d) as f64 * 0.9).sin());
        let enc = exact_encoder(5);
        let report = mean_recall(&enc, &pairs, pairs.len() - 1).unwrap();
        assert_eq!(report.mean_recall_at_k, 1.0);
    }

    #[test]
    fn k_bounds_are_enforced() {
        let pairs = pairs_with(5, 3, |i, d| (i + d) as f64);
        let enc = exact_encoder(3);
        assert!(mean_recall(&enc, &pairs, 5).is_err());
        assert!(mean_recall(&enc, &pairs, 0).is_err());
        assert!(mean_recall(&enc, &pairs, 4).is_ok());
    }

    #[test]
    fn encoder_init_is_deterministic() {
        let a = ContentEncoder::new(8, 16, 4, 3).unwrap();
        let b = ContentEncoder::new(8, 16, 4, 3).unwrap();
        assert_eq!(a, b);
        let c = ContentEncoder::new(8, 16, 4, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn encoder_rejects_wide_output() {
        assert!(ContentEncoder::new(8, 16, 100, 0).is_err());
        assert!(ContentEncoder::new(8, 16, 99, 0).is_ok());
    }

    #[test]
    fn train_encoder_validates_inputs() {
        let data = AlignmentDataset {
            pairs: pairs_with(5, 3, |i, d| (i + d) as f64),
            min_updates: 0,
        };
        assert!(train_encoder(&data, 0.2, &EncoderHyper::default()).is_err());
        let data = AlignmentDataset {
            pairs: pairs_with(30, 3, |i, d| (i + d) as f64),
            min_updates: 0,
        };
        assert!(train_encoder(&data, 0.0, &EncoderHyper::default()).is_err());
        assert!(train_encoder(&data, 0.9, &EncoderHyper::default()).is_err());
    }

    #[test]
    fn encoder_round_trips_through_disk() {
        let enc = ContentEncoder::new(4, 8, 3, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("encoder.json");
        enc.save(&path).unwrap();
        assert_eq!(ContentEncoder::load(&path).unwrap(), enc);
    }
}
