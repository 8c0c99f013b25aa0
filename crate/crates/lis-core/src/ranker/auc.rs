//! Exact ROC-AUC via the Mann-Whitney rank statistic with midranks for ties.

use crate::error::{Error, Result};
use crate::eventlog::EventLog;

use super::{featurize, RankModel, SlotValues};

/// Exact AUC of `scores` against binary `labels`.
///
/// Computed as `(R+ - n+(n+ + 1)/2) / (n+ * n-)` where `R+` is the midrank
/// sum of the positives; tied scores share the mean of the ranks they span,
/// making the result identical to counting pairs with ties worth 1/2.
pub fn auc_from_scores(scores: &[f64], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "scores/labels length mismatch");
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score in AUC input".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::AucUndefined(0));
    }
    if n_neg == 0 {
        return Err(Error::AucUndefined(1));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut rank_sum_pos = 0.0_f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share midrank (i + j + 1) / 2 in 1-based ranks
        let midrank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }

    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Scores every event of `log` under `model`. `extras`, when given, must be
/// parallel to the log.
pub fn score_events(
    model: &RankModel,
    log: &EventLog,
    extras: Option<&[SlotValues]>,
) -> Result<Vec<f64>> {
    if let Some(ex) = extras {
        if ex.len() != log.len() {
            return Err(Error::InvalidConfig(format!(
                "extras length {} does not match log length {}",
                ex.len(),
                log.len()
            )));
        }
    }
    log.iter()
        .enumerate()
        .map(|(i, ev)| {
            let fv = featurize(ev, model.schema(), extras.map(|e| &e[i]))?;
            model.predict(&fv)
        })
        .collect()
}

/// AUC of `model` on `eval`, with leak/dense values supplied per event when
/// the schema declares such slots.
pub fn evaluate_auc(
    model: &RankModel,
    eval: &EventLog,
    extras: Option<&[SlotValues]>,
) -> Result<f64> {
    let scores = score_events(model, eval, extras)?;
    let labels: Vec<u8> = eval.iter().map(|e| e.label).collect();
    auc_from_scores(&scores, &labels)
}
