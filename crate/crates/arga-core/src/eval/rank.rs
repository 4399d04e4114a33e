//! Ranking metrics over held-out edge scores.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::EdgeSplit;
use crate::scalar::sigmoid;
use crate::Mat;

/// Link-prediction scores over one held-out edge set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinkEvalResult {
    pub auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Which half of the split to score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalSide {
    Val,
    Test,
}

/// Mann–Whitney AUC: the fraction of (positive, negative) score pairs ranked
/// correctly, ties counting ½. Computed from average ranks in O((p+q)·log)
/// rather than over all p·q pairs.
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> Result<f64> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Argument(
            "auc needs non-empty positive and negative score sets".into(),
        ));
    }
    let mut all: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|&s| (s, true))
        .chain(neg_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // 1-based ranks i+1..=j share the tie-group average.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let np = pos_scores.len() as f64;
    let nn = neg_scores.len() as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Average precision: mean of precision-at-rank over the ranks where a
/// positive sits, scores sorted descending. Exact score ties order positives
/// before negatives.
pub fn average_precision(pos_scores: &[f64], neg_scores: &[f64]) -> Result<f64> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Argument(
            "average_precision needs non-empty positive and negative score sets".into(),
        ));
    }
    let mut all: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|&s| (s, true))
        .chain(neg_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("scores must not be NaN")
            .then(b.1.cmp(&a.1))
    });
    let mut hits = 0usize;
    let mut sum_precision = 0.0f64;
    for (rank0, (_, is_pos)) in all.iter().enumerate() {
        if *is_pos {
            hits += 1;
            sum_precision += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum_precision / pos_scores.len() as f64)
}

fn pair_scores(z: &Mat, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = z.rows();
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::Argument(format!(
                    "edge ({i}, {j}) indexes outside the {n}-row embedding"
                )));
            }
            let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            Ok(sigmoid(dot))
        })
        .collect()
}

/// Scores one side of the split with sigmoid(z_i · z_j) and reports AUC/AP.
pub fn evaluate_link_prediction(
    z: &Mat,
    split: &EdgeSplit,
    which: EvalSide,
) -> Result<LinkEvalResult> {
    let (pos, neg) = match which {
        EvalSide::Val => (&split.val_pos, &split.val_neg),
        EvalSide::Test => (&split.test_pos, &split.test_neg),
    };
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Argument(format!(
            "{} split side has an empty edge set",
            if which == EvalSide::Val {
                "val"
            } else {
                "test"
            }
        )));
    }
    let pos_scores = pair_scores(z, pos)?;
    let neg_scores = pair_scores(z, neg)?;
    Ok(LinkEvalResult {
        auc: auc(&pos_scores, &neg_scores)?,
        ap: average_precision(&pos_scores, &neg_scores)?,
        n_pos: pos.len(),
        n_neg: neg.len(),
    })
}
