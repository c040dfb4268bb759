use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ranking quality where a lower score marks a better candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub auroc: f64,
    pub auprc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn class_counts(scores: &[(f64, bool)]) -> Result<(usize, usize)> {
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClasses { n_pos, n_neg });
    }
    if let Some((v, _)) = scores.iter().find(|(v, _)| v.is_nan()) {
        return Err(Error::InvalidParameter(format!(
            "score {v} is not comparable"
        )));
    }
    Ok((n_pos, n_neg))
}

/// Probability that a random positive scores below a random negative, ties
/// counting one half.
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores)?;
    let mut neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &(v, _) in scores.iter().filter(|s| s.1) {
        let below_or_eq = neg.partition_point(|&x| x <= v);
        let below = neg.partition_point(|&x| x < v);
        wins += (n_neg - below_or_eq) as f64 + 0.5 * (below_or_eq - below) as f64;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// Average precision over the ascending-score ranking. Tied scores keep
/// their input order.
pub fn auprc(scores: &[(f64, bool)]) -> Result<f64> {
    let (n_pos, _) = class_counts(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if scores[i].1 {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / n_pos as f64)
}

pub fn ranking_metrics(scores: &[(f64, bool)]) -> Result<RankingMetrics> {
    let (n_pos, n_neg) = class_counts(scores)?;
    Ok(RankingMetrics {
        auroc: auroc(scores)?,
        auprc: auprc(scores)?,
        n_pos,
        n_neg,
    })
}
/// Points of the ROC curve as (false positive rate, true positive rate),
/// sweeping the threshold upward through the distinct scores.
pub fn roc_points(scores: &[(f64, bool)]) -> Result<Vec<(f64, f64)>> {
    let (n_pos, n_neg) = class_counts(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (j, &(v, pos)) in sorted.iter().enumerate() {
        if pos {
            tp += 1;
        } else {
            fp += 1;
        }
        if sorted.get(j + 1).is_none_or(|n| n.0 != v) {
            pts.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        }
    }
    Ok(pts)
}

/// Points of the precision-recall curve as (recall, precision) along the
/// ascending-score ranking, ties kept in input order.
pub fn pr_points(scores: &[(f64, bool)]) -> Result<Vec<(f64, f64)>> {
    let (n_pos, _) = class_counts(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut pts = Vec::with_capacity(scores.len());
    for (rank, &i) in order.iter().enumerate() {
        if scores[i].1 {
            hits += 1;
        }
        pts.push((hits as f64 / n_pos as f64, hits as f64 / (rank + 1) as f64));
    }
    Ok(pts)
}
