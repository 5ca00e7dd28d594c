//! Exact ROC AUC (rank-sum form) and log loss.

use crate::error::{Error, Result};
use crate::numeric::PROB_EPS;

/// Parallel scores and binary labels.
#[derive(Debug, Clone, Copy)]
pub struct ScoredSet<'a> {
    pub scores: &'a [f64],
    pub labels: &'a [f64],
}

impl<'a> ScoredSet<'a> {
    pub fn new(scores: &'a [f64], labels: &'a [f64]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(
                "ScoredSet",
                format!("{} scores", scores.len()),
                format!("{} labels", labels.len()),
            ));
        }
        Ok(Self { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Mann-Whitney AUC with average ranks for tied scores:
/// `P(score⁺ > score⁻) + ½·P(tie)`.
pub fn auc(set: ScoredSet<'_>) -> Result<f64> {
    let n = set.len();
    let positives = set.labels.iter().filter(|&&y| y > 0.5).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::MetricUndefined(format!(
            "AUC needs both classes, got {positives} positive and {negatives} negative"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| set.scores[a].total_cmp(&set.scores[b]));

    // Ranks are 1-based; a tie group spanning sorted positions [i, j) shares
    // the rank (i + 1 + j) / 2.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && set.scores[order[j]] == set.scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let group_positives = order[i..j]
            .iter()
            .filter(|&&r| set.labels[r] > 0.5)
            .count();
        positive_rank_sum += avg_rank * group_positives as f64;
        i = j;
    }

    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Mean binary cross-entropy with scores clamped to `[1e-15, 1 - 1e-15]`.
pub fn logloss(set: ScoredSet<'_>) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::MetricUndefined("log loss of an empty set".into()));
    }
    let total: f64 = set
        .scores
        .iter()
        .zip(set.labels)
        .map(|(&s, &y)| row_logloss(s, y))
        .sum();
    Ok(total / set.len() as f64)
}

#[inline]
pub(crate) fn row_logloss(score: f64, label: f64) -> f64 {
    let p = score.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// True when `transform` leaves the AUC of `set` unchanged. Exact equality is
/// expected for any strictly increasing transform since only ranks matter.
pub fn auc_monotone_invariance_check<F>(set: ScoredSet<'_>, transform: F) -> Result<bool>
where
    F: Fn(f64) -> f64,
{
    let before = auc(set)?;
    let mapped: Vec<f64> = set.scores.iter().map(|&s| transform(s)).collect();
    let after = auc(ScoredSet::new(&mapped, set.labels)?)?;
    Ok(before == after)
}
