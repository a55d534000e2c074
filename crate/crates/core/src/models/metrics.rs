use serde::{Deserialize, Serialize};

use crate::error::{CloakError, Result};

/// A targeting threshold: the k-th largest score of a population,
/// k = max(1, floor(n·(1−q))). Scores at or above it are positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub quantile: f64,
    pub threshold: f64,
    pub k: usize,
    pub n: usize,
    pub source: String,
}

impl ThresholdSpec {
    pub fn is_positive(&self, score: f64) -> bool {
        score >= self.threshold
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

pub fn quantile_threshold(scores: &[f64], q: f64) -> Result<ThresholdSpec> {
    if scores.is_empty() {
        return Err(CloakError::InvalidArgument(
            "cannot take a quantile of an empty score list".into(),
        ));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(CloakError::InvalidArgument(format!(
            "quantile must be in (0,1), got {q}"
        )));
    }
    let n = scores.len();
    // The epsilon absorbs representation error in 1 - q (e.g. 1 - 0.9).
    let k = ((n as f64 * (1.0 - q) + 1e-9).floor() as usize).clamp(1, n);
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(ThresholdSpec {
        quantile: q,
        threshold: sorted[k - 1],
        k,
        n,
        source: String::new(),
    })
}

/// Area under the ROC curve via the Mann–Whitney rank statistic; ties count ½.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CloakError::InvalidArgument(
            "scores and labels differ in length".into(),
        ));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CloakError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (mid)ranks of positives, ranks starting at 1.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&o| labels[o]).count();
        rank_sum += mid * pos_in_block as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CloakError::InvalidArgument(
            "pearson inputs differ in length".into(),
        ));
    }
    if a.len() < 2 {
        return Err(CloakError::InvalidArgument(
            "pearson needs at least two points".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(CloakError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
