//! Minimal counterfactual explanations: the smallest set of a user's active
//! features whose removal pushes the model score below a threshold.
//!
//! Removing a feature means setting it to its training median, which is 0
//! for sparse binary footprints, so an explanation is a set of likes to hide.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{CloakError, Result};
use crate::models::{predict_score, LinearModel, ScoreModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Item indices in removal order.
    pub features: Vec<usize>,
    pub score_before: f64,
    pub score_after: f64,
    pub target_threshold: f64,
    pub expansions: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Search caps for [`sedc_explain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_size: usize,
    pub max_expansions: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_size: 30,
            max_expansions: 50_000,
        }
    }
}

/// `row` with `removed` taken out. Both inputs ascending.
pub fn remove_features(row: &[usize], removed_sorted: &[usize]) -> Vec<usize> {
    row.iter()
        .copied()
        .filter(|j| removed_sorted.binary_search(j).is_err())
        .collect()
}

struct Node {
    score: f64,
    key: Vec<usize>,
    path: Vec<usize>,
}

impl Node {
    fn rank(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.key.len().cmp(&other.key.len()))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; reverse so the lowest score pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.rank(self)
    }
}

fn check_positive(score: f64, threshold: f64) -> Result<()> {
    if score < threshold {
        return Err(CloakError::NotPositive { score, threshold });
    }
    Ok(())
}

/// Best-first search for a minimal set of active features to remove.
///
/// Candidate subsets are expanded lowest-score first; every expansion adds one
/// more active feature. The first generated subsets that bring the score
/// strictly below `threshold` end the search and the lowest-scoring of them
/// is returned. Ties break on the lexicographically smallest feature set.
pub fn sedc_explain<M: ScoreModel + ?Sized>(
    model: &M,
    row: &[usize],
    threshold: f64,
    limits: SearchLimits,
) -> Result<Explanation> {
    let start = Instant::now();
    let score_before = model.score(row);
    check_positive(score_before, threshold)?;

    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    heap.push(Node {
        score: score_before,
        key: Vec::new(),
        path: Vec::new(),
    });
    let mut expansions = 0;

    while let Some(node) = heap.pop() {
        if expansions >= limits.max_expansions {
            break;
        }
        expansions += 1;
        if node.key.len() >= limits.max_size {
            continue;
        }
        let mut best: Option<Node> = None;
        let mut children = Vec::new();
        for &f in row {
            if node.key.binary_search(&f).is_ok() {
                continue;
            }
            let mut key = node.key.clone();
            key.insert(key.partition_point(|&k| k < f), f);
            if !seen.insert(key.clone()) {
                continue;
            }
            let score = model.score(&remove_features(row, &key));
            let mut path = node.path.clone();
            path.push(f);
            let child = Node { score, key, path };
            if score < threshold {
                if best.as_ref().is_none_or(|b| child.rank(b) == Ordering::Less) {
                    best = Some(child);
                }
            } else {
                children.push(child);
            }
        }
        if let Some(b) = best {
            return Ok(Explanation {
                features: b.path,
                score_before,
                score_after: b.score,
                target_threshold: threshold,
                expansions,
                elapsed: start.elapsed(),
            });
        }
        heap.extend(children);
    }
    Err(CloakError::NotFound { expansions })
}

/// Optimal explanation for a linear model: drop active features in
/// descending weight order (ties by index) until the score falls below
/// `threshold`.
pub fn linear_explain(model: &LinearModel, row: &[usize], threshold: f64) -> Result<Explanation> {
    let start = Instant::now();
    let score_before = predict_score(model, row);
    check_positive(score_before, threshold)?;
    let mut order: Vec<usize> = row.to_vec();
    order.sort_by(|&a, &b| model.weight(b).total_cmp(&model.weight(a)).then(a.cmp(&b)));

    let mut removed_sorted: Vec<usize> = Vec::new();
    let mut features = Vec::new();
    for (step, &f) in order.iter().enumerate() {
        if model.weight(f) <= 0.0 {
            break;
        }
        removed_sorted.insert(removed_sorted.partition_point(|&k| k < f), f);
        features.push(f);
        // Rescore the actual remaining row so the result agrees bit-for-bit
        // with predict_score on the cloaked row.
        let score = predict_score(model, &remove_features(row, &removed_sorted));
        if score < threshold {
            return Ok(Explanation {
                features,
                score_before,
                score_after: score,
                target_threshold: threshold,
                expansions: step + 1,
                elapsed: start.elapsed(),
            });
        }
    }
    Err(CloakError::NotFound {
        expansions: features.len(),
    })
}

/// Which search produces explanations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Explainer {
    Linear,
    Sedc(SearchLimits),
}

impl Default for Explainer {
    fn default() -> Self {
        Explainer::Linear
    }
}

impl Explainer {
    pub fn explain(&self, model: &LinearModel, row: &[usize], threshold: f64) -> Result<Explanation> {
        match self {
            Explainer::Linear => linear_explain(model, row, threshold),
            Explainer::Sedc(limits) => sedc_explain(model, row, threshold, *limits),
        }
    }
}
