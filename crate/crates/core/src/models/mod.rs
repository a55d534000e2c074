//! Linear targeting models over binary footprints, their training, and the
//! metrics and thresholds used to turn scores into decisions.

mod cv;
mod logreg;
mod metrics;
mod ridge;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CloakError, Result};

pub use cv::{cv_folds, grid_search_cv, CvResult};
pub use logreg::{logreg_objective, train_logreg_l2, LogregOptions};
pub use metrics::{auc, pearson, quantile_threshold, ThresholdSpec};
pub use ridge::{fit_ridge, train_ridge, RidgeFit};

/// Default grid for the logistic-regression C parameter.
pub const DEFAULT_C_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
/// Default grid for the ridge penalty.
pub const DEFAULT_ALPHA_GRID: [f64; 6] = [1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    BinaryClassifier,
    ContinuousRegressor,
}

/// Weights over item features plus an intercept.
///
/// `c` is the regularization setting it was trained with: the inverse
/// strength C for classifiers, the ridge penalty alpha for regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    pub kind: ModelKind,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Anything that scores a set of active features; the counterfactual search
/// only needs this.
pub trait ScoreModel {
    fn score(&self, active: &[usize]) -> f64;
}

impl LinearModel {
    pub fn zeros(n_features: usize, kind: ModelKind) -> Self {
        LinearModel {
            weights: vec![0.0; n_features],
            intercept: 0.0,
            c: 1.0,
            kind,
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// w·x + b for the binary row `active`. Features outside the vocabulary
    /// are ignored.
    pub fn linear_predictor(&self, active: &[usize]) -> f64 {
        self.intercept
            + active
                .iter()
                .filter_map(|&j| self.weights.get(j))
                .sum::<f64>()
    }

    pub fn weight(&self, feature: usize) -> f64 {
        self.weights.get(feature).copied().unwrap_or(0.0)
    }

    /// Serializable form keyed by external item ids.
    pub fn to_record(&self, item_ids: &[String]) -> ModelRecord {
        ModelRecord {
            kind: self.kind,
            c: self.c,
            intercept: self.intercept,
            vocabulary_size: item_ids.len(),
            vocabulary_hash: vocabulary_hash(item_ids),
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(j, &w)| (item_ids[j].clone(), w))
                .collect(),
        }
    }

    pub fn from_record(record: &ModelRecord, item_ids: &[String]) -> Result<Self> {
        if record.vocabulary_hash != vocabulary_hash(item_ids) {
            return Err(CloakError::InvalidArgument(
                "model vocabulary does not match the item space".into(),
            ));
        }
        let index: std::collections::HashMap<&str, usize> = item_ids
            .iter()
            .enumerate()
            .map(|(j, id)| (id.as_str(), j))
            .collect();
        let mut weights = vec![0.0; item_ids.len()];
        for (id, w) in &record.weights {
            let j = index.get(id.as_str()).ok_or_else(|| {
                CloakError::InvalidArgument(format!("unknown item `{id}` in model"))
            })?;
            weights[*j] = *w;
        }
        Ok(LinearModel {
            weights,
            intercept: record.intercept,
            c: record.c,
            kind: record.kind,
        })
    }
}

impl ScoreModel for LinearModel {
    fn score(&self, active: &[usize]) -> f64 {
        predict_score(self, active)
    }
}

/// σ(w·x + b) for a binary row.
pub fn predict_score(model: &LinearModel, active: &[usize]) -> f64 {
    sigmoid(model.linear_predictor(active))
}

/// Regression output w·x + b.
pub fn predict_value(model: &LinearModel, active: &[usize]) -> f64 {
    model.linear_predictor(active)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub kind: ModelKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub intercept: f64,
    pub vocabulary_size: usize,
    pub vocabulary_hash: String,
    pub weights: Vec<(String, f64)>,
}

pub fn vocabulary_hash(item_ids: &[String]) -> String {
    let mut h = Sha256::new();
    for id in item_ids {
        h.update(id.as_bytes());
        h.update(b"\n");
    }
    format!("{:x}", h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_scores_half() {
        let m = LinearModel::zeros(3, ModelKind::BinaryClassifier);
        assert_eq!(predict_score(&m, &[0, 2]), 0.5);
    }

    #[test]
    fn log_three_gives_three_quarters() {
        let mut m = LinearModel::zeros(2, ModelKind::BinaryClassifier);
        m.weights[1] = 3f64.ln();
        assert!((predict_score(&m, &[1]) - 0.75).abs() < 1e-15);
        // Out-of-vocabulary features are ignored.
        assert!((predict_score(&m, &[1, 7]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn record_round_trip() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = LinearModel {
            weights: vec![0.5, 0.0, -1.25],
            intercept: 0.1,
            c: 10.0,
            kind: ModelKind::BinaryClassifier,
        };
        let rec = m.to_record(&ids);
        assert_eq!(rec.weights.len(), 2);
        let json = serde_json::to_string(&rec).unwrap();
        let back: ModelRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(LinearModel::from_record(&back, &ids).unwrap(), m);
        let other: Vec<String> = ["a", "b", "d"].iter().map(|s| s.to_string()).collect();
        assert!(LinearModel::from_record(&back, &other).is_err());
    }
}
