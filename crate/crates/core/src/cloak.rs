//! Cloak directives: which footprints a user hides, now and in the future.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::FootprintMatrix;
use crate::error::{CloakError, Result};
use crate::explain::{Explainer, Explanation};
use crate::metafeatures::{MetafeatureModel, MetafeatureSource};
use crate::models::{predict_score, quantile_threshold, LinearModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Hide exactly the explanation's likes.
    #[serde(rename = "FG")]
    Fg,
    /// Hide the explanation's likes and every like in their NMF metafeatures.
    #[serde(rename = "MF")]
    Mf,
    /// As `Mf`, with domain categories as metafeatures.
    #[serde(rename = "DOMAIN_MF")]
    DomainMf,
    /// As `Fg`, explained against a lower (tolerance) threshold.
    #[serde(rename = "FG_TOL")]
    FgTol,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Fg, Strategy::Mf, Strategy::DomainMf, Strategy::FgTol];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fg => "FG",
            Strategy::Mf => "MF",
            Strategy::DomainMf => "DOMAIN_MF",
            Strategy::FgTol => "FG_TOL",
        }
    }

    /// CLI spelling.
    pub fn flag(self) -> &'static str {
        match self {
            Strategy::Fg => "fg",
            Strategy::Mf => "mf",
            Strategy::DomainMf => "domain",
            Strategy::FgTol => "fg-tol",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.flag().eq_ignore_ascii_case(s) || st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CloakError::InvalidArgument(format!("unknown strategy `{s}`")))
    }

    pub fn uses_metafeatures(self) -> bool {
        matches!(self, Strategy::Mf | Strategy::DomainMf)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloakDirective {
    pub user: usize,
    pub strategy: Strategy,
    /// Ascending item indices hidden at creation time.
    pub cloaked_features: Vec<usize>,
    /// Metafeatures whose current and future items stay hidden.
    pub cloaked_metafeatures: Vec<usize>,
    pub created_at_fraction: f64,
    pub explanation: Explanation,
}

impl CloakDirective {
    /// An empty directive: hides nothing.
    pub fn empty(user: usize, strategy: Strategy) -> Self {
        CloakDirective {
            user,
            strategy,
            cloaked_features: Vec::new(),
            cloaked_metafeatures: Vec::new(),
            created_at_fraction: 0.0,
            explanation: Explanation {
                features: Vec::new(),
                score_before: f64::NAN,
                score_after: f64::NAN,
                target_threshold: f64::NAN,
                expansions: 0,
                elapsed: Default::default(),
            },
        }
    }

    pub fn to_record(&self, m: &FootprintMatrix) -> DirectiveRecord {
        DirectiveRecord {
            user_id: m.user_ids()[self.user].clone(),
            strategy: self.strategy,
            explanation: m.external_items(&self.explanation.features),
            cloaked_items: m.external_items(&self.cloaked_features),
            cloaked_metafeatures: self.cloaked_metafeatures.clone(),
            created_at_fraction: self.created_at_fraction,
            score_before: self.explanation.score_before,
            score_after: self.explanation.score_after,
            target_threshold: self.explanation.target_threshold,
        }
    }
}

/// What a platform would persist for one directive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectiveRecord {
    pub user_id: String,
    pub strategy: Strategy,
    pub explanation: Vec<String>,
    pub cloaked_items: Vec<String>,
    pub cloaked_metafeatures: Vec<usize>,
    pub created_at_fraction: f64,
    pub score_before: f64,
    pub score_after: f64,
    pub target_threshold: f64,
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Fine-grained cloak: hide the explanation's likes.
pub fn cloak_fg(
    model: &LinearModel,
    user: usize,
    row: &[usize],
    threshold: f64,
    explainer: &Explainer,
) -> Result<CloakDirective> {
    let explanation = explainer.explain(model, row, threshold)?;
    Ok(CloakDirective {
        user,
        strategy: Strategy::Fg,
        cloaked_features: sorted(&explanation.features),
        cloaked_metafeatures: Vec::new(),
        created_at_fraction: 0.0,
        explanation,
    })
}

/// Metafeature cloak: hide the explanation's likes and every active like
/// sharing a metafeature with one of them. The explanation is not recomputed
/// after the sweep.
pub fn cloak_mf(
    model: &LinearModel,
    user: usize,
    row: &[usize],
    threshold: f64,
    mf: &MetafeatureModel,
    explainer: &Explainer,
) -> Result<CloakDirective> {
    let explanation = explainer.explain(model, row, threshold)?;
    let groups: BTreeSet<usize> = explanation
        .features
        .iter()
        .filter_map(|&f| mf.group_of(f))
        .collect();
    let mut cloaked: BTreeSet<usize> = explanation.features.iter().copied().collect();
    cloaked.extend(
        row.iter()
            .copied()
            .filter(|&j| mf.group_of(j).is_some_and(|g| groups.contains(&g))),
    );
    Ok(CloakDirective {
        user,
        strategy: match mf.source {
            MetafeatureSource::Nmf => Strategy::Mf,
            MetafeatureSource::Domain => Strategy::DomainMf,
        },
        cloaked_features: cloaked.into_iter().collect(),
        cloaked_metafeatures: groups.into_iter().collect(),
        created_at_fraction: 0.0,
        explanation,
    })
}

/// Fine-grained cloak explained against the `quantile_tol` quantile of
/// `population_scores` instead of the prediction threshold.
pub fn cloak_tolerance(
    model: &LinearModel,
    user: usize,
    row: &[usize],
    threshold_predict: f64,
    quantile_tol: f64,
    population_scores: &[f64],
    explainer: &Explainer,
) -> Result<CloakDirective> {
    let score = predict_score(model, row);
    if score < threshold_predict {
        return Err(CloakError::NotPositive {
            score,
            threshold: threshold_predict,
        });
    }
    let tolerance = quantile_threshold(population_scores, quantile_tol)?
        .threshold
        .min(threshold_predict);
    let mut d = cloak_fg(model, user, row, tolerance, explainer)?;
    d.strategy = Strategy::FgTol;
    Ok(d)
}

/// Removes the directive's features and, through its metafeatures, any
/// active item in a cloaked metafeature (this is what hides future likes).
pub fn apply_cloak(
    row: &[usize],
    d: &CloakDirective,
    mf: Option<&MetafeatureModel>,
) -> Result<Vec<usize>> {
    apply_cloaks(row, std::slice::from_ref(d), mf)
}

/// Union of several directives (e.g. for different tasks) applied together.
pub fn apply_cloaks(
    row: &[usize],
    directives: &[CloakDirective],
    mf: Option<&MetafeatureModel>,
) -> Result<Vec<usize>> {
    let needs_mf = directives.iter().any(|d| !d.cloaked_metafeatures.is_empty());
    if needs_mf && mf.is_none() {
        return Err(CloakError::MissingMetafeatures);
    }
    Ok(row
        .iter()
        .copied()
        .filter(|&j| {
            !directives.iter().any(|d| {
                d.cloaked_features.binary_search(&j).is_ok()
                    || (!d.cloaked_metafeatures.is_empty()
                        && mf
                            .and_then(|m| m.group_of(j))
                            .is_some_and(|g| d.cloaked_metafeatures.binary_search(&g).is_ok()))
            })
        })
        .collect())
}

/// Share of `full_row` removed by the directive.
pub fn cloak_cost(full_row: &[usize], d: &CloakDirective, mf: Option<&MetafeatureModel>) -> Result<f64> {
    if full_row.is_empty() {
        return Ok(0.0);
    }
    let kept = apply_cloak(full_row, d, mf)?.len();
    Ok((full_row.len() - kept) as f64 / full_row.len() as f64)
}

/// Score of `row` after applying the directive.
pub fn cloaked_score(
    model: &LinearModel,
    row: &[usize],
    d: &CloakDirective,
    mf: Option<&MetafeatureModel>,
) -> Result<f64> {
    Ok(predict_score(model, &apply_cloak(row, d, mf)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sigmoid, ModelKind};

    fn model(weights: &[f64], intercept: f64) -> LinearModel {
        LinearModel {
            weights: weights.to_vec(),
            intercept,
            c: 1.0,
            kind: ModelKind::BinaryClassifier,
        }
    }

    /// Items 0..8 with assignment given per item.
    fn mf_model(assignment: &[usize]) -> MetafeatureModel {
        MetafeatureModel {
            k: assignment.iter().max().map_or(1, |m| m + 1),
            loadings: None,
            assignment: assignment.to_vec(),
            exempt: vec![false; assignment.len()],
            source: MetafeatureSource::Nmf,
            labels: None,
        }
    }

    #[test]
    fn fg_singleton_and_rescore() {
        let m = model(&[3.0, 0.1], -1.0);
        let d = cloak_fg(&m, 0, &[0, 1], 0.5, &Explainer::Linear).unwrap();
        assert_eq!(d.cloaked_features, vec![0]);
        assert!(cloaked_score(&m, &[0, 1], &d, None).unwrap() < 0.5);
    }

    #[test]
    fn mf_sweeps_same_metafeature() {
        // f1→A, f5→A, f2→B; explanation {f1} sweeps f5 too.
        let mut w = vec![0.0; 8];
        w[1] = 5.0;
        w[2] = 0.1;
        w[5] = 0.1;
        let m = model(&w, -1.0);
        let mf = mf_model(&[0, 0, 1, 1, 1, 0, 1, 0]);
        let d = cloak_mf(&m, 0, &[1, 2, 5], 0.6, &mf, &Explainer::Linear).unwrap();
        assert_eq!(d.explanation.features, vec![1]);
        assert_eq!(d.cloaked_features, vec![1, 5]);
        assert_eq!(d.cloaked_metafeatures, vec![0]);
    }

    #[test]
    fn mf_minimal_sweep_matches_fg() {
        let m = model(&[2.0, 2.0, 0.1], -1.0);
        let mf = mf_model(&[0, 0, 1]);
        let row = [0, 1, 2];
        let fg = cloak_fg(&m, 0, &row, 0.5, &Explainer::Linear).unwrap();
        let mfd = cloak_mf(&m, 0, &row, 0.5, &mf, &Explainer::Linear).unwrap();
        assert_eq!(fg.cloaked_features, vec![0, 1]);
        assert_eq!(mfd.cloaked_features, fg.cloaked_features);
        assert_eq!(mfd.cloaked_metafeatures, vec![0]);
    }

    #[test]
    fn mf_persists_to_future_likes() {
        let m = model(&[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], -1.0);
        let mf = mf_model(&[0, 1, 1, 1, 1, 1, 1, 0]);
        let d = cloak_mf(&m, 0, &[0, 1], 0.5, &mf, &Explainer::Linear).unwrap();
        let future = [0, 1, 7];
        assert_eq!(apply_cloak(&future, &d, Some(&mf)).unwrap(), vec![1]);
        let fg = cloak_fg(&m, 0, &[0, 1], 0.5, &Explainer::Linear).unwrap();
        assert_eq!(apply_cloak(&future, &fg, None).unwrap(), vec![1, 7]);
        assert!(matches!(apply_cloak(&future, &d, None), Err(CloakError::MissingMetafeatures)));
    }

    #[test]
    fn exempt_items_are_never_swept() {
        let m = model(&[3.0, 0.5, 0.5], -1.0);
        let mut mf = mf_model(&[0, 0, 0]);
        mf.exempt[2] = true;
        let d = cloak_mf(&m, 0, &[0, 1, 2], 0.7, &mf, &Explainer::Linear).unwrap();
        assert_eq!(d.cloaked_features, vec![0, 1]);
    }

    #[test]
    fn empty_directive_is_identity() {
        let d = CloakDirective::empty(0, Strategy::Fg);
        assert_eq!(apply_cloak(&[1, 4, 9], &d, None).unwrap(), vec![1, 4, 9]);
        assert_eq!(cloak_cost(&[1, 4, 9], &d, None).unwrap(), 0.0);
        assert_eq!(cloak_cost(&[], &d, None).unwrap(), 0.0);
    }

    #[test]
    fn cost_of_explanation() {
        let mut w = vec![0.0; 175];
        w[0] = 4.0;
        w[1] = 4.0;
        let m = model(&w, -6.0);
        let row: Vec<usize> = (0..175).collect();
        let d = cloak_fg(&m, 0, &row, 0.1, &Explainer::Linear).unwrap();
        assert_eq!(d.cloaked_features.len(), 2);
        assert!((cloak_cost(&row, &d, None).unwrap() - 2.0 / 175.0).abs() < 1e-15);
        let mut all = d.clone();
        all.cloaked_features = row.clone();
        assert_eq!(cloak_cost(&row, &all, None).unwrap(), 1.0);
    }

    #[test]
    fn metafeature_cost_counts_swept_likes() {
        // Two explanation likes in groups of 13 each: 26 of 175 hidden, 149 left.
        let mut w = vec![0.0; 175];
        w[0] = 4.0;
        w[13] = 4.0;
        let m = model(&w, -6.0);
        let assignment: Vec<usize> = (0..175).map(|j| if j < 13 { 0 } else if j < 26 { 1 } else { 2 }).collect();
        let mf = mf_model(&assignment);
        let row: Vec<usize> = (0..175).collect();
        let d = cloak_mf(&m, 0, &row, 0.1, &mf, &Explainer::Linear).unwrap();
        assert_eq!(d.cloaked_metafeatures, vec![0, 1]);
        assert_eq!(apply_cloak(&row, &d, Some(&mf)).unwrap().len(), 149);
        assert!((cloak_cost(&row, &d, Some(&mf)).unwrap() - 26.0 / 175.0).abs() < 1e-15);
    }

    #[test]
    fn tolerance_directive() {
        let m = model(&[1.0; 6], -2.0);
        let row = [0, 1, 2, 3, 4, 5];
        let pop: Vec<f64> = (0..=6).map(|i| sigmoid(i as f64 - 2.0)).collect();
        let t_pred = sigmoid(2.5);
        let fg = cloak_fg(&m, 0, &row, t_pred, &Explainer::Linear).unwrap();
        // Same quantile as prediction: the tolerance threshold is the prediction threshold.
        let same = cloak_tolerance(&m, 0, &row, sigmoid(3.0), 0.8, &pop, &Explainer::Linear).unwrap();
        let plain = cloak_fg(&m, 0, &row, sigmoid(3.0), &Explainer::Linear).unwrap();
        assert_eq!(same.cloaked_features, plain.cloaked_features);
        let tol = cloak_tolerance(&m, 0, &row, t_pred, 0.5, &pop, &Explainer::Linear).unwrap();
        assert!(tol.explanation.len() >= fg.explanation.len());
        assert!(tol.explanation.score_after < tol.explanation.target_threshold);
        assert!(tol.explanation.target_threshold <= t_pred);
        assert_eq!(tol.strategy, Strategy::FgTol);
        assert!(tol.cloaked_metafeatures.is_empty());
    }

    #[test]
    fn directives_compose_by_union() {
        let mut a = CloakDirective::empty(0, Strategy::Fg);
        a.cloaked_features = vec![1];
        let mut b = CloakDirective::empty(0, Strategy::Fg);
        b.cloaked_features = vec![3];
        assert_eq!(apply_cloaks(&[1, 2, 3], &[a, b], None).unwrap(), vec![2]);
    }

    #[test]
    fn strategy_parsing() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::parse(s.flag()).unwrap(), s);
            assert_eq!(Strategy::parse(s.name()).unwrap(), s);
        }
        assert!(Strategy::parse("xx").is_err());
    }
}
