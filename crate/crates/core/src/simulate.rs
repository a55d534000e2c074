//! Longer-term protection experiment.
//!
//! Half of every user's likes are dropped; a targeting model is trained once
//! on the reduced training users, positives are cloaked against the reduced
//! data, and the dropped likes are re-added in steps. At each step the
//! threshold is recomputed from the (uncloaked) training population and we
//! record which cloaked users are still below it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloak::{apply_cloak, cloak_cost, cloak_fg, cloak_mf, cloak_tolerance, CloakDirective, Strategy};
use crate::data::{filter_min_activity, make_drop_plan, readd, split_train_test, DropPlan, FootprintMatrix, LabelTable, Split};
use crate::error::{CloakError, Result};
use crate::explain::Explainer;
use crate::metafeatures::{nmf_fit, DomainMapping, MetafeatureModel, NmfOptions};
use crate::models::{
    grid_search_cv, predict_score, quantile_threshold, train_logreg_l2, CvResult, LinearModel,
    LogregOptions, ThresholdSpec, DEFAULT_ALPHA_GRID, DEFAULT_C_GRID,
};
use crate::rng::derive_seed;

/// Everything an experiment needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub drop_fraction: f64,
    pub train_frac: f64,
    pub min_user: usize,
    pub min_item: usize,
    pub quantile: f64,
    pub tolerance_quantile: f64,
    pub schedule: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub folds: usize,
    /// Number of NMF metafeatures.
    pub k: usize,
    pub nmf_max_iters: usize,
    pub nmf_tol: f64,
    pub explainer: Explainer,
}

pub fn decile_schedule() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            drop_fraction: 0.5,
            train_frac: 0.66,
            min_user: 10,
            min_item: 10,
            quantile: 0.95,
            tolerance_quantile: 0.90,
            schedule: decile_schedule(),
            c_grid: DEFAULT_C_GRID.to_vec(),
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            folds: 3,
            k: 50,
            nmf_max_iters: 500,
            nmf_tol: 1e-4,
            explainer: Explainer::Linear,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CloakError::InvalidArgument(m));
        let in_open = |x: f64| x > 0.0 && x < 1.0;
        if !in_open(self.quantile) || !in_open(self.tolerance_quantile) {
            return bad("quantiles must lie in (0,1)".into());
        }
        if self.tolerance_quantile > self.quantile {
            return bad("tolerance quantile must not exceed the prediction quantile".into());
        }
        if !(0.0..=1.0).contains(&self.drop_fraction) || !in_open(self.train_frac) {
            return bad("drop fraction must be in [0,1] and train fraction in (0,1)".into());
        }
        if self.schedule.is_empty()
            || self.schedule.iter().any(|f| !(0.0..=1.0).contains(f))
            || self.schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("schedule must be strictly increasing within [0,1]".into());
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| *c <= 0.0) {
            return bad("C grid must be non-empty and positive".into());
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|c| *c <= 0.0) {
            return bad("alpha grid must be non-empty and positive".into());
        }
        if self.folds < 2 || self.k == 0 {
            return bad("folds must be ≥ 2 and k ≥ 1".into());
        }
        Ok(())
    }

    fn nmf_options(&self, label: &str) -> NmfOptions {
        NmfOptions {
            max_iters: self.nmf_max_iters,
            tol: self.nmf_tol,
            seed: derive_seed(self.seed, label),
        }
    }
}

/// Raw input: footprints, labels, and an optional domain category mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub footprints: FootprintMatrix,
    pub labels: LabelTable,
    pub domain: Option<DomainMapping>,
}

/// Filtered data, split, drop plan, the re-add stages, and metafeatures.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub full: FootprintMatrix,
    pub labels: LabelTable,
    pub split: Split,
    pub plan: DropPlan,
    pub reduced: FootprintMatrix,
    /// `stages[i]` is the reduced matrix with `schedule[i]` of the dropped likes back.
    pub stages: Vec<FootprintMatrix>,
    pub schedule: Vec<f64>,
    /// NMF metafeatures fitted on the reduced training users.
    pub nmf: Option<MetafeatureModel>,
    pub domain: Option<MetafeatureModel>,
}

impl PreparedData {
    pub fn new(data: &Dataset, config: &ExperimentConfig, with_nmf: bool) -> Result<Self> {
        config.validate()?;
        let (full, labels) =
            filter_min_activity(&data.footprints, &data.labels, config.min_user, config.min_item);
        let split = split_train_test(&full, config.train_frac, derive_seed(config.seed, "split"))?;
        let plan = make_drop_plan(&full, config.drop_fraction, derive_seed(config.seed, "drop"))?;
        let reduced = plan.reduced(&full);
        let stages = config
            .schedule
            .par_iter()
            .map(|&f| readd(&reduced, &plan, f))
            .collect::<Result<Vec<_>>>()?;
        let nmf = if with_nmf {
            let train = reduced.select_users(&split.train);
            let fit = nmf_fit(&train, config.k, &config.nmf_options("nmf:reduced"))?;
            Some(MetafeatureModel::from_nmf(&fit))
        } else {
            None
        };
        let domain = data.domain.as_ref().map(|d| d.to_model(full.item_ids()));
        Ok(PreparedData {
            full,
            labels,
            split,
            plan,
            reduced,
            stages,
            schedule: config.schedule.clone(),
            nmf,
            domain,
        })
    }

    /// NMF metafeatures fitted on the complete training rows.
    pub fn full_training_metafeatures(&self, config: &ExperimentConfig) -> Result<MetafeatureModel> {
        let train = self.full.select_users(&self.split.train);
        let fit = nmf_fit(&train, config.k, &config.nmf_options("nmf:full"))?;
        Ok(MetafeatureModel::from_nmf(&fit))
    }

    pub fn metafeatures_for(&self, strategy: Strategy) -> Result<Option<&MetafeatureModel>> {
        match strategy {
            Strategy::Mf => self.nmf.as_ref().map(Some).ok_or_else(|| {
                CloakError::InvalidArgument("MF strategy needs NMF metafeatures".into())
            }),
            Strategy::DomainMf => self.domain.as_ref().map(Some).ok_or_else(|| {
                CloakError::InvalidArgument("domain strategy needs a domain mapping".into())
            }),
            Strategy::Fg | Strategy::FgTol => Ok(None),
        }
    }
}

/// Trains a task's targeting model with CV-selected C.
pub fn train_task_model(
    m: &FootprintMatrix,
    users: &[usize],
    y: &[bool],
    config: &ExperimentConfig,
    label: &str,
) -> Result<(LinearModel, CvResult)> {
    let x = m.row_slices(users);
    let cv = grid_search_cv(&x, y, m.n_items(), &config.c_grid, config.folds, derive_seed(config.seed, label))?;
    let model = train_logreg_l2(&x, y, m.n_items(), cv.best_c, &LogregOptions::default())?;
    Ok((model, cv))
}

pub fn scores(model: &LinearModel, m: &FootprintMatrix, users: &[usize]) -> Vec<f64> {
    users
        .par_iter()
        .map(|&u| predict_score(model, m.row(u)))
        .collect()
}

/// A task's trained model, thresholds over time, and cloaking population.
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub task: String,
    pub model: LinearModel,
    pub cv: CvResult,
    pub train_users: Vec<usize>,
    pub test_users: Vec<usize>,
    /// Prediction threshold on the reduced training scores.
    pub threshold_initial: ThresholdSpec,
    /// Tolerance threshold on the same scores.
    pub threshold_tolerance: ThresholdSpec,
    /// Threshold on the complete training rows.
    pub threshold_full: ThresholdSpec,
    /// One threshold per schedule fraction.
    pub thresholds: Vec<ThresholdSpec>,
    pub reduced_training_scores: Vec<f64>,
    /// Test users positive on reduced data and on full data.
    pub candidates: Vec<usize>,
    pub positives_initial: usize,
    pub positives_full: usize,
}

impl TaskSetup {
    pub fn new(data: &PreparedData, task: &str, config: &ExperimentConfig) -> Result<Self> {
        let labels = data.labels.binary(task)?;
        let labeled = |users: &[usize]| -> Vec<usize> {
            users.iter().copied().filter(|&u| labels[u].is_some()).collect()
        };
        let train_users = labeled(&data.split.train);
        let test_users = labeled(&data.split.test);
        let y: Vec<bool> = train_users.iter().map(|&u| labels[u] == Some(true)).collect();
        let (model, cv) = train_task_model(&data.reduced, &train_users, &y, config, &format!("cv:{task}"))?;

        let q = config.quantile;
        let reduced_training_scores = scores(&model, &data.reduced, &train_users);
        let threshold_initial = quantile_threshold(&reduced_training_scores, q)?
            .with_source("training users, reduced footprints");
        let threshold_tolerance = quantile_threshold(&reduced_training_scores, config.tolerance_quantile)?
            .with_source("training users, reduced footprints (tolerance)");
        let threshold_full = quantile_threshold(&scores(&model, &data.full, &train_users), q)?
            .with_source("training users, complete footprints");
        let thresholds = data
            .schedule
            .iter()
            .zip(&data.stages)
            .map(|(f, stage)| {
                Ok(quantile_threshold(&scores(&model, stage, &train_users), q)?
                    .with_source(format!("training users, uncloaked, re-add fraction {f}")))
            })
            .collect::<Result<Vec<_>>>()?;
        log::debug!(
            "{task}: thresholds over schedule {:?}",
            thresholds.iter().map(|t| t.threshold).collect::<Vec<_>>()
        );

        let reduced_test = scores(&model, &data.reduced, &test_users);
        let full_test = scores(&model, &data.full, &test_users);
        let mut positives_initial = 0;
        let mut positives_full = 0;
        let mut candidates = Vec::new();
        for (i, &u) in test_users.iter().enumerate() {
            let p0 = threshold_initial.is_positive(reduced_test[i]);
            let p1 = threshold_full.is_positive(full_test[i]);
            positives_initial += usize::from(p0);
            positives_full += usize::from(p1);
            if p0 && p1 {
                candidates.push(u);
            }
        }
        Ok(TaskSetup {
            task: task.to_string(),
            model,
            cv,
            train_users,
            test_users,
            threshold_initial,
            threshold_tolerance,
            threshold_full,
            thresholds,
            reduced_training_scores,
            candidates,
            positives_initial,
            positives_full,
        })
    }

    /// Directive for one candidate user, built on their reduced row.
    pub fn directive(
        &self,
        data: &PreparedData,
        user: usize,
        strategy: Strategy,
        config: &ExperimentConfig,
    ) -> Result<CloakDirective> {
        let row = data.reduced.row(user);
        let t = self.threshold_initial.threshold;
        let ex = &config.explainer;
        match strategy {
            Strategy::Fg => cloak_fg(&self.model, user, row, t, ex),
            Strategy::FgTol => cloak_tolerance(
                &self.model,
                user,
                row,
                t,
                config.tolerance_quantile,
                &self.reduced_training_scores,
                ex,
            ),
            Strategy::Mf | Strategy::DomainMf => {
                let mf = data.metafeatures_for(strategy)?.expect("metafeature strategies carry a model");
                cloak_mf(&self.model, user, row, t, mf, ex)
            }
        }
    }

    /// Directives for every candidate; users without an explanation are
    /// returned separately.
    pub fn directives(
        &self,
        data: &PreparedData,
        strategy: Strategy,
        config: &ExperimentConfig,
    ) -> Result<(Vec<CloakDirective>, Vec<usize>)> {
        let results: Vec<Result<Option<CloakDirective>>> = self
            .candidates
            .par_iter()
            .map(|&u| match self.directive(data, u, strategy, config) {
                Ok(d) => Ok(Some(d)),
                Err(CloakError::NotFound { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect();
        let mut directives = Vec::new();
        let mut not_found = Vec::new();
        for (&u, r) in self.candidates.iter().zip(results) {
            match r? {
                Some(d) => directives.push(d),
                None => not_found.push(u),
            }
        }
        Ok((directives, not_found))
    }

    /// Protection curve for one strategy.
    pub fn curve(&self, data: &PreparedData, strategy: Strategy, config: &ExperimentConfig) -> Result<ProtectionCurve> {
        let mf = data.metafeatures_for(strategy)?;
        let (directives, not_found) = self.directives(data, strategy, config)?;
        if directives.is_empty() {
            return Err(CloakError::EmptyPopulation(format!(
                "task `{}` has no cloakable positive test users ({} candidates, {} without explanation); \
                 use more data or a lower quantile",
                self.task,
                self.candidates.len(),
                not_found.len()
            )));
        }
        let labels = data.labels.binary(&self.task)?;

        // protected[i][f]: user i below threshold at fraction f.
        let protected: Vec<Vec<bool>> = directives
            .par_iter()
            .map(|d| {
                data.stages
                    .iter()
                    .zip(&self.thresholds)
                    .map(|(stage, t)| {
                        let row = apply_cloak(stage.row(d.user), d, mf)?;
                        Ok(!t.is_positive(predict_score(&self.model, &row)))
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<_>>()?;
        let outcomes: Vec<UserOutcome> = directives
            .par_iter()
            .map(|d| {
                let full_row = data.full.row(d.user);
                let cloaked = apply_cloak(full_row, d, mf)?;
                Ok(UserOutcome {
                    user_id: data.full.user_ids()[d.user].clone(),
                    label: labels[d.user],
                    explanation_size: d.explanation.len(),
                    protected_full: !self.threshold_full.is_positive(predict_score(&self.model, &cloaked)),
                    cost_full: cloak_cost(full_row, d, mf)?,
                })
            })
            .collect::<Result<_>>()?;

        let share = |members: &[usize], f: usize| -> Option<f64> {
            (!members.is_empty()).then(|| {
                members.iter().filter(|&&i| protected[i][f]).count() as f64 / members.len() as f64
            })
        };
        let everyone: Vec<usize> = (0..directives.len()).collect();
        let tp: Vec<usize> = everyone.iter().copied().filter(|&i| outcomes[i].label == Some(true)).collect();
        let fp: Vec<usize> = everyone.iter().copied().filter(|&i| outcomes[i].label == Some(false)).collect();
        let n_f = data.schedule.len();
        let series = |members: &[usize]| -> Option<Vec<f64>> {
            (!members.is_empty()).then(|| (0..n_f).map(|f| share(members, f).unwrap_or(0.0)).collect())
        };
        let protection: Vec<f64> = (0..n_f).map(|f| share(&everyone, f).unwrap_or(0.0)).collect();
        if data.schedule.first() == Some(&0.0) {
            let shortfall = protected.iter().filter(|p| !p[0]).count();
            if shortfall > 0 {
                log::info!(
                    "{} {}: {shortfall} of {} users not protected at creation",
                    self.task,
                    strategy,
                    directives.len()
                );
            }
        }
        let n = directives.len() as f64;
        Ok(ProtectionCurve {
            task: self.task.clone(),
            strategy,
            fractions: data.schedule.clone(),
            protection,
            thresholds: self.thresholds.iter().map(|t| t.threshold).collect(),
            threshold_source: self.thresholds.first().map(|t| t.source.clone()).unwrap_or_default(),
            population_size: directives.len(),
            excluded_not_found: not_found.len(),
            candidates: self.candidates.len(),
            group_curves: GroupCurves {
                tp: series(&tp),
                fp: series(&fp),
                n_tp: tp.len(),
                n_fp: fp.len(),
            },
            protection_full: outcomes.iter().filter(|o| o.protected_full).count() as f64 / n,
            mean_cost_full: outcomes.iter().map(|o| o.cost_full).sum::<f64>() / n,
            mean_explanation_size: outcomes.iter().map(|o| o.explanation_size as f64).sum::<f64>() / n,
            model_c: self.model.c,
            outcomes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub user_id: String,
    pub label: Option<bool>,
    pub explanation_size: usize,
    /// Still below the threshold with all dropped likes re-added.
    pub protected_full: bool,
    /// Share of the complete row hidden by the directive.
    pub cost_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCurves {
    pub tp: Option<Vec<f64>>,
    pub fp: Option<Vec<f64>>,
    pub n_tp: usize,
    pub n_fp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionCurve {
    pub task: String,
    pub strategy: Strategy,
    pub fractions: Vec<f64>,
    pub protection: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub threshold_source: String,
    pub population_size: usize,
    pub excluded_not_found: usize,
    pub candidates: usize,
    pub group_curves: GroupCurves,
    pub protection_full: f64,
    pub mean_cost_full: f64,
    pub mean_explanation_size: f64,
    pub model_c: f64,
    pub outcomes: Vec<UserOutcome>,
}

impl ProtectionCurve {
    /// Protection at the schedule point equal to `fraction`.
    pub fn at(&self, fraction: f64) -> Option<f64> {
        self.fractions
            .iter()
            .position(|&f| (f - fraction).abs() < 1e-12)
            .map(|i| self.protection[i])
    }
}

/// One-shot experiment for a single task and strategy.
pub fn run_protection_experiment(
    task: &str,
    strategy: Strategy,
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<ProtectionCurve> {
    let prepared = PreparedData::new(data, config, strategy == Strategy::Mf)?;
    TaskSetup::new(&prepared, task, config)?.curve(&prepared, strategy, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpFpBreakdown {
    pub task: String,
    pub strategy: Strategy,
    pub tp: Option<f64>,
    pub fp: Option<f64>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub diagnostics: Vec<String>,
}

/// Protection with all dropped likes re-added, split by ground-truth label.
pub fn tp_fp_breakdown(curve: &ProtectionCurve) -> TpFpBreakdown {
    let group = |label: bool| {
        let members: Vec<&UserOutcome> = curve.outcomes.iter().filter(|o| o.label == Some(label)).collect();
        let share = (!members.is_empty())
            .then(|| members.iter().filter(|o| o.protected_full).count() as f64 / members.len() as f64);
        (share, members.len())
    };
    let (tp, n_tp) = group(true);
    let (fp, n_fp) = group(false);
    let mut diagnostics = Vec::new();
    if tp.is_none() {
        diagnostics.push("no true positives in the population; TP value omitted".to_string());
    }
    if fp.is_none() {
        diagnostics.push("no false positives in the population; FP value omitted".to_string());
    }
    TpFpBreakdown {
        task: curve.task.clone(),
        strategy: curve.strategy,
        tp,
        fp,
        n_tp,
        n_fp,
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub task: String,
    pub strategy: Strategy,
    pub mean_cost: f64,
    pub protection: f64,
    pub population: usize,
}

/// Mean share of likes hidden versus protection, both with all dropped
/// likes re-added, for every task × strategy.
pub fn tradeoff_report(
    tasks: &[String],
    strategies: &[Strategy],
    data: &PreparedData,
    config: &ExperimentConfig,
) -> Result<Vec<TradeoffRow>> {
    let mut rows = Vec::new();
    for task in tasks {
        let setup = TaskSetup::new(data, task, config)?;
        for &s in strategies {
            rows.push(tradeoff_row(&setup.curve(data, s, config)?));
        }
    }
    Ok(rows)
}

pub fn tradeoff_row(curve: &ProtectionCurve) -> TradeoffRow {
    TradeoffRow {
        task: curve.task.clone(),
        strategy: curve.strategy,
        mean_cost: curve.mean_cost_full,
        protection: curve.protection_full,
        population: curve.population_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn small_dataset(seed: u64) -> Dataset {
        let cfg = SynthConfig {
            n_users: 600,
            n_items: 800,
            mean_likes: 60.0,
            ..SynthConfig::with_topics(6, seed)
        };
        let s = generate(&cfg).unwrap();
        Dataset {
            footprints: s.footprints,
            labels: s.labels,
            domain: Some(s.domain),
        }
    }

    fn config(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            seed,
            k: 6,
            quantile: 0.9,
            tolerance_quantile: 0.8,
            c_grid: vec![0.1, 1.0],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn fg_is_fully_protected_at_creation() {
        let data = small_dataset(1);
        let curve = run_protection_experiment("male", Strategy::Fg, &data, &config(1)).unwrap();
        assert_eq!(curve.at(0.0), Some(1.0));
        assert!(curve.protection.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(curve.thresholds.len(), curve.fractions.len());
    }

    #[test]
    fn strategies_share_setup_and_are_deterministic() {
        let data = small_dataset(2);
        let cfg = config(2);
        let prepared = PreparedData::new(&data, &cfg, true).unwrap();
        let setup = TaskSetup::new(&prepared, "republican", &cfg).unwrap();
        let fg = setup.curve(&prepared, Strategy::Fg, &cfg).unwrap();
        let mf = setup.curve(&prepared, Strategy::Mf, &cfg).unwrap();
        let tol = setup.curve(&prepared, Strategy::FgTol, &cfg).unwrap();
        let dom = setup.curve(&prepared, Strategy::DomainMf, &cfg).unwrap();
        assert_eq!(tol.at(0.0), Some(1.0));
        assert!(mf.mean_cost_full >= fg.mean_cost_full);
        assert!(dom.mean_cost_full >= fg.mean_cost_full);
        // FG_TOL hides a superset of FG for every user, so it protects at least as well.
        for (a, b) in tol.protection.iter().zip(&fg.protection) {
            assert!(a >= b);
        }
        let again = TaskSetup::new(&prepared, "republican", &cfg)
            .unwrap()
            .curve(&prepared, Strategy::Mf, &cfg)
            .unwrap();
        assert_eq!(again, mf);
        let b = tp_fp_breakdown(&fg);
        assert_eq!(b.n_tp + b.n_fp, fg.population_size);
    }

    #[test]
    fn tp_fp_omits_empty_group() {
        let curve = ProtectionCurve {
            task: "t".into(),
            strategy: Strategy::Fg,
            fractions: vec![1.0],
            protection: vec![0.5],
            thresholds: vec![0.5],
            threshold_source: String::new(),
            population_size: 2,
            excluded_not_found: 0,
            candidates: 2,
            group_curves: GroupCurves { tp: None, fp: None, n_tp: 2, n_fp: 0 },
            protection_full: 0.5,
            mean_cost_full: 0.1,
            mean_explanation_size: 1.0,
            model_c: 1.0,
            outcomes: vec![
                UserOutcome { user_id: "a".into(), label: Some(true), explanation_size: 1, protected_full: true, cost_full: 0.1 },
                UserOutcome { user_id: "b".into(), label: Some(true), explanation_size: 1, protected_full: false, cost_full: 0.1 },
            ],
        };
        let b = tp_fp_breakdown(&curve);
        assert_eq!(b.tp, Some(0.5));
        assert_eq!(b.fp, None);
        assert_eq!(b.diagnostics.len(), 1);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.tolerance_quantile = 0.99;
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::default();
        cfg.schedule = vec![0.5, 0.2];
        assert!(cfg.validate().is_err());
    }
}
