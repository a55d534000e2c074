//! Effect of cloaking one sensitive attribute on predictions of other,
//! continuous traits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloak::{apply_cloak, cloak_fg, cloak_mf, CloakDirective, Strategy};
use crate::error::{CloakError, Result};
use crate::metafeatures::MetafeatureModel;
use crate::models::{pearson, predict_value, quantile_threshold, train_ridge};
use crate::rng::derive_seed;
use crate::simulate::{scores, train_task_model, ExperimentConfig, PreparedData};

/// Below this many evaluation users correlations are flagged as unreliable.
pub const SMALL_POPULATION: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpilloverMode {
    /// Only users who received a cloak directive.
    Cloaked,
    /// Every test user with the trait; uncloaked users keep their rows.
    AllTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitRow {
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub none: f64,
    pub fg: f64,
    pub mf: f64,
    pub n: usize,
    pub alpha: f64,
}

impl TraitRow {
    pub fn drop(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::Mf | Strategy::DomainMf => self.none - self.mf,
            _ => self.none - self.fg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverReport {
    pub sensitive_task: String,
    pub mode: SpilloverMode,
    pub threshold: f64,
    pub cloaked_users: usize,
    pub excluded_not_found: usize,
    pub small_population: bool,
    pub traits: Vec<TraitRow>,
}

impl SpilloverReport {
    /// Mean over traits of |r_none − r_strategy|.
    pub fn mean_abs_drop(&self, strategy: Strategy) -> f64 {
        if self.traits.is_empty() {
            return 0.0;
        }
        self.traits.iter().map(|t| t.drop(strategy).abs()).sum::<f64>() / self.traits.len() as f64
    }
}

struct Directives {
    fg: CloakDirective,
    mf: CloakDirective,
}

/// Cloaks the positive test users of `sensitive_task` with FG and MF and
/// reports, per trait, how well a ridge model still predicts it.
///
/// The sensitive model, the trait models and the metafeatures all see the
/// complete (undropped) training rows.
pub fn run_spillover_experiment(
    sensitive_task: &str,
    traits: &[String],
    data: &PreparedData,
    metafeatures: &MetafeatureModel,
    config: &ExperimentConfig,
    mode: SpilloverMode,
) -> Result<SpilloverReport> {
    let m = &data.full;
    let sensitive = data.labels.binary(sensitive_task)?;
    let train: Vec<usize> = data.split.train.iter().copied().filter(|&u| sensitive[u].is_some()).collect();
    let y: Vec<bool> = train.iter().map(|&u| sensitive[u] == Some(true)).collect();
    let (model, _) = train_task_model(m, &train, &y, config, &format!("spill:{sensitive_task}"))?;
    let threshold = quantile_threshold(&scores(&model, m, &train), config.quantile)?;

    let test = &data.split.test;
    let test_scores = scores(&model, m, test);
    let positives: Vec<usize> = test
        .iter()
        .zip(&test_scores)
        .filter(|(_, &s)| threshold.is_positive(s))
        .map(|(&u, _)| u)
        .collect();
    let made: Vec<Result<Option<Directives>>> = positives
        .par_iter()
        .map(|&u| {
            let row = m.row(u);
            let built = cloak_fg(&model, u, row, threshold.threshold, &config.explainer)
                .and_then(|fg| Ok((fg, cloak_mf(&model, u, row, threshold.threshold, metafeatures, &config.explainer)?)));
            match built {
                Ok((fg, mf)) => Ok(Some(Directives { fg, mf })),
                Err(CloakError::NotFound { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut directives: Vec<Option<Directives>> = (0..m.n_users()).map(|_| None).collect();
    let mut cloaked_users = 0;
    let mut excluded = 0;
    for (&u, d) in positives.iter().zip(made) {
        match d? {
            Some(d) => {
                directives[u] = Some(d);
                cloaked_users += 1;
            }
            None => excluded += 1,
        }
    }

    let rows = traits
        .par_iter()
        .map(|name| {
            let values = data.labels.continuous(name)?;
            let tr: Vec<usize> = data.split.train.iter().copied().filter(|&u| values[u].is_some()).collect();
            let ty: Vec<f64> = tr.iter().map(|&u| values[u].unwrap()).collect();
            let fit = train_ridge(
                &m.row_slices(&tr),
                &ty,
                m.n_items(),
                &config.alpha_grid,
                config.folds,
                derive_seed(config.seed, &format!("ridge:{name}")),
            )?;
            let eval: Vec<usize> = test
                .iter()
                .copied()
                .filter(|&u| values[u].is_some())
                .filter(|&u| mode == SpilloverMode::AllTest || directives[u].is_some())
                .collect();
            if eval.len() < 3 {
                return Err(CloakError::EmptyPopulation(format!(
                    "only {} evaluation users for trait `{name}` under `{sensitive_task}`; need at least 3",
                    eval.len()
                )));
            }
            let truth: Vec<f64> = eval.iter().map(|&u| values[u].unwrap()).collect();
            let mut none = Vec::with_capacity(eval.len());
            let mut fg = Vec::with_capacity(eval.len());
            let mut mf = Vec::with_capacity(eval.len());
            for &u in &eval {
                let row = m.row(u);
                let base = predict_value(&fit.model, row);
                none.push(base);
                match &directives[u] {
                    Some(d) => {
                        fg.push(predict_value(&fit.model, &apply_cloak(row, &d.fg, None)?));
                        mf.push(predict_value(&fit.model, &apply_cloak(row, &d.mf, Some(metafeatures))?));
                    }
                    None => {
                        fg.push(base);
                        mf.push(base);
                    }
                }
            }
            Ok(TraitRow {
                trait_name: name.clone(),
                none: pearson(&none, &truth)?,
                fg: pearson(&fg, &truth)?,
                mf: pearson(&mf, &truth)?,
                n: eval.len(),
                alpha: fit.alpha,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let small_population = rows.iter().any(|r| r.n < SMALL_POPULATION);
    if small_population {
        log::warn!("{sensitive_task}: fewer than {SMALL_POPULATION} evaluation users; correlations are unreliable");
    }
    Ok(SpilloverReport {
        sensitive_task: sensitive_task.to_string(),
        mode,
        threshold: threshold.threshold,
        cloaked_users,
        excluded_not_found: excluded,
        small_population,
        traits: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::Dataset;
    use crate::synth::{generate, SynthConfig, DEFAULT_TRAITS};

    fn setup() -> (PreparedData, MetafeatureModel, ExperimentConfig) {
        let s = generate(&SynthConfig {
            n_users: 700,
            n_items: 800,
            mean_likes: 60.0,
            ..SynthConfig::with_topics(6, 4)
        })
        .unwrap();
        let data = Dataset { footprints: s.footprints, labels: s.labels, domain: None };
        let cfg = ExperimentConfig {
            seed: 4,
            k: 6,
            quantile: 0.8,
            tolerance_quantile: 0.7,
            ..ExperimentConfig::default()
        };
        let prepared = PreparedData::new(&data, &cfg, false).unwrap();
        let mf = prepared.full_training_metafeatures(&cfg).unwrap();
        (prepared, mf, cfg)
    }

    #[test]
    fn cloaking_does_not_help_other_predictions() {
        let (prepared, mf, cfg) = setup();
        let traits: Vec<String> = DEFAULT_TRAITS.iter().map(|s| s.to_string()).collect();
        let r = run_spillover_experiment("male", &traits, &prepared, &mf, &cfg, SpilloverMode::Cloaked).unwrap();
        assert_eq!(r.traits.len(), traits.len());
        assert!(r.cloaked_users >= 3);
        for t in &r.traits {
            assert!((-1.0..=1.0).contains(&t.none));
            assert_eq!(t.n, r.traits[0].n);
        }
        let all = run_spillover_experiment("male", &traits, &prepared, &mf, &cfg, SpilloverMode::AllTest).unwrap();
        assert!(all.traits[0].n > r.traits[0].n);
        let again = run_spillover_experiment("male", &traits, &prepared, &mf, &cfg, SpilloverMode::Cloaked).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn unknown_trait_is_an_error() {
        let (prepared, mf, cfg) = setup();
        let r = run_spillover_experiment("male", &["nope".into()], &prepared, &mf, &cfg, SpilloverMode::Cloaked);
        assert!(matches!(r, Err(CloakError::UnknownTask(_))));
    }
}
