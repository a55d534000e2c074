//! Subcommand pipelines behind the `cloak` binary.
//!
//! Every result is written twice, as JSON wrapped with the config hash and
//! seed, and as CSV whose first line is a `# config_hash=… seed=…` comment.
//! A `manifest.json` next to them replays the run.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cloak::{cloak_cost, cloak_fg, cloak_mf, cloak_tolerance, CloakDirective, DirectiveRecord, Strategy};
use crate::config::{Command, Manifest, RunConfig};
use crate::data::{load_triplets, LabelTable};
use crate::error::{CloakError, Result};
use crate::metafeatures::{DomainMapping, MetafeatureModel};
use crate::models::{auc, predict_score, quantile_threshold, CvResult, LinearModel, ThresholdSpec};
use crate::simulate::{
    scores, tp_fp_breakdown, tradeoff_row, train_task_model, Dataset, ExperimentConfig, PreparedData, ProtectionCurve,
    TaskSetup,
};
use crate::spillover::run_spillover_experiment;
use crate::synth::{generate, SynthConfig};

/// Metafeature count on loaded (non-synthetic) data when `k` is unset.
pub const DEFAULT_K: usize = 50;

/// Files produced by a run, relative to the output directory.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub out: PathBuf,
    pub files: Vec<String>,
    /// Human-readable lines for the terminal.
    pub messages: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    hash: String,
    seed: u64,
    files: Vec<String>,
}

impl Outputs {
    fn new(cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| CloakError::io(&cfg.out, e))?;
        Ok(Outputs {
            dir: cfg.out.clone(),
            hash: cfg.config_hash(),
            seed: cfg.seed,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CloakError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash, self.seed)
    }

    fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<()> {
        let wrapped = json!({
            "config_hash": self.hash,
            "seed": self.seed,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&wrapped)? + "\n";
        self.write(name, &text)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CloakError::InvalidArgument(format!("csv encoding: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| CloakError::InvalidArgument(e.to_string()))?;
        let text = self.header() + &String::from_utf8(body).expect("csv output is utf-8");
        self.write(name, &text)
    }

    /// Data file written by `write` into a temporary path, then prefixed with
    /// the header comment.
    fn data_file(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        write(&path)?;
        let body = std::fs::read_to_string(&path).map_err(|e| CloakError::io(&path, e))?;
        self.write(name, &(self.header() + &body))
    }

    fn finish(mut self, cfg: &RunConfig, messages: Vec<String>) -> Result<RunSummary> {
        let manifest = Manifest::new(cfg, self.files.clone());
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write("manifest.json", &text)?;
        Ok(RunSummary {
            out: self.dir,
            files: self.files,
            messages,
        })
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Loaded {
    data: Dataset,
    default_k: usize,
}

fn synth_config(cfg: &RunConfig) -> SynthConfig {
    SynthConfig {
        n_users: cfg.synth_users,
        n_items: cfg.synth_items,
        ..SynthConfig::with_topics(cfg.synth_topics, cfg.seed)
    }
}

/// Loads the configured files, or generates synthetic data from the seed
/// when no footprints are given.
fn load(cfg: &RunConfig) -> Result<Loaded> {
    match &cfg.footprints {
        Some(path) => {
            let footprints = load_triplets(path)?;
            let labels = match &cfg.labels {
                Some(p) => LabelTable::load(p, &footprints)?,
                None => LabelTable::default(),
            };
            let domain = cfg.domain_mapping.as_ref().map(DomainMapping::read).transpose()?;
            Ok(Loaded {
                data: Dataset { footprints, labels, domain },
                default_k: DEFAULT_K,
            })
        }
        None => {
            let sc = synth_config(cfg);
            let s = generate(&sc)?;
            let domain = match &cfg.domain_mapping {
                Some(p) => DomainMapping::read(p)?,
                None => s.domain,
            };
            Ok(Loaded {
                data: Dataset {
                    footprints: s.footprints,
                    labels: s.labels,
                    domain: Some(domain),
                },
                default_k: sc.k_topics,
            })
        }
    }
}

fn tasks(cfg: &RunConfig, labels: &LabelTable) -> Result<Vec<String>> {
    let tasks: Vec<String> = if cfg.tasks.is_empty() {
        labels.binary.keys().cloned().collect()
    } else {
        cfg.tasks.clone()
    };
    for t in &tasks {
        labels.binary(t)?;
    }
    if tasks.is_empty() {
        return Err(CloakError::InvalidArgument("no binary tasks in the labels".into()));
    }
    Ok(tasks)
}

fn traits(cfg: &RunConfig, labels: &LabelTable) -> Result<Vec<String>> {
    let traits: Vec<String> = if cfg.traits.is_empty() {
        labels.continuous.keys().cloned().collect()
    } else {
        cfg.traits.clone()
    };
    for t in &traits {
        labels.continuous(t)?;
    }
    if traits.is_empty() {
        return Err(CloakError::InvalidArgument("no continuous traits in the labels".into()));
    }
    Ok(traits)
}

/// A task model trained on complete training rows, with its threshold.
struct FullModel {
    model: LinearModel,
    cv: CvResult,
    threshold: ThresholdSpec,
    test_auc: Option<f64>,
}

fn full_model(data: &PreparedData, task: &str, ecfg: &ExperimentConfig) -> Result<FullModel> {
    let labels = data.labels.binary(task)?;
    let labeled = |users: &[usize]| -> Vec<usize> { users.iter().copied().filter(|&u| labels[u].is_some()).collect() };
    let train = labeled(&data.split.train);
    let y: Vec<bool> = train.iter().map(|&u| labels[u] == Some(true)).collect();
    let (model, cv) = train_task_model(&data.full, &train, &y, ecfg, &format!("full:{task}"))?;
    let threshold = quantile_threshold(&scores(&model, &data.full, &train), ecfg.quantile)?
        .with_source("training users, complete footprints");
    let test = labeled(&data.split.test);
    let test_y: Vec<bool> = test.iter().map(|&u| labels[u] == Some(true)).collect();
    let test_auc = auc(&scores(&model, &data.full, &test), &test_y).ok();
    Ok(FullModel { model, cv, threshold, test_auc })
}

/// Runs `cfg` inside a pool of `cfg.jobs` workers.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CloakError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.command {
        Command::Synth => run_synth(cfg),
        Command::Train => run_train(cfg),
        Command::Explain => run_explain(cfg),
        Command::Cloak => run_cloak(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Spillover => run_spillover(cfg),
        Command::Report => run_report(cfg),
    })
}

fn run_synth(cfg: &RunConfig) -> Result<RunSummary> {
    let sc = synth_config(cfg);
    let s = generate(&sc)?;
    let mut out = Outputs::new(cfg)?;
    out.data_file("footprints.csv", |p| crate::data::write_triplets(&s.footprints, p))?;
    out.data_file("labels.csv", |p| s.labels.write(&s.footprints, p))?;
    out.data_file("domain_mapping.csv", |p| s.domain.write(p))?;
    out.json("ground_truth.json", &s.ground_truth(&sc))?;
    let d = &s.diagnostics;
    out.json("synth.json", d)?;
    let mut rows = vec![
        vec!["users".into(), s.footprints.n_users().to_string()],
        vec!["items".into(), s.footprints.n_items().to_string()],
        vec!["mean_likes".into(), num(d.mean_likes)],
        vec!["sparsity".into(), num(d.sparsity)],
        vec!["resampled_users".into(), d.resampled_users.to_string()],
    ];
    rows.extend(d.positive_rates.iter().map(|(t, r)| vec![format!("positive_rate:{t}"), num(*r)]));
    out.csv("synth.csv", &["metric", "value"], &rows)?;
    let msg = format!(
        "generated {} users × {} items, mean likes {:.1}, sparsity {:.4}",
        s.footprints.n_users(),
        s.footprints.n_items(),
        d.mean_likes,
        d.sparsity
    );
    out.finish(cfg, vec![msg])
}

fn prepare(cfg: &RunConfig, with_nmf: bool) -> Result<(Loaded, ExperimentConfig, PreparedData)> {
    let loaded = load(cfg)?;
    let ecfg = cfg.experiment(loaded.default_k);
    let prepared = PreparedData::new(&loaded.data, &ecfg, with_nmf)?;
    Ok((loaded, ecfg, prepared))
}

fn run_train(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, false)?;
    let mut out = Outputs::new(cfg)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut messages = Vec::new();
    for task in tasks(cfg, &loaded.data.labels)? {
        let fm = full_model(&data, &task, &ecfg)?;
        for (c, a) in fm.cv.grid.iter().zip(&fm.cv.mean_auc) {
            rows.push(vec![
                task.clone(),
                num(*c),
                opt(*a),
                (*c == fm.cv.best_c).to_string(),
                opt(fm.test_auc),
            ]);
        }
        messages.push(format!(
            "{task}: C = {}, test AUC {}, threshold {:.4}",
            fm.cv.best_c,
            fm.test_auc.map_or("n/a".to_string(), |a| format!("{a:.4}")),
            fm.threshold.threshold
        ));
        results.push(json!({
            "task": task,
            "cv": fm.cv,
            "test_auc": fm.test_auc,
            "threshold": fm.threshold,
            "model": fm.model.to_record(data.full.item_ids()),
        }));
    }
    out.json("train.json", &results)?;
    out.csv("train.csv", &["task", "C", "mean_cv_auc", "selected", "test_auc"], &rows)?;
    out.finish(cfg, messages)
}

fn run_explain(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, false)?;
    let user_id = cfg.user.clone().expect("validated");
    let user = data.full.user_index(&user_id).ok_or_else(|| {
        CloakError::UnknownUser(format!("{user_id} (absent from the data or removed by the activity filter)"))
    })?;
    let row = data.full.row(user);
    let mut out = Outputs::new(cfg)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut messages = Vec::new();
    for task in tasks(cfg, &loaded.data.labels)? {
        let fm = full_model(&data, &task, &ecfg)?;
        let t = fm.threshold.threshold;
        let score = predict_score(&fm.model, row);
        let (status, explanation) = match ecfg.explainer.explain(&fm.model, row, t) {
            Ok(e) => ("explained", Some(e)),
            Err(CloakError::NotPositive { .. }) => ("not_targeted", None),
            Err(CloakError::NotFound { .. }) => ("no_explanation", None),
            Err(e) => return Err(e),
        };
        match &explanation {
            Some(e) => {
                let items = data.full.external_items(&e.features);
                messages.push(format!(
                    "{user_id} / {task}: score {:.4} ≥ threshold {t:.4}; hiding {} like(s) [{}] lowers it to {:.4}",
                    e.score_before,
                    items.len(),
                    items.join(", "),
                    e.score_after
                ));
                for (rank, (&f, id)) in e.features.iter().zip(&items).enumerate() {
                    rows.push(vec![task.clone(), (rank + 1).to_string(), id.clone(), num(fm.model.weight(f))]);
                }
            }
            None => messages.push(format!("{user_id} / {task}: score {score:.4}, threshold {t:.4}: {status}")),
        }
        results.push(json!({
            "user_id": user_id,
            "task": task,
            "status": status,
            "score": score,
            "threshold": fm.threshold,
            "explanation": explanation.as_ref().map(|e| json!({
                "items": data.full.external_items(&e.features),
                "score_before": e.score_before,
                "score_after": e.score_after,
                "expansions": e.expansions,
            })),
        }));
    }
    out.json("explain.json", &results)?;
    out.csv("explain.csv", &["task", "rank", "item_id", "weight"], &rows)?;
    out.finish(cfg, messages)
}

fn directive(
    strategy: Strategy,
    fm: &FullModel,
    user: usize,
    row: &[usize],
    training_scores: &[f64],
    mf: Option<&MetafeatureModel>,
    ecfg: &ExperimentConfig,
) -> Result<CloakDirective> {
    let t = fm.threshold.threshold;
    match (strategy, mf) {
        (Strategy::Fg, _) => cloak_fg(&fm.model, user, row, t, &ecfg.explainer),
        (Strategy::FgTol, _) => {
            cloak_tolerance(&fm.model, user, row, t, ecfg.tolerance_quantile, training_scores, &ecfg.explainer)
        }
        (_, Some(mf)) => cloak_mf(&fm.model, user, row, t, mf, &ecfg.explainer),
        (_, None) => Err(CloakError::MissingMetafeatures),
    }
}

fn run_cloak(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, false)?;
    let nmf = cfg
        .strategies
        .contains(&Strategy::Mf)
        .then(|| data.full_training_metafeatures(&ecfg))
        .transpose()?;
    let mut out = Outputs::new(cfg)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut messages = Vec::new();
    for task in tasks(cfg, &loaded.data.labels)? {
        let fm = full_model(&data, &task, &ecfg)?;
        let labels = data.labels.binary(&task)?;
        let train: Vec<usize> = data.split.train.iter().copied().filter(|&u| labels[u].is_some()).collect();
        let training_scores = scores(&fm.model, &data.full, &train);
        let test = &data.split.test;
        let positives: Vec<usize> = test
            .iter()
            .copied()
            .filter(|&u| fm.threshold.is_positive(predict_score(&fm.model, data.full.row(u))))
            .collect();
        for &s in &cfg.strategies {
            let mf = match s {
                Strategy::Mf => nmf.as_ref(),
                Strategy::DomainMf => data.domain.as_ref(),
                _ => None,
            };
            let made: Vec<Result<Option<CloakDirective>>> = positives
                .par_iter()
                .map(|&u| match directive(s, &fm, u, data.full.row(u), &training_scores, mf, &ecfg) {
                    Ok(d) => Ok(Some(d)),
                    Err(CloakError::NotFound { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect();
            let mut records: Vec<DirectiveRecord> = Vec::new();
            let mut not_found = 0;
            for d in made {
                let Some(d) = d? else {
                    not_found += 1;
                    continue;
                };
                let cost = cloak_cost(data.full.row(d.user), &d, mf)?;
                let record = d.to_record(&data.full);
                rows.push(vec![
                    task.clone(),
                    s.name().to_string(),
                    record.user_id.clone(),
                    d.explanation.len().to_string(),
                    record.cloaked_items.len().to_string(),
                    d.cloaked_metafeatures.len().to_string(),
                    num(cost),
                ]);
                records.push(record);
            }
            messages.push(format!(
                "{task} {s}: {} directives for {} targeted test users ({not_found} without explanation)",
                records.len(),
                positives.len()
            ));
            results.push(json!({
                "task": task,
                "strategy": s,
                "threshold": fm.threshold,
                "targeted_users": positives.len(),
                "not_found": not_found,
                "directives": records,
            }));
        }
    }
    out.json("cloak.json", &results)?;
    out.csv(
        "cloak.csv",
        &["task", "strategy", "user_id", "explanation_size", "cloaked_items", "cloaked_metafeatures", "cost"],
        &rows,
    )?;
    out.finish(cfg, messages)
}

fn run_simulate(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, cfg.strategies.contains(&Strategy::Mf))?;
    let mut out = Outputs::new(cfg)?;
    let mut curves: Vec<ProtectionCurve> = Vec::new();
    let mut setups = Vec::new();
    for task in tasks(cfg, &loaded.data.labels)? {
        let setup = TaskSetup::new(&data, &task, &ecfg)?;
        for &s in &cfg.strategies {
            curves.push(setup.curve(&data, s, &ecfg)?);
        }
        setups.push(json!({
            "task": task,
            "C": setup.model.c,
            "cv_mean_auc": setup.cv.mean_auc,
            "threshold_initial": setup.threshold_initial,
            "threshold_full": setup.threshold_full,
            "positives_initial": setup.positives_initial,
            "positives_full": setup.positives_full,
            "candidates": setup.candidates.len(),
        }));
    }
    let breakdowns: Vec<_> = curves.iter().map(tp_fp_breakdown).collect();
    let tradeoff: Vec<_> = curves.iter().map(tradeoff_row).collect();

    let mut protection_rows = Vec::new();
    for c in &curves {
        for (i, f) in c.fractions.iter().enumerate() {
            let group = |g: &Option<Vec<f64>>| opt(g.as_ref().map(|v| v[i]));
            protection_rows.push(vec![
                c.task.clone(),
                c.strategy.name().to_string(),
                num(*f),
                num(c.thresholds[i]),
                num(c.protection[i]),
                group(&c.group_curves.tp),
                group(&c.group_curves.fp),
                c.population_size.to_string(),
            ]);
        }
    }
    let tp_fp_rows: Vec<Vec<String>> = breakdowns
        .iter()
        .map(|b| {
            vec![
                b.task.clone(),
                b.strategy.name().to_string(),
                opt(b.tp),
                opt(b.fp),
                b.n_tp.to_string(),
                b.n_fp.to_string(),
            ]
        })
        .collect();
    let tradeoff_rows: Vec<Vec<String>> = tradeoff
        .iter()
        .map(|t| {
            vec![
                t.task.clone(),
                t.strategy.name().to_string(),
                num(t.mean_cost),
                num(t.protection),
                t.population.to_string(),
            ]
        })
        .collect();
    let messages = curves
        .iter()
        .map(|c| {
            format!(
                "{} {}: protection {:.3} → {:.3} over {} users",
                c.task,
                c.strategy,
                c.protection.first().copied().unwrap_or(0.0),
                c.protection.last().copied().unwrap_or(0.0),
                c.population_size
            )
        })
        .collect();
    out.json(
        "simulate.json",
        &json!({ "tasks": setups, "curves": curves, "tp_fp": breakdowns, "tradeoff": tradeoff }),
    )?;
    out.csv(
        "protection.csv",
        &["task", "strategy", "fraction", "threshold", "protection", "tp_protection", "fp_protection", "population"],
        &protection_rows,
    )?;
    out.csv("tp_fp.csv", &["task", "strategy", "tp", "fp", "n_tp", "n_fp"], &tp_fp_rows)?;
    out.csv("tradeoff.csv", &["task", "strategy", "mean_cost", "protection", "population"], &tradeoff_rows)?;
    out.finish(cfg, messages)
}

fn run_spillover(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, false)?;
    let traits = traits(cfg, &loaded.data.labels)?;
    let mf = data.full_training_metafeatures(&ecfg)?;
    let mut out = Outputs::new(cfg)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut messages = Vec::new();
    for task in tasks(cfg, &loaded.data.labels)? {
        let r = run_spillover_experiment(&task, &traits, &data, &mf, &ecfg, cfg.spillover_mode)?;
        for t in &r.traits {
            rows.push(vec![
                task.clone(),
                t.trait_name.clone(),
                num(t.none),
                num(t.fg),
                num(t.mf),
                num(t.drop(Strategy::Fg)),
                num(t.drop(Strategy::Mf)),
                t.n.to_string(),
            ]);
        }
        messages.push(format!(
            "{task}: mean |Δr| FG {:.4}, MF {:.4} over {} cloaked users{}",
            r.mean_abs_drop(Strategy::Fg),
            r.mean_abs_drop(Strategy::Mf),
            r.cloaked_users,
            if r.small_population { " (small population)" } else { "" }
        ));
        reports.push(r);
    }
    out.json("spillover.json", &reports)?;
    out.csv(
        "spillover.csv",
        &["sensitive_task", "trait", "r_none", "r_fg", "r_mf", "drop_fg", "drop_mf", "n"],
        &rows,
    )?;
    out.finish(cfg, messages)
}

fn run_report(cfg: &RunConfig) -> Result<RunSummary> {
    let (loaded, ecfg, data) = prepare(cfg, false)?;
    let m = &data.full;
    let mut out = Outputs::new(cfg)?;
    let nmf = data.full_training_metafeatures(&ecfg)?;
    let mut reports = vec![nmf.report(m.item_ids(), 10)];
    if let Some(domain) = &data.domain {
        reports.push(domain.report(m.item_ids(), 10));
    }
    let mut rows = Vec::new();
    for r in &reports {
        for e in &r.metafeatures {
            for (rank, item) in e.top_items.iter().enumerate() {
                rows.push(vec![
                    format!("{:?}", r.source).to_lowercase(),
                    e.id.to_string(),
                    e.label.clone().unwrap_or_default(),
                    (rank + 1).to_string(),
                    item.item_id.clone(),
                    num(item.weight),
                ]);
            }
        }
    }
    let binary_rates: Vec<_> = data
        .labels
        .binary
        .iter()
        .map(|(t, col)| {
            let known: Vec<bool> = col.iter().flatten().copied().collect();
            let rate = known.iter().filter(|&&v| v).count() as f64 / known.len().max(1) as f64;
            json!({ "task": t, "labelled": known.len(), "positive_rate": rate })
        })
        .collect();
    let summary = json!({
        "users": m.n_users(),
        "items": m.n_items(),
        "likes": m.nnz(),
        "sparsity": m.sparsity(),
        "mean_likes": m.nnz() as f64 / m.n_users().max(1) as f64,
        "users_before_filter": loaded.data.footprints.n_users(),
        "items_before_filter": loaded.data.footprints.n_items(),
        "train_users": data.split.train.len(),
        "test_users": data.split.test.len(),
        "binary_tasks": binary_rates,
        "continuous_traits": data.labels.continuous.keys().collect::<Vec<_>>(),
    });
    out.json("report.json", &json!({ "dataset": summary, "metafeatures": reports }))?;
    out.csv("metafeatures.csv", &["source", "metafeature", "label", "rank", "item_id", "weight"], &rows)?;
    let msg = format!(
        "{} users × {} items after filtering; {} NMF metafeatures",
        m.n_users(),
        m.n_items(),
        nmf.k
    );
    out.finish(cfg, vec![msg])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(command: Command, out: &Path) -> RunConfig {
        RunConfig {
            command,
            out: out.to_path_buf(),
            synth_users: 400,
            synth_items: 500,
            synth_topics: 5,
            quantile: 0.9,
            tolerance_quantile: 0.8,
            tasks: vec!["male".into()],
            c_grid: vec![0.1, 1.0],
            ..RunConfig::default()
        }
    }

    #[test]
    fn csv_and_json_carry_hash_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(Command::Train, dir.path());
        let s = run(&cfg).unwrap();
        assert_eq!(s.files, vec!["train.json", "train.csv", "manifest.json"]);
        let csv = std::fs::read_to_string(dir.path().join("train.csv")).unwrap();
        assert!(csv.starts_with(&format!("# config_hash={} seed=0\n", cfg.config_hash())));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("train.json")).unwrap()).unwrap();
        assert_eq!(json["config_hash"], cfg.config_hash());
        assert_eq!(json["seed"], 0);
    }

    #[test]
    fn synth_output_round_trips_through_loaders() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(Command::Synth, dir.path())).unwrap();
        assert!(s.files.contains(&"ground_truth.json".to_string()));
        let m = load_triplets(dir.path().join("footprints.csv")).unwrap();
        let labels = LabelTable::load(dir.path().join("labels.csv"), &m).unwrap();
        let domain = DomainMapping::read(dir.path().join("domain_mapping.csv")).unwrap();
        let direct = generate(&synth_config(&small(Command::Synth, dir.path()))).unwrap();
        assert_eq!(m.nnz(), direct.footprints.nnz());
        assert_eq!(labels.binary.len(), 3);
        assert_eq!(domain, direct.domain);
    }

    #[test]
    fn explain_unknown_user() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            user: Some("nobody".into()),
            ..small(Command::Explain, dir.path())
        };
        assert!(matches!(run(&cfg), Err(CloakError::UnknownUser(_))));
    }
}
