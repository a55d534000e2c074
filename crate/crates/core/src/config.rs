//! Run configuration: defaults, `key = value` config files, replay manifests,
//! and the canonical form hashed into every result file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloak::Strategy;
use crate::error::{CloakError, Result};
use crate::explain::{Explainer, SearchLimits};
use crate::models::{DEFAULT_ALPHA_GRID, DEFAULT_C_GRID};
use crate::simulate::{decile_schedule, ExperimentConfig};
use crate::spillover::SpilloverMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Synth,
    Train,
    Explain,
    Cloak,
    Simulate,
    Spillover,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Train => "train",
            Command::Explain => "explain",
            Command::Cloak => "cloak",
            Command::Simulate => "simulate",
            Command::Spillover => "spillover",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: Command,
    pub footprints: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub domain_mapping: Option<PathBuf>,
    /// Output directory; not part of the experiment identity.
    #[serde(skip)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
    pub seed: u64,
    /// Binary tasks; empty means every binary task in the labels.
    pub tasks: Vec<String>,
    pub strategies: Vec<Strategy>,
    pub quantile: f64,
    pub tolerance_quantile: f64,
    /// Metafeature count; `None` means the synthetic topic count, or 50 on loaded data.
    pub k: Option<usize>,
    pub c_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub schedule: Vec<f64>,
    pub drop_fraction: f64,
    pub train_fraction: f64,
    pub min_user_likes: usize,
    pub min_item_likes: usize,
    pub folds: usize,
    pub user: Option<String>,
    /// Continuous traits; empty means every continuous trait in the labels.
    pub traits: Vec<String>,
    pub synth_users: usize,
    pub synth_items: usize,
    pub synth_topics: usize,
    pub explainer: Explainer,
    pub spillover_mode: SpilloverMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Simulate,
            footprints: None,
            labels: None,
            domain_mapping: None,
            out: PathBuf::from("results"),
            jobs: 1,
            seed: 0,
            tasks: Vec::new(),
            strategies: vec![Strategy::Fg, Strategy::Mf],
            quantile: 0.95,
            tolerance_quantile: 0.90,
            k: None,
            c_grid: DEFAULT_C_GRID.to_vec(),
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            schedule: decile_schedule(),
            drop_fraction: 0.5,
            train_fraction: 0.66,
            min_user_likes: 10,
            min_item_likes: 10,
            folds: 3,
            user: None,
            traits: Vec::new(),
            synth_users: 2000,
            synth_items: 5000,
            synth_topics: 12,
            explainer: Explainer::Linear,
            spillover_mode: SpilloverMode::Cloaked,
        }
    }
}

fn list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CloakError::InvalidArgument(format!("`{key}`: cannot parse `{value}`")))
}

fn fmt_list<T: fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one option by its config-file key (dashes and underscores are
    /// interchangeable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key.as_str() {
            "seed" => self.seed = number(&key, value)?,
            "task" | "tasks" => self.tasks = list(value, |s| Ok(s.to_string()))?,
            "strategy" | "strategies" => self.strategies = list(value, Strategy::parse)?,
            "quantile" => self.quantile = number(&key, value)?,
            "tolerance-quantile" => self.tolerance_quantile = number(&key, value)?,
            "k" => self.k = Some(number(&key, value)?),
            "schedule" => self.schedule = list(value, |s| number(&key, s))?,
            "c-grid" => self.c_grid = list(value, |s| number(&key, s))?,
            "alpha-grid" => self.alpha_grid = list(value, |s| number(&key, s))?,
            "drop-fraction" => self.drop_fraction = number(&key, value)?,
            "train-fraction" => self.train_fraction = number(&key, value)?,
            "min-user-likes" => self.min_user_likes = number(&key, value)?,
            "min-item-likes" => self.min_item_likes = number(&key, value)?,
            "folds" => self.folds = number(&key, value)?,
            "footprints" => self.footprints = path(),
            "labels" => self.labels = path(),
            "domain-mapping" => self.domain_mapping = path(),
            "out" => self.out = PathBuf::from(value),
            "jobs" => self.jobs = number(&key, value)?,
            "user" => self.user = (!value.is_empty()).then(|| value.to_string()),
            "traits" => self.traits = list(value, |s| Ok(s.to_string()))?,
            "synth-users" => self.synth_users = number(&key, value)?,
            "synth-items" => self.synth_items = number(&key, value)?,
            "synth-topics" => self.synth_topics = number(&key, value)?,
            "explainer" => {
                self.explainer = match value {
                    "linear" => Explainer::Linear,
                    "sedc" => Explainer::Sedc(SearchLimits::default()),
                    _ => return Err(CloakError::InvalidArgument(format!("unknown explainer `{value}`"))),
                }
            }
            "spillover-mode" => {
                self.spillover_mode = match value {
                    "cloaked" => SpilloverMode::Cloaked,
                    "all-test" | "all_test" => SpilloverMode::AllTest,
                    _ => return Err(CloakError::InvalidArgument(format!("unknown spillover mode `{value}`"))),
                }
            }
            _ => return Err(CloakError::InvalidArgument(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| CloakError::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            self.set(key, value).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    /// Loads a config file or a replay manifest (JSON), keeping `out` and
    /// `jobs` from `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CloakError::io(path, e))?;
        if text.trim_start().starts_with('{') {
            let manifest: Manifest = serde_json::from_str(&text)?;
            let (out, jobs) = (std::mem::take(&mut self.out), self.jobs);
            *self = manifest.config;
            self.out = out;
            self.jobs = jobs;
            Ok(())
        } else {
            self.apply_text(&text, path)
        }
    }

    /// Every option that can change a result, one `key=value` per line in a
    /// fixed order.
    pub fn canonical(&self) -> String {
        let explainer = match self.explainer {
            Explainer::Linear => "linear".to_string(),
            Explainer::Sedc(l) => format!("sedc(max_size={},max_expansions={})", l.max_size, l.max_expansions),
        };
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.flag()).collect();
        let pairs = [
            ("command", self.command.to_string()),
            ("footprints", fmt_path(&self.footprints)),
            ("labels", fmt_path(&self.labels)),
            ("domain-mapping", fmt_path(&self.domain_mapping)),
            ("seed", self.seed.to_string()),
            ("tasks", self.tasks.join(",")),
            ("strategies", strategies.join(",")),
            ("quantile", format!("{:?}", self.quantile)),
            ("tolerance-quantile", format!("{:?}", self.tolerance_quantile)),
            ("k", self.k.map(|k| k.to_string()).unwrap_or_default()),
            ("c-grid", fmt_list(&self.c_grid)),
            ("alpha-grid", fmt_list(&self.alpha_grid)),
            ("schedule", fmt_list(&self.schedule)),
            ("drop-fraction", format!("{:?}", self.drop_fraction)),
            ("train-fraction", format!("{:?}", self.train_fraction)),
            ("min-user-likes", self.min_user_likes.to_string()),
            ("min-item-likes", self.min_item_likes.to_string()),
            ("folds", self.folds.to_string()),
            ("user", self.user.clone().unwrap_or_default()),
            ("traits", self.traits.join(",")),
            ("synth-users", self.synth_users.to_string()),
            ("synth-items", self.synth_items.to_string()),
            ("synth-topics", self.synth_topics.to_string()),
            ("explainer", explainer),
            ("spillover-mode", format!("{:?}", self.spillover_mode)),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.footprints, &self.labels, &self.domain_mapping].into_iter().flatten() {
            if !p.exists() {
                return Err(CloakError::InvalidArgument(format!("{} does not exist", p.display())));
            }
        }
        if self.labels.is_some() && self.footprints.is_none() {
            return Err(CloakError::InvalidArgument("--labels needs --footprints".into()));
        }
        if self.jobs == 0 {
            return Err(CloakError::InvalidArgument("jobs must be ≥ 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(CloakError::InvalidArgument("at least one strategy is required".into()));
        }
        if self.command == Command::Explain && self.user.is_none() {
            return Err(CloakError::InvalidArgument("explain needs --user".into()));
        }
        self.experiment(self.synth_topics).validate()
    }

    /// Experiment settings, with `default_k` used when `k` is unset.
    pub fn experiment(&self, default_k: usize) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            drop_fraction: self.drop_fraction,
            train_frac: self.train_fraction,
            min_user: self.min_user_likes,
            min_item: self.min_item_likes,
            quantile: self.quantile,
            tolerance_quantile: self.tolerance_quantile,
            schedule: self.schedule.clone(),
            c_grid: self.c_grid.clone(),
            alpha_grid: self.alpha_grid.clone(),
            folds: self.folds,
            k: self.k.unwrap_or(default_k),
            explainer: self.explainer,
            ..ExperimentConfig::default()
        }
    }
}

/// Written next to every run's results; feeding it back through `--config`
/// reproduces them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(config: &RunConfig, files: Vec<String>) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.config_hash(),
            seed: config.seed,
            config: config.clone(),
            files,
        }
    }
}
