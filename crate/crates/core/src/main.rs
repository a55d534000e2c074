use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use footprint_cloak::config::{Command, RunConfig};
use footprint_cloak::runner;

#[derive(Parser)]
#[command(name = "cloak", version, about = "Counterfactual cloaking of behavioral footprints")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a synthetic dataset (footprints, labels, domain mapping, ground truth).
    Synth(Opts),
    /// Train targeting models with cross-validated regularization.
    Train(Opts),
    /// Explain why one user is targeted.
    Explain(Opts),
    /// Build cloak directives for targeted test users.
    Cloak(Opts),
    /// Measure protection as dropped likes are re-added.
    Simulate(Opts),
    /// Measure the effect of cloaking on other trait predictions.
    Spillover(Opts),
    /// Dataset summary and metafeature report.
    Report(Opts),
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Key-value config file or a replay manifest.json; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Binary task(s), comma separated.
    #[arg(long)]
    task: Option<String>,
    /// Strategies, comma separated: fg, mf, domain, fg-tol.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    tolerance_quantile: Option<f64>,
    /// Number of NMF metafeatures.
    #[arg(long)]
    k: Option<usize>,
    /// Re-add fractions, comma separated.
    #[arg(long)]
    schedule: Option<String>,
    /// Logistic-regression C values, comma separated.
    #[arg(long)]
    c_grid: Option<String>,
    /// Ridge alpha values, comma separated.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// `user_id,item_id` file; synthetic data is generated when absent.
    #[arg(long)]
    footprints: Option<PathBuf>,
    /// `user_id,task_name,value` file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// `item_id,category` file.
    #[arg(long)]
    domain_mapping: Option<PathBuf>,
    #[arg(long)]
    user: Option<String>,
    /// Continuous traits for spillover, comma separated.
    #[arg(long)]
    traits: Option<String>,
    /// linear or sedc.
    #[arg(long)]
    explainer: Option<String>,
    /// cloaked or all-test.
    #[arg(long)]
    spillover_mode: Option<String>,
    #[arg(long)]
    synth_users: Option<usize>,
    #[arg(long)]
    synth_items: Option<usize>,
    #[arg(long)]
    synth_topics: Option<usize>,
}

impl Opts {
    /// Flags that were given, as config keys and values.
    fn pairs(&self) -> Vec<(&'static str, String)> {
        fn show<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(T::to_string)
        }
        let text = |v: &Option<String>| v.clone();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let entries = [
            ("seed", show(&self.seed)),
            ("task", text(&self.task)),
            ("strategy", text(&self.strategy)),
            ("quantile", show(&self.quantile)),
            ("tolerance-quantile", show(&self.tolerance_quantile)),
            ("k", show(&self.k)),
            ("schedule", text(&self.schedule)),
            ("c-grid", text(&self.c_grid)),
            ("alpha-grid", text(&self.alpha_grid)),
            ("out", path(&self.out)),
            ("jobs", show(&self.jobs)),
            ("footprints", path(&self.footprints)),
            ("labels", path(&self.labels)),
            ("domain-mapping", path(&self.domain_mapping)),
            ("user", text(&self.user)),
            ("traits", text(&self.traits)),
            ("explainer", text(&self.explainer)),
            ("spillover-mode", text(&self.spillover_mode)),
            ("synth-users", show(&self.synth_users)),
            ("synth-items", show(&self.synth_items)),
            ("synth-topics", show(&self.synth_topics)),
        ];
        entries.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }
}

fn build_config(command: Command, opts: &Opts) -> footprint_cloak::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in opts.pairs() {
        cfg.set(key, &value)?;
    }
    cfg.command = command;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Sub::Synth(o) => (Command::Synth, o),
        Sub::Train(o) => (Command::Train, o),
        Sub::Explain(o) => (Command::Explain, o),
        Sub::Cloak(o) => (Command::Cloak, o),
        Sub::Simulate(o) => (Command::Simulate, o),
        Sub::Spillover(o) => (Command::Spillover, o),
        Sub::Report(o) => (Command::Report, o),
    };
    let result = build_config(command, &opts).and_then(|cfg| runner::run(&cfg));
    match result {
        Ok(summary) => {
            for m in &summary.messages {
                println!("{m}");
            }
            println!("wrote {} file(s) to {}", summary.files.len(), summary.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
