use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::explore::{run_exploration, ActionScorer, ExplorationPolicy, PolicyKind};
use crate::harness::compare::{run_compare, session_seed};
use crate::harness::corpus::{action_count_cdf, load_corpus, load_raw, save_corpus, save_raw};
use crate::harness::{load_suite, save_suite, write_bytes, write_csv, write_manifest, RunConfig};
use crate::model::{evaluate, train, Checkpoint, InteractionModel};
use crate::raster::Dims;
use crate::sim::{generate_traces, make_benchmark_suite, Corpus, SimApp, SimSession, SuiteKind};
use crate::trace::extract_flow;
use crate::ui::UiState;

#[derive(Debug, Parser)]
#[command(name = "mimic", version, about = "Model-guided GUI exploration toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. They override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Raster size as WxH.
    #[arg(long)]
    pub dims: Option<Dims>,
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw pointer traces into a flow corpus.
    Prep {
        #[arg(long)]
        raw: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a benchmark suite of synthetic apps.
    Synth {
        #[arg(long)]
        kind: Option<SuiteKind>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Record scripted-user flows on every app of a suite.
    GenTraces {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        flows: Option<usize>,
        #[arg(long)]
        len: Option<usize>,
        /// Also write raw pointer events under `OUT/raw`.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Train the interaction model on a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Top-N and percentile-rank metrics of a checkpoint on a corpus.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Explore every app of a suite with one policy.
    Explore {
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare policies over apps and seeds.
    Compare {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<PolicyKind>>,
        #[arg(long)]
        seeds: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Prep { common, .. }
            | Command::Synth { common, .. }
            | Command::GenTraces { common, .. }
            | Command::Train { common, .. }
            | Command::Eval { common, .. }
            | Command::Explore { common, .. }
            | Command::Compare { common, .. } => common,
        }
    }
}

/// File configuration with command-line overrides applied.
pub fn resolve(cmd: &Command) -> Result<RunConfig> {
    let c = cmd.common();
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.dims {
        cfg.model.dims = v;
    }
    if let Some(v) = c.policy {
        cfg.policy = v;
    }
    if let Some(v) = c.budget {
        cfg.budget = v;
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    match cmd {
        Command::Synth { kind, count, .. } => {
            if let Some(k) = kind {
                cfg.suite_kind = *k;
            }
            if let Some(n) = count {
                cfg.suite_count = *n;
            }
        }
        Command::GenTraces { flows, len, .. } => {
            if let Some(n) = flows {
                cfg.flows_per_app = *n;
            }
            if let Some(n) = len {
                cfg.flow_len = *n;
            }
        }
        Command::Train { epochs, max_steps, .. } => {
            if let Some(n) = epochs {
                cfg.epochs = *n;
            }
            if max_steps.is_some() {
                cfg.max_steps = *max_steps;
            }
        }
        Command::Compare { policies, seeds, .. } => {
            if let Some(p) = policies {
                cfg.policies = p.clone();
            }
            if let Some(n) = seeds {
                cfg.seeds = *n;
            }
        }
        _ => {}
    }
    cfg.model.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn load_model(path: Option<&Path>) -> Result<InteractionModel<f32>> {
    let path = path.ok_or_else(|| Error::Config("this policy needs --checkpoint".into()))?;
    Checkpoint::load(path)?.to_model()
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.command)?;
    let out = cli.command.common().out.clone();
    let checkpoint = cli.command.common().checkpoint.clone();
    match &cli.command {
        Command::Synth { .. } => cmd_synth(&cfg, &out),
        Command::GenTraces { suite, raw, .. } => cmd_gen_traces(&cfg, suite, *raw, &out),
        Command::Prep { raw, .. } => cmd_prep(&cfg, raw, &out),
        Command::Train { corpus, .. } => cmd_train(&cfg, corpus, &out),
        Command::Eval { corpus, .. } => cmd_eval(&cfg, checkpoint.as_deref(), corpus, &out),
        Command::Explore { suite, .. } => cmd_explore(&cfg, checkpoint.as_deref(), suite, &out),
        Command::Compare { suite, .. } => cmd_compare(&cfg, checkpoint.as_deref(), suite, &out),
    }
}

pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let specs = make_benchmark_suite(cfg.suite_kind, cfg.suite_count, cfg.seed)?;
    save_suite(out, &specs)?;
    write_manifest(out, "synth", cfg)?;
    println!("wrote {} {} apps to {}", specs.len(), cfg.suite_kind, out.display());
    Ok(())
}

pub fn cmd_gen_traces(cfg: &RunConfig, suite: &Path, raw: bool, out: &Path) -> Result<()> {
    let apps = load_suite(suite)?;
    let mut corpus = Corpus::default();
    for (i, app) in apps.into_iter().enumerate() {
        let app = Arc::new(app);
        corpus.extend(generate_traces(&app, cfg.flows_per_app, cfg.flow_len, session_seed(cfg.seed, i), raw)?);
    }
    save_corpus(out, &corpus.flows)?;
    if raw {
        save_raw(&out.join("raw"), &corpus)?;
    }
    write_manifest(out, "gen-traces", cfg)?;
    println!("wrote {} flows to {}", corpus.flows.len(), out.display());
    Ok(())
}

pub fn cmd_prep(cfg: &RunConfig, raw: &Path, out: &Path) -> Result<()> {
    if !raw.is_dir() {
        return Err(Error::io(raw, std::io::Error::new(std::io::ErrorKind::NotFound, "raw trace directory not found")));
    }
    let dir = load_raw(raw)?;
    let states: HashMap<String, UiState> = dir.states;
    let mut problems = dir.problems;
    let mut flows = Vec::new();
    for (path, app_id, events) in &dir.traces {
        match extract_flow(app_id, events, &states, &cfg.trace) {
            Ok((flow, notes)) => {
                for n in notes {
                    log::warn!("{}: {n}", path.display());
                }
                if !flow.is_empty() {
                    flows.push(flow);
                }
            }
            Err(e) => problems.push((path.clone(), e.to_string())),
        }
    }
    for (p, e) in &problems {
        eprintln!("skipped {}: {e}", p.display());
    }
    if dir.traces.is_empty() {
        eprintln!("warning: no traces under {}", raw.display());
    }
    save_corpus(out, &flows)?;
    let mean = flows.iter().map(|f| f.len()).sum::<usize>() as f64 / flows.len().max(1) as f64;
    write_csv(&out.join("prep_stats.csv"), cfg, |w| {
        use std::io::Write;
        for (p, e) in &problems {
            writeln!(w, "# skipped {}: {}", p.display(), e.replace('\n', " "))?;
        }
        writeln!(w, "metric,value")?;
        writeln!(w, "flows,{}", flows.len())?;
        writeln!(w, "mean_states_per_flow,{mean:.3}")?;
        writeln!(w, "skipped_files,{}", problems.len())
    })?;
    write_csv(&out.join("action_cdf.csv"), cfg, |w| {
        use std::io::Write;
        writeln!(w, "actions_at_most,fraction_of_states")?;
        for (k, f) in action_count_cdf(&flows) {
            writeln!(w, "{k},{f:.6}")?;
        }
        Ok(())
    })?;
    write_manifest(out, "prep", cfg)?;
    println!("{} flows, {mean:.1} states per flow, {} files skipped", flows.len(), problems.len());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<()> {
    let flows = load_corpus(corpus)?;
    let report = train(&flows, &cfg.model, &cfg.train_options())?;
    let ck = report.checkpoint();
    write_bytes(&out.join("model.ckpt"), &ck.to_bytes())?;
    write_csv(&out.join("train_steps.csv"), cfg, |w| report.write_step_csv(w))?;
    write_csv(&out.join("train_epochs.csv"), cfg, |w| report.write_epoch_csv(w))?;
    println!(
        "trained {} steps over {} epochs; final loss {:.4}",
        report.steps,
        report.epochs.len(),
        report.epochs.last().map_or(f64::NAN, |e| e.train)
    );
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>, corpus: &Path, out: &Path) -> Result<()> {
    let model = load_model(checkpoint)?;
    let flows = load_corpus(corpus)?;
    let report = evaluate(&model, &flows)?;
    write_csv(&out.join("metrics.csv"), cfg, |w| report.write_metrics_csv(w))?;
    write_csv(&out.join("scores.csv"), cfg, |w| report.write_scores_csv(w))?;
    println!(
        "{} states, top1 {:.3} (random {:.3}), median percentile {:.3}",
        report.states, report.top_n[0], report.random_top_n[0], report.median_percentile
    );
    Ok(())
}

pub fn cmd_explore(cfg: &RunConfig, checkpoint: Option<&Path>, suite: &Path, out: &Path) -> Result<()> {
    let model = if cfg.policy.needs_model() { Some(load_model(checkpoint)?) } else { None };
    let scorer = model.as_ref().map(|m| m as &dyn ActionScorer);
    let apps = load_suite(suite)?;
    let mut rows = Vec::new();
    for app in apps {
        let total = app.reachable_action_count().max(1);
        let id = app.app_id().to_string();
        let mut env = SimSession::new(Arc::new(app), cfg.seed);
        let res = run_exploration(&mut env, ExplorationPolicy { kind: cfg.policy, seed: cfg.seed }, cfg.budget, scorer)?;
        write_csv(&out.join("logs").join(format!("{id}.csv")), cfg, |w| res.log.write_csv(w))?;
        write_bytes(&out.join("utg").join(format!("{id}.dot")), res.utg.to_dot().as_bytes())?;
        let last = res.log.records.last();
        rows.push(format!(
            "{id},{},{},{},{:.6},{},{}",
            res.log.records.len(),
            last.map_or(0, |r| r.states_seen),
            last.map_or(0, |r| r.actions_explored),
            last.map_or(0, |r| r.actions_explored) as f64 / total as f64,
            res.log.first_target_step().map(|s| s.to_string()).unwrap_or_default(),
            res.log.terminated
        ));
        if let Some(f) = &res.log.failure {
            eprintln!("{id}: environment failure: {f}");
        }
    }
    write_csv(&out.join("explore_summary.csv"), cfg, |w| {
        use std::io::Write;
        writeln!(w, "app,steps,states_seen,actions_explored,coverage,first_target_step,terminated")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    println!("explored {} apps with {}", rows.len(), cfg.policy);
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig, checkpoint: Option<&Path>, suite: &Path, out: &Path) -> Result<()> {
    let model = if cfg.policies.iter().any(|p| p.needs_model()) { Some(load_model(checkpoint)?) } else { None };
    let scorer = model.as_ref().map(|m| m as &(dyn ActionScorer + Sync));
    let apps: Vec<Arc<SimApp>> = load_suite(suite)?.into_iter().map(Arc::new).collect();
    let report = run_compare(&apps, &cfg.policies, cfg.seeds, cfg.seed, cfg.budget, scorer, cfg.workers)?;
    write_csv(&out.join("runs.csv"), cfg, |w| report.write_runs_csv(w))?;
    write_csv(&out.join("curves.csv"), cfg, |w| report.write_curves_csv(w))?;
    write_csv(&out.join("summary.csv"), cfg, |w| report.write_summary_csv(w))?;
    write_csv(&out.join("winloss.csv"), cfg, |w| report.write_winloss_csv(w))?;
    for s in &report.summaries {
        println!(
            "{}: median steps to target {:.1}, median final coverage {:.3}, {} failed",
            s.policy, s.median_steps_to_target, s.median_final_coverage, s.failed
        );
    }
    Ok(())
}
