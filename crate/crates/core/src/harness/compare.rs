//! Policy comparison over a suite of apps and seeds.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::explore::{run_exploration, ActionScorer, ExplorationPolicy, PolicyKind};
use crate::model::eval::median;
use crate::sim::{SimApp, SimSession};

#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutcome {
    pub app_id: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub steps_to_target: Option<usize>,
    /// Coverage after each step.
    pub curve: Vec<f64>,
    pub final_coverage: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub sessions: usize,
    pub failed: usize,
    pub reached: usize,
    /// Unreached sessions count as `budget + 1`.
    pub median_steps_to_target: f64,
    pub median_final_coverage: f64,
    pub app_wins: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub budget: usize,
    pub policies: Vec<PolicyKind>,
    pub outcomes: Vec<SessionOutcome>,
    pub summaries: Vec<PolicySummary>,
    /// Per app: median steps-to-target per policy, in `policies` order.
    pub per_app: Vec<(String, Vec<f64>)>,
}

/// Seed of session `k` under base seed `seed`; shared by all policies.
pub fn session_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(k as u64)
}

fn one_session(
    app: &Arc<SimApp>,
    policy: PolicyKind,
    seed: u64,
    budget: usize,
    scorer: Option<&(dyn ActionScorer + Sync)>,
) -> SessionOutcome {
    let total = app.reachable_action_count().max(1) as f64;
    let mut env = SimSession::new(Arc::clone(app), seed);
    let scorer = if policy.needs_model() { scorer.map(|s| s as &dyn ActionScorer) } else { None };
    let mut out = SessionOutcome {
        app_id: app.app_id().to_string(),
        policy,
        seed,
        steps_to_target: None,
        curve: Vec::new(),
        final_coverage: 0.0,
        failure: None,
    };
    match run_exploration(&mut env, ExplorationPolicy { kind: policy, seed }, budget, scorer) {
        Ok(res) => {
            out.steps_to_target = res.log.first_target_step();
            out.curve = res.log.records.iter().map(|r| r.actions_explored as f64 / total).collect();
            out.final_coverage = out.curve.last().copied().unwrap_or(0.0);
            out.failure = res.log.failure;
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out
}

/// Runs every app x policy x seed session on up to `workers` threads.
/// Results come back in that nested order regardless of scheduling.
pub fn run_compare(
    apps: &[Arc<SimApp>],
    policies: &[PolicyKind],
    seeds: usize,
    base_seed: u64,
    budget: usize,
    scorer: Option<&(dyn ActionScorer + Sync)>,
    workers: usize,
) -> Result<CompareReport> {
    if policies.len() < 2 {
        return Err(Error::Config("compare needs at least two policies".into()));
    }
    if seeds == 0 || budget == 0 {
        return Err(Error::Config("seeds and budget must be at least 1".into()));
    }
    if policies.iter().any(|p| p.needs_model()) && scorer.is_none() {
        return Err(Error::Config("a model policy was requested without a checkpoint".into()));
    }
    let jobs: Vec<(usize, PolicyKind, u64)> = (0..apps.len())
        .flat_map(|a| policies.iter().flat_map(move |&p| (0..seeds).map(move |k| (a, p, session_seed(base_seed, k)))))
        .collect();
    let run = |&(a, p, s): &(usize, PolicyKind, u64)| one_session(&apps[a], p, s, budget, scorer);
    let outcomes: Vec<SessionOutcome> = if workers <= 1 {
        jobs.iter().map(run).collect()
    } else {
        let chunk = jobs.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("session worker panicked")).collect()
        })
    };

    let censored = |o: &SessionOutcome| o.steps_to_target.unwrap_or(budget + 1) as f64;
    let per_app: Vec<(String, Vec<f64>)> = apps
        .iter()
        .map(|app| {
            let meds = policies
                .iter()
                .map(|&p| {
                    let mut v: Vec<f64> = outcomes
                        .iter()
                        .filter(|o| o.app_id == app.app_id() && o.policy == p && o.failure.is_none())
                        .map(censored)
                        .collect();
                    median(&mut v)
                })
                .collect();
            (app.app_id().to_string(), meds)
        })
        .collect();
    let summaries = policies
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let mine: Vec<&SessionOutcome> = outcomes.iter().filter(|o| o.policy == p).collect();
            let ok: Vec<&&SessionOutcome> = mine.iter().filter(|o| o.failure.is_none()).collect();
            let mut steps: Vec<f64> = ok.iter().map(|o| censored(o)).collect();
            let mut cov: Vec<f64> = ok.iter().map(|o| o.final_coverage).collect();
            let app_wins = per_app
                .iter()
                .filter(|(_, m)| m.iter().enumerate().all(|(j, v)| j == pi || m[pi] < *v))
                .count();
            PolicySummary {
                policy: p,
                sessions: mine.len(),
                failed: mine.len() - ok.len(),
                reached: ok.iter().filter(|o| o.steps_to_target.is_some()).count(),
                median_steps_to_target: median(&mut steps),
                median_final_coverage: median(&mut cov),
                app_wins,
            }
        })
        .collect();
    Ok(CompareReport {
        budget,
        policies: policies.to_vec(),
        outcomes,
        summaries,
        per_app,
    })
}

impl CompareReport {
    pub fn summary(&self, policy: PolicyKind) -> Option<&PolicySummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }

    pub fn write_runs_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "app,policy,seed,steps_to_target,final_coverage,failed")?;
        for o in &self.outcomes {
            let steps = o.steps_to_target.map(|s| s.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{steps},{:.6},{}", o.app_id, o.policy, o.seed, o.final_coverage, o.failure.is_some())?;
        }
        Ok(())
    }

    pub fn write_curves_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "app,policy,seed,step,coverage")?;
        for o in &self.outcomes {
            for (i, c) in o.curve.iter().enumerate() {
                writeln!(out, "{},{},{},{},{c:.6}", o.app_id, o.policy, o.seed, i + 1)?;
            }
        }
        Ok(())
    }

    pub fn write_summary_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# unreached sessions count as {} steps", self.budget + 1)?;
        writeln!(out, "policy,sessions,failed,reached_target,median_steps_to_target,median_final_coverage,app_wins")?;
        for s in &self.summaries {
            writeln!(
                out,
                "{},{},{},{},{:.1},{:.6},{}",
                s.policy, s.sessions, s.failed, s.reached, s.median_steps_to_target, s.median_final_coverage, s.app_wins
            )?;
        }
        Ok(())
    }

    pub fn write_winloss_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let cols: Vec<String> = self.policies.iter().map(|p| format!("median_steps_{p}")).collect();
        writeln!(out, "app,{},winner", cols.join(","))?;
        for (app, meds) in &self.per_app {
            let best = meds.iter().copied().fold(f64::INFINITY, f64::min);
            let winners: Vec<&PolicyKind> = self.policies.iter().zip(meds).filter(|(_, m)| **m == best).map(|(p, _)| p).collect();
            let winner = if winners.len() == 1 { winners[0].to_string() } else { "tie".into() };
            let vals: Vec<String> = meds.iter().map(|m| format!("{m:.1}")).collect();
            writeln!(out, "{app},{},{winner}", vals.join(","))?;
        }
        Ok(())
    }
}
