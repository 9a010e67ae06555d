//! Biased random search over a UI transition graph built online.

pub mod utg;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{score_actions, InteractionModel};
use crate::nn::Scalar;
use crate::raster::{UiContext, HISTORY_LEN};
use crate::ui::{Action, Fingerprint, UiState};

pub use utg::{UiTransitionGraph, UtgEdge, UtgNode};

/// Scores candidate actions of the current state given recent history.
pub trait ActionScorer {
    fn score(&self, ctx: &UiContext<'_>, actions: &[Action]) -> Result<Vec<f64>>;
}

impl<T: Scalar> ActionScorer for InteractionModel<T> {
    fn score(&self, ctx: &UiContext<'_>, actions: &[Action]) -> Result<Vec<f64>> {
        let pred = self.predict(ctx)?;
        score_actions(&pred, ctx.current, actions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Highest-scoring unexplored action, ties by enumeration order.
    ModelGreedy,
    /// Unexplored action sampled in proportion to its score.
    #[default]
    ModelWeighted,
    Random,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ModelGreedy => "model-greedy",
            PolicyKind::ModelWeighted => "model-weighted",
            PolicyKind::Random => "random",
        }
    }

    pub fn needs_model(self) -> bool {
        self != PolicyKind::Random
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model-greedy" => Ok(PolicyKind::ModelGreedy),
            "model-weighted" => Ok(PolicyKind::ModelWeighted),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ExplorationPolicy {
    pub kind: PolicyKind,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Explore,
    Navigate,
    Restart,
    Failure,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Explore => "explore",
            Purpose::Navigate => "navigate",
            Purpose::Restart => "restart",
            Purpose::Failure => "failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Explore(Action),
    Navigate(Action),
    /// No node with unexplored actions is reachable from here.
    Restart,
    /// Every registered node is fully explored.
    Terminate,
}

/// Picks the next input per the biased random search rule.
pub fn next_input(
    utg: &UiTransitionGraph,
    current: &UiState,
    history: &[(UiState, Action)],
    policy: PolicyKind,
    scorer: Option<&dyn ActionScorer>,
    rng: &mut ChaCha8Rng,
) -> Result<Decision> {
    let fp = current.fingerprint();
    let at = utg
        .node_index(fp)
        .ok_or_else(|| Error::InvalidState(format!("{fp} is not registered")))?;
    let node = &utg.nodes()[at];
    let candidates: Vec<(usize, &Action)> = node.unexplored().collect();
    if !candidates.is_empty() {
        let pick = choose(current, &candidates, history, policy, scorer, rng)?;
        return Ok(Decision::Explore(candidates[pick].1.clone()));
    }
    let reachable = utg.reachable(at);
    let target = utg
        .nodes()
        .iter()
        .enumerate()
        .filter(|(i, n)| reachable[*i] && n.unexplored_count() > 0)
        .max_by(|(i, a), (j, b)| a.unexplored_count().cmp(&b.unexplored_count()).then(j.cmp(i)))
        .map(|(i, _)| i);
    match target {
        Some(t) => {
            let path = utg.shortest_path_edges(at, t).expect("target is reachable");
            Ok(Decision::Navigate(utg.edge_action(&utg.edges()[path[0]]).clone()))
        }
        None if utg.nodes().iter().any(|n| n.unexplored_count() > 0) => Ok(Decision::Restart),
        None => Ok(Decision::Terminate),
    }
}

fn choose(
    current: &UiState,
    candidates: &[(usize, &Action)],
    history: &[(UiState, Action)],
    policy: PolicyKind,
    scorer: Option<&dyn ActionScorer>,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    if policy == PolicyKind::Random {
        return Ok(rng.random_range(0..candidates.len()));
    }
    let scorer = scorer.ok_or_else(|| Error::Config(format!("policy {policy} needs a model")))?;
    let ctx = UiContext::new(current, history.iter().map(|(s, a)| (s, a)).collect())?;
    let actions: Vec<Action> = candidates.iter().map(|(_, a)| (*a).clone()).collect();
    let scores = scorer.score(&ctx, &actions)?;
    if policy == PolicyKind::ModelGreedy {
        let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        return Ok(best);
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Ok(rng.random_range(0..candidates.len()));
    }
    let mut r = rng.random::<f64>() * total;
    for (i, s) in scores.iter().enumerate() {
        if r < *s {
            return Ok(i);
        }
        r -= s;
    }
    Ok(scores.iter().rposition(|s| *s > 0.0).unwrap_or(0))
}

/// A resettable app under test.
pub trait Environment {
    fn observe(&mut self) -> Result<UiState>;
    fn perform(&mut self, action: &Action) -> Result<UiState>;
    fn restart(&mut self) -> Result<UiState>;
    fn is_target(&self, _state: &UiState) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub step: usize,
    pub state: Fingerprint,
    pub action: Option<Action>,
    pub purpose: Purpose,
    pub new_state: Option<Fingerprint>,
    pub states_seen: usize,
    pub actions_explored: usize,
    pub targets_hit: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExplorationLog {
    pub records: Vec<LogRecord>,
    pub failure: Option<String>,
    /// All reachable work was done before the budget ran out.
    pub terminated: bool,
}

impl ExplorationLog {
    pub fn first_target_step(&self) -> Option<usize> {
        self.records.iter().find(|r| r.targets_hit > 0).map(|r| r.step)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "step,state,action_kind,element,purpose,new_state,states_seen,actions_explored,targets_hit")?;
        for r in &self.records {
            let (kind, el) = match &r.action {
                Some(a) => (a.kind.name(), a.target_element.as_str()),
                None => ("", ""),
            };
            let new_state = r.new_state.map(|f| f.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{kind},{el},{},{new_state},{},{},{}",
                r.step,
                r.state,
                r.purpose.name(),
                r.states_seen,
                r.actions_explored,
                r.targets_hit
            )?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ExplorationResult {
    pub utg: UiTransitionGraph,
    pub log: ExplorationLog,
}

/// Observe, choose, perform and record until termination or `budget` steps.
/// A restart counts as a step. If a restart leads to no further progress the
/// run stops, since repeating it would not change anything.
pub fn run_exploration(
    env: &mut dyn Environment,
    policy: ExplorationPolicy,
    budget: usize,
    scorer: Option<&dyn ActionScorer>,
) -> Result<ExplorationResult> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    if policy.kind.needs_model() && scorer.is_none() {
        return Err(Error::Config(format!("policy {} needs a model", policy.kind)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut utg = UiTransitionGraph::new();
    let mut log = ExplorationLog::default();
    let mut current = env.observe()?;
    utg.add_state(&current);
    let mut targets = std::collections::BTreeSet::new();
    if env.is_target(&current) {
        targets.insert(current.fingerprint());
    }
    let mut history: Vec<(UiState, Action)> = Vec::new();
    let mut restarted = false;

    for step in 1..=budget {
        let decision = next_input(&utg, &current, &history, policy.kind, scorer, &mut rng)?;
        let (action, purpose) = match decision {
            Decision::Terminate => {
                log.terminated = true;
                break;
            }
            Decision::Restart if restarted => {
                log.terminated = true;
                break;
            }
            Decision::Restart => (None, Purpose::Restart),
            Decision::Explore(a) => (Some(a), Purpose::Explore),
            Decision::Navigate(a) => (Some(a), Purpose::Navigate),
        };
        let outcome = match &action {
            Some(a) => env.perform(a),
            None => env.restart(),
        };
        let new_state = match outcome {
            Ok(s) => s,
            Err(e) => {
                log.records.push(LogRecord {
                    step,
                    state: current.fingerprint(),
                    action,
                    purpose: Purpose::Failure,
                    new_state: None,
                    states_seen: utg.nodes().len(),
                    actions_explored: utg.explored_count(),
                    targets_hit: targets.len(),
                });
                log.failure = Some(e.to_string());
                break;
            }
        };
        match &action {
            Some(a) => {
                utg.record_transition(&current, a, &new_state)?;
                history.push((current.clone(), a.clone()));
                if history.len() > HISTORY_LEN {
                    history.remove(0);
                }
                restarted = false;
            }
            None => {
                utg.add_state(&new_state);
                history.clear();
                restarted = true;
            }
        }
        if env.is_target(&new_state) {
            targets.insert(new_state.fingerprint());
        }
        log.records.push(LogRecord {
            step,
            state: current.fingerprint(),
            action,
            purpose,
            new_state: Some(new_state.fingerprint()),
            states_seen: utg.nodes().len(),
            actions_explored: utg.explored_count(),
            targets_hit: targets.len(),
        });
        current = new_state;
    }
    Ok(ExplorationResult { utg, log })
}
