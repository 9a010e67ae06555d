//! Deterministic synthetic apps and a preference-biased scripted user.

pub mod suite;
pub mod traces;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::Environment;
use crate::ui::{enumerate_actions, Action, ActionType, ScreenSize, UiState};

pub use suite::{make_benchmark_suite, SuiteKind};
pub use traces::{generate_traces, Corpus, RawTrace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: String,
    pub element: String,
    pub kind: ActionType,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefSpec {
    pub state: String,
    pub element: String,
    pub kind: ActionType,
    pub w: f64,
}

/// Serialized form of a synthetic app.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimAppSpec {
    pub app_id: String,
    pub screen: ScreenSize,
    pub initial: String,
    pub states: BTreeMap<String, UiState>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub prefs: Vec<PrefSpec>,
    #[serde(default)]
    pub targets: Vec<String>,
}

impl SimAppSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

type Key = (usize, String, ActionType);

/// A validated app with lookup tables.
#[derive(Clone, Debug)]
pub struct SimApp {
    spec: SimAppSpec,
    names: Vec<String>,
    states: Vec<UiState>,
    actions: Vec<Vec<Action>>,
    initial: usize,
    transitions: HashMap<Key, usize>,
    weights: Vec<Vec<f64>>,
    targets: Vec<bool>,
}

impl SimApp {
    pub fn new(spec: SimAppSpec) -> Result<Self> {
        let names: Vec<String> = spec.states.keys().cloned().collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Sim(format!("app `{}`: unknown state `{name}`", spec.app_id)))
        };
        let states: Vec<UiState> = spec.states.values().cloned().collect();
        if let Some(s) = states.iter().find(|s| s.screen() != spec.screen) {
            return Err(Error::Sim(format!("app `{}`: state screen {:?} differs from app screen", spec.app_id, s.screen())));
        }
        let mut seen = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if let Some(j) = seen.insert(s.fingerprint(), i) {
                return Err(Error::Sim(format!(
                    "app `{}`: states `{}` and `{}` share a fingerprint",
                    spec.app_id, names[j], names[i]
                )));
            }
        }
        let actions: Vec<Vec<Action>> = states.iter().map(enumerate_actions).collect();
        let find = |state: usize, element: &str, kind: ActionType| {
            actions[state]
                .iter()
                .position(|a| a.target_element == element && a.kind == kind)
                .ok_or_else(|| {
                    Error::Sim(format!(
                        "app `{}`: {kind} on `{element}` is not enumerable in `{}`",
                        spec.app_id, names[state]
                    ))
                })
        };
        let initial = lookup(&spec.initial)?;
        let mut transitions = HashMap::new();
        for t in &spec.transitions {
            let from = lookup(&t.from)?;
            find(from, &t.element, t.kind)?;
            let to = lookup(&t.to)?;
            if transitions.insert((from, t.element.clone(), t.kind), to).is_some() {
                return Err(Error::Sim(format!(
                    "app `{}`: duplicate transition for {} on `{}` in `{}`",
                    spec.app_id, t.kind, t.element, t.from
                )));
            }
        }
        let mut weights: Vec<Vec<f64>> = actions.iter().map(|a| vec![1.0; a.len()]).collect();
        for p in &spec.prefs {
            let s = lookup(&p.state)?;
            let i = find(s, &p.element, p.kind)?;
            if !(p.w > 0.0 && p.w.is_finite()) {
                return Err(Error::Sim(format!("app `{}`: preference weight {} must be positive", spec.app_id, p.w)));
            }
            weights[s][i] = p.w;
        }
        let mut targets = vec![false; states.len()];
        for t in &spec.targets {
            targets[lookup(t)?] = true;
        }
        Ok(SimApp {
            spec,
            names,
            states,
            actions,
            initial,
            transitions,
            weights,
            targets,
        })
    }

    pub fn spec(&self) -> &SimAppSpec {
        &self.spec
    }

    pub fn app_id(&self) -> &str {
        &self.spec.app_id
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &UiState {
        &self.states[i]
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn actions(&self, state: usize) -> &[Action] {
        &self.actions[state]
    }

    pub fn weights(&self, state: usize) -> &[f64] {
        &self.weights[state]
    }

    pub fn is_target(&self, state: usize) -> bool {
        self.targets[state]
    }

    /// Successor of `state` under `action`; ineffective actions self-loop.
    pub fn successor(&self, state: usize, action: &Action) -> Result<usize> {
        if !self.actions[state]
            .iter()
            .any(|a| a.kind == action.kind && a.target_element == action.target_element)
        {
            return Err(Error::Sim(format!(
                "{} on `{}` is not enumerable in `{}`",
                action.kind, action.target_element, self.names[state]
            )));
        }
        let key = (state, action.target_element.clone(), action.kind);
        Ok(self.transitions.get(&key).copied().unwrap_or(state))
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        seen[self.initial] = true;
        let mut stack = vec![self.initial];
        while let Some(s) = stack.pop() {
            for a in &self.actions[s] {
                let t = self.successor(s, a).expect("enumerated");
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// Total enumerable (state, action) pairs over reachable states.
    pub fn reachable_action_count(&self) -> usize {
        self.reachable()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .map(|(i, _)| self.actions[i].len())
            .sum()
    }

    pub fn state_of(&self, state: &UiState) -> Option<usize> {
        let fp = state.fingerprint();
        self.states.iter().position(|s| s.fingerprint() == fp)
    }
}

/// One running instance of an app.
#[derive(Clone, Debug)]
pub struct SimSession {
    app: Arc<SimApp>,
    current: usize,
    steps: u64,
    rng: ChaCha8Rng,
}

impl SimSession {
    pub fn new(app: Arc<SimApp>, seed: u64) -> Self {
        let current = app.initial();
        SimSession {
            app,
            current,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn app(&self) -> &SimApp {
        &self.app
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn current_state(&self) -> &UiState {
        self.app.state(self.current)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, action: &Action) -> Result<&UiState> {
        self.current = self.app.successor(self.current, action)?;
        self.steps += 1;
        Ok(self.current_state())
    }

    /// Back to the initial state. The step counter keeps running.
    pub fn reset(&mut self) -> &UiState {
        self.current = self.app.initial();
        self.current_state()
    }

    /// An enumerable action drawn in proportion to the user's preferences.
    pub fn scripted_user_step(&mut self) -> Result<Action> {
        let weights = self.app.weights(self.current);
        if weights.is_empty() {
            return Err(Error::Sim(format!("state `{}` has no actions", self.app.state_name(self.current))));
        }
        let dist = WeightedIndex::new(weights).map_err(|e| Error::Sim(e.to_string()))?;
        Ok(self.app.actions(self.current)[dist.sample(&mut self.rng)].clone())
    }
}

impl Environment for SimSession {
    fn observe(&mut self) -> Result<UiState> {
        Ok(self.current_state().clone())
    }

    fn perform(&mut self, action: &Action) -> Result<UiState> {
        self.step(action).cloned()
    }

    fn restart(&mut self) -> Result<UiState> {
        Ok(self.reset().clone())
    }

    fn is_target(&self, state: &UiState) -> bool {
        self.app.state_of(state).is_some_and(|i| self.app.is_target(i))
    }
}
