//! Scripted-user walks and their raw pointer-event realization.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::{SimApp, SimSession};
use crate::trace::{MotionEvent, Phase};
use crate::ui::{Action, ActionType, InteractionFlow, UiState};

/// Spacing between the starts of consecutive actions.
pub const ACTION_SPACING_MS: i64 = 2500;
pub const TOUCH_MS: i64 = 100;
pub const LONG_TOUCH_MS: i64 = 800;
pub const SWIPE_MS: i64 = 300;
pub const SWIPE_PX: i32 = 100;
pub const KEY_SESSIONS: usize = 3;
pub const KEY_GAP_MS: i64 = 300;

/// Pointer events of one flow; `state` fields reference fingerprints.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTrace {
    pub app_id: String,
    pub events: Vec<MotionEvent>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub flows: Vec<InteractionFlow>,
    pub raw: Vec<RawTrace>,
    /// Every state referenced by `raw`, keyed by fingerprint text.
    pub states: BTreeMap<String, UiState>,
}

impl Corpus {
    pub fn extend(&mut self, other: Corpus) {
        self.flows.extend(other.flows);
        self.raw.extend(other.raw);
        self.states.extend(other.states);
    }
}

fn ev(t: i64, phase: Phase, x: i32, y: i32, state: &str) -> MotionEvent {
    MotionEvent {
        t,
        phase,
        x,
        y,
        keyboard_shown: false,
        focused_editable: None,
        state_ref: state.to_string(),
    }
}

/// One press-move-release span from `start` by `(dx, dy)` over `ms`.
fn stroke(out: &mut Vec<MotionEvent>, t: i64, ms: i64, start: (i32, i32), delta: (i32, i32), state: &str) {
    let (x, y) = start;
    out.push(ev(t, Phase::Enter, x, y, state));
    for k in 1..=2 {
        out.push(ev(t + ms * k / 3, Phase::Move, x + delta.0 * k as i32 / 3, y + delta.1 * k as i32 / 3, state));
    }
    out.push(ev(t + ms, Phase::Leave, x + delta.0, y + delta.1, state));
}

/// Events that classify back to `action`, kept at least 5 px and 50 ms
/// away from every rule boundary.
pub fn emit_action(out: &mut Vec<MotionEvent>, t: i64, action: &Action, state: &str, rng: &mut ChaCha8Rng) {
    let start = (action.x, action.y);
    let jitter = |rng: &mut ChaCha8Rng| (rng.random_range(-7..=7), rng.random_range(-7..=7));
    match action.kind {
        ActionType::Touch => stroke(out, t, TOUCH_MS, start, jitter(rng), state),
        ActionType::LongTouch => stroke(out, t, LONG_TOUCH_MS, start, jitter(rng), state),
        ActionType::InputText => {
            for k in 0..KEY_SESSIONS {
                let key = (rng.random_range(30..330), rng.random_range(560..620));
                let t0 = t + k as i64 * (TOUCH_MS + KEY_GAP_MS);
                let first = out.len();
                stroke(out, t0, TOUCH_MS, key, (0, 0), state);
                for e in &mut out[first..] {
                    e.keyboard_shown = true;
                    e.focused_editable = Some(action.target_element.clone());
                }
            }
        }
        kind => {
            let side = rng.random_range(-10..=10);
            let delta = match kind {
                ActionType::SwipeUp => (side, -SWIPE_PX),
                ActionType::SwipeDown => (side, SWIPE_PX),
                ActionType::SwipeLeft => (-SWIPE_PX, side),
                _ => (SWIPE_PX, side),
            };
            stroke(out, t, SWIPE_MS, start, delta, state);
        }
    }
}

/// `n_flows` walks of `flow_len` steps, each from the initial state.
pub fn generate_traces(app: &Arc<SimApp>, n_flows: usize, flow_len: usize, seed: u64, emit_raw: bool) -> Result<Corpus> {
    if n_flows == 0 || flow_len == 0 {
        return Err(Error::Config("flow count and length must be at least 1".into()));
    }
    let mut session = SimSession::new(Arc::clone(app), seed);
    let mut event_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e7e7);
    let mut corpus = Corpus::default();
    for _ in 0..n_flows {
        session.reset();
        let mut flow = InteractionFlow {
            app_id: app.app_id().to_string(),
            states: Vec::with_capacity(flow_len),
            actions: Vec::with_capacity(flow_len),
        };
        let mut events = Vec::new();
        for k in 0..flow_len {
            let state = session.current_state().clone();
            let action = session.scripted_user_step()?;
            if emit_raw {
                let r = state.fingerprint().to_string();
                emit_action(&mut events, 1000 + k as i64 * ACTION_SPACING_MS, &action, &r, &mut event_rng);
                corpus.states.entry(r).or_insert_with(|| state.clone());
            }
            session.step(&action)?;
            flow.states.push(state);
            flow.actions.push(action);
        }
        if emit_raw {
            corpus.raw.push(RawTrace {
                app_id: flow.app_id.clone(),
                events,
            });
        }
        corpus.flows.push(flow);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{make_benchmark_suite, SuiteKind};
    use crate::trace::{extract_flow, TraceConfig};
    use std::collections::HashMap;

    #[test]
    fn flows_have_requested_shape() {
        let app = Arc::new(SimApp::new(make_benchmark_suite(SuiteKind::Gated, 1, 4).unwrap().remove(0)).unwrap());
        let c = generate_traces(&app, 3, 10, 1, false).unwrap();
        assert_eq!(c.flows.len(), 3);
        assert!(c.flows.iter().all(|f| f.len() == 10));
        assert!(c.raw.is_empty());
        for f in &c.flows {
            f.validate().unwrap();
        }
    }

    #[test]
    fn raw_round_trip() {
        for kind in [SuiteKind::Gated, SuiteKind::Uniform] {
            let app = Arc::new(SimApp::new(make_benchmark_suite(kind, 1, 5).unwrap().remove(0)).unwrap());
            let c = generate_traces(&app, 4, 25, 2, true).unwrap();
            let states: HashMap<String, UiState> = c.states.clone().into_iter().collect();
            for (flow, raw) in c.flows.iter().zip(&c.raw) {
                let (got, notes) = extract_flow(&raw.app_id, &raw.events, &states, &TraceConfig::default()).unwrap();
                assert!(notes.is_empty(), "{notes:?}");
                assert_eq!(&got, flow);
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let app = Arc::new(SimApp::new(make_benchmark_suite(SuiteKind::Uniform, 1, 6).unwrap().remove(0)).unwrap());
        assert_eq!(generate_traces(&app, 2, 8, 3, true).unwrap(), generate_traces(&app, 2, 8, 3, true).unwrap());
    }
}
