//! Pointer-event streams to interaction flows.
//!
//! The pipeline is `sessionize` → `merge_text_sessions` (which classifies the
//! non-keyboard sessions with [`classify_session`]) → `align_flow`.

use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ui::{
    enumerate_actions_with_text, Action, ActionType, InteractionFlow, Point, UiState,
    DEFAULT_TEXT_PLACEHOLDER,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Sessions shorter than this (Euclidean, px) are touches.
    pub touch_radius_px: f64,
    /// Touch sessions lasting at least this long are long touches.
    pub long_touch_ms: i64,
    /// Keyboard sessions separated by a pause this long start a new text input.
    pub text_gap_ms: i64,
    pub text_placeholder: String,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            touch_radius_px: 50.0,
            long_touch_ms: 500,
            text_gap_ms: 1000,
            text_placeholder: DEFAULT_TEXT_PLACEHOLDER.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Enter,
    Move,
    Leave,
}

/// One line of a raw trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent {
    pub t: i64,
    pub phase: Phase,
    pub x: i32,
    pub y: i32,
    #[serde(rename = "kbd", default)]
    pub keyboard_shown: bool,
    #[serde(rename = "edit", default)]
    pub focused_editable: Option<String>,
    #[serde(rename = "state")]
    pub state_ref: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionSession {
    pub time_start: i64,
    pub time_end: i64,
    pub loc_start: Point,
    pub loc_end: Point,
    pub keyboard_shown: bool,
    pub focused_editable: Option<String>,
    /// Reference of the state captured when the session began.
    pub state_before: String,
}

impl InteractionSession {
    pub fn duration_ms(&self) -> i64 {
        self.time_end - self.time_start
    }

    pub fn distance_px(&self) -> f64 {
        self.loc_start.distance(self.loc_end)
    }

    fn in_text_entry(&self) -> bool {
        self.keyboard_shown && self.focused_editable.is_some()
    }
}

#[derive(Debug, Default)]
pub struct Sessions {
    pub sessions: Vec<InteractionSession>,
    pub warnings: Vec<String>,
}

/// Splits an event stream into enter…leave sessions.
pub fn sessionize(events: &[MotionEvent]) -> Result<Sessions> {
    if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(Error::Trace {
            index: i + 1,
            message: format!(
                "timestamp {} precedes previous timestamp {}",
                events[i + 1].t,
                events[i].t
            ),
        });
    }

    let mut out = Sessions::default();
    let mut open: Option<(usize, &MotionEvent)> = None;
    for (i, ev) in events.iter().enumerate() {
        match ev.phase {
            Phase::Enter => {
                if let Some((j, _)) = open {
                    out.warnings
                        .push(format!("event {j}: enter without leave, superseded by event {i}"));
                }
                open = Some((i, ev));
            }
            Phase::Move => {
                if open.is_none() {
                    out.warnings.push(format!("event {i}: move outside a session ignored"));
                }
            }
            Phase::Leave => match open.take() {
                Some((_, start)) => out.sessions.push(InteractionSession {
                    time_start: start.t,
                    time_end: ev.t,
                    loc_start: Point::new(start.x, start.y),
                    loc_end: Point::new(ev.x, ev.y),
                    keyboard_shown: start.keyboard_shown,
                    focused_editable: start.focused_editable.clone(),
                    state_before: start.state_ref.clone(),
                }),
                None => out.warnings.push(format!("event {i}: leave without enter ignored")),
            },
        }
    }
    if let Some((j, _)) = open {
        out.warnings.push(format!("event {j}: dangling enter at end of stream dropped"));
    }
    for w in &out.warnings {
        warn!("{w}");
    }
    Ok(out)
}

/// Maps one session to a gesture by its displacement and duration.
pub fn classify_session(session: &InteractionSession, cfg: &TraceConfig) -> (ActionType, Point) {
    let kind = if session.distance_px() < cfg.touch_radius_px {
        if session.duration_ms() < cfg.long_touch_ms {
            ActionType::Touch
        } else {
            ActionType::LongTouch
        }
    } else {
        let dx = session.loc_end.x - session.loc_start.x;
        let dy = session.loc_end.y - session.loc_start.y;
        if dx.abs() >= dy.abs() {
            if dx >= 0 {
                ActionType::SwipeRight
            } else {
                ActionType::SwipeLeft
            }
        } else if dy >= 0 {
            ActionType::SwipeDown
        } else {
            ActionType::SwipeUp
        }
    };
    (kind, session.loc_start)
}

/// A gesture extracted from sessions, not yet bound to a UI element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedAction {
    pub t: i64,
    pub kind: ActionType,
    pub location: Point,
    /// Known only for text input, whose target is the focused field.
    pub element: Option<String>,
}

#[derive(Debug, Default)]
pub struct Extracted {
    pub actions: Vec<TimedAction>,
    pub warnings: Vec<String>,
}

/// Collapses keyboard runs into text inputs and classifies everything else.
pub fn merge_text_sessions(
    sessions: &[InteractionSession],
    states: &HashMap<String, UiState>,
    cfg: &TraceConfig,
) -> Extracted {
    let mut out = Extracted::default();
    let mut i = 0;
    while i < sessions.len() {
        let s = &sessions[i];
        if !s.in_text_entry() {
            if s.keyboard_shown {
                out.warnings.push(format!(
                    "session at t={}: keyboard shown without a focused field, classified as a gesture",
                    s.time_start
                ));
            }
            let (kind, location) = classify_session(s, cfg);
            out.actions.push(TimedAction {
                t: s.time_start,
                kind,
                location,
                element: None,
            });
            i += 1;
            continue;
        }

        let field = s.focused_editable.as_deref().unwrap_or_default();
        let mut end = i + 1;
        while end < sessions.len() {
            let next = &sessions[end];
            let prev = &sessions[end - 1];
            if !next.in_text_entry()
                || next.focused_editable.as_deref() != Some(field)
                || next.time_start - prev.time_end >= cfg.text_gap_ms
            {
                break;
            }
            end += 1;
        }

        let center = states
            .get(&s.state_before)
            .and_then(|st| st.element(field))
            .map(|el| el.bounds.center());
        match center {
            Some(location) => {
                out.actions.push(TimedAction {
                    t: s.time_start,
                    kind: ActionType::InputText,
                    location,
                    element: Some(field.to_string()),
                });
            }
            None => {
                out.warnings.push(format!(
                    "session at t={}: focused field `{field}` not found in state `{}`, classified individually",
                    s.time_start, s.state_before
                ));
                for s in &sessions[i..end] {
                    let (kind, location) = classify_session(s, cfg);
                    out.actions.push(TimedAction {
                        t: s.time_start,
                        kind,
                        location,
                        element: None,
                    });
                }
            }
        }
        i = end;
    }
    for w in &out.warnings {
        warn!("{w}");
    }
    out
}

#[derive(Debug)]
pub struct Aligned {
    pub flow: InteractionFlow,
    pub diagnostics: Vec<String>,
}

/// Pairs every action with the state captured at or right before it and binds
/// it to an enumerable action of that state.
pub fn align_flow(
    app_id: &str,
    actions: &[TimedAction],
    state_stream: &[(i64, &UiState)],
    cfg: &TraceConfig,
) -> Result<Aligned> {
    if state_stream.is_empty() {
        return Err(Error::Trace {
            index: 0,
            message: "state stream is empty".into(),
        });
    }
    let mut flow = InteractionFlow {
        app_id: app_id.to_string(),
        states: Vec::new(),
        actions: Vec::new(),
    };
    let mut diagnostics = Vec::new();
    for ta in actions {
        // Latest state whose timestamp does not exceed the action's.
        let idx = state_stream.partition_point(|(t, _)| *t <= ta.t);
        let Some(&(_, state)) = idx.checked_sub(1).and_then(|i| state_stream.get(i)) else {
            diagnostics.push(format!("action at t={} precedes every captured state, dropped", ta.t));
            continue;
        };
        match bind_action(ta, state, cfg) {
            Some(action) => {
                flow.states.push(state.clone());
                flow.actions.push(action);
            }
            None => diagnostics.push(format!(
                "{} at ({}, {}) t={} matches no element of state {}, dropped",
                ta.kind,
                ta.location.x,
                ta.location.y,
                ta.t,
                state.fingerprint()
            )),
        }
    }
    for d in &diagnostics {
        warn!("{d}");
    }
    Ok(Aligned { flow, diagnostics })
}

fn bind_action(ta: &TimedAction, state: &UiState, cfg: &TraceConfig) -> Option<Action> {
    let candidates: Vec<Action> = enumerate_actions_with_text(state, &cfg.text_placeholder)
        .into_iter()
        .filter(|a| a.kind == ta.kind)
        .collect();
    if let Some(id) = &ta.element {
        if let Some(a) = candidates.iter().find(|a| &a.target_element == id) {
            return Some(a.clone());
        }
    }
    if let Some(a) = candidates.iter().find(|a| a.location() == ta.location) {
        return Some(a.clone());
    }
    // Smallest enclosing element that supports the gesture; first in pre-order on ties.
    candidates
        .iter()
        .filter_map(|a| {
            let el = state.element(&a.target_element)?;
            el.bounds.contains(ta.location).then_some((el.bounds.area(), a))
        })
        .min_by_key(|(area, _)| *area)
        .map(|(_, a)| a.clone())
}

/// Full pipeline for one trace: events plus the states they reference.
pub fn extract_flow(
    app_id: &str,
    events: &[MotionEvent],
    states: &HashMap<String, UiState>,
    cfg: &TraceConfig,
) -> Result<(InteractionFlow, Vec<String>)> {
    let sessions = sessionize(events)?;
    let extracted = merge_text_sessions(&sessions.sessions, states, cfg);
    let mut stream = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        let state = states.get(&ev.state_ref).ok_or_else(|| Error::Trace {
            index: i,
            message: format!("unresolved state reference `{}`", ev.state_ref),
        })?;
        stream.push((ev.t, state));
    }
    let aligned = align_flow(app_id, &extracted.actions, &stream, cfg)?;
    let mut notes = sessions.warnings;
    notes.extend(extracted.warnings);
    notes.extend(aligned.diagnostics);
    Ok((aligned.flow, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ui::{Rect, ScreenSize, UiElement};

    fn session(start: (i32, i32), end: (i32, i32), dt: i64) -> InteractionSession {
        InteractionSession {
            time_start: 1000,
            time_end: 1000 + dt,
            loc_start: Point::new(start.0, start.1),
            loc_end: Point::new(end.0, end.1),
            keyboard_shown: false,
            focused_editable: None,
            state_before: "s".into(),
        }
    }

    fn ev(t: i64, phase: Phase, x: i32, y: i32) -> MotionEvent {
        MotionEvent {
            t,
            phase,
            x,
            y,
            keyboard_shown: false,
            focused_editable: None,
            state_ref: "s0".into(),
        }
    }

    #[test]
    fn rule_table_examples() {
        let cfg = TraceConfig::default();
        let p = Point::new(100, 100);
        assert_eq!(classify_session(&session((100, 100), (120, 110), 300), &cfg), (ActionType::Touch, p));
        assert_eq!(
            classify_session(&session((100, 100), (100, 100), 600), &cfg),
            (ActionType::LongTouch, p)
        );
        assert_eq!(
            classify_session(&session((100, 100), (300, 100), 200), &cfg),
            (ActionType::SwipeRight, p)
        );
        // distance exactly 50 is a swipe
        assert_eq!(classify_session(&session((100, 100), (150, 100), 10), &cfg).0, ActionType::SwipeRight);
        assert_eq!(classify_session(&session((100, 100), (150, 100), 9000), &cfg).0, ActionType::SwipeRight);
    }

    #[test]
    fn swipe_directions_and_diagonal_tie() {
        let cfg = TraceConfig::default();
        let k = |e| classify_session(&session((200, 200), e, 100), &cfg).0;
        assert_eq!(k((100, 200)), ActionType::SwipeLeft);
        assert_eq!(k((200, 100)), ActionType::SwipeUp);
        assert_eq!(k((200, 300)), ActionType::SwipeDown);
        assert_eq!(k((260, 260)), ActionType::SwipeRight);
        assert_eq!(k((140, 140)), ActionType::SwipeLeft);
    }

    #[test]
    fn single_session() {
        let events = vec![ev(0, Phase::Enter, 5, 5), ev(100, Phase::Move, 6, 6), ev(300, Phase::Leave, 7, 7)];
        let s = sessionize(&events).unwrap();
        assert_eq!(s.sessions.len(), 1);
        assert_eq!(s.sessions[0].duration_ms(), 300);
        assert_eq!(s.sessions[0].loc_end, Point::new(7, 7));
    }

    #[test]
    fn two_sessions_in_order() {
        let events = vec![
            ev(0, Phase::Enter, 1, 1),
            ev(10, Phase::Leave, 1, 1),
            ev(20, Phase::Enter, 2, 2),
            ev(30, Phase::Leave, 2, 2),
        ];
        let s = sessionize(&events).unwrap();
        assert_eq!(s.sessions.len(), 2);
        assert_eq!(s.sessions[0].loc_start, Point::new(1, 1));
        assert_eq!(s.sessions[1].loc_start, Point::new(2, 2));
    }

    #[test]
    fn dangling_enter_is_dropped_with_warning() {
        let events = vec![ev(0, Phase::Enter, 1, 1), ev(10, Phase::Leave, 1, 1), ev(20, Phase::Enter, 2, 2)];
        let s = sessionize(&events).unwrap();
        assert_eq!(s.sessions.len(), 1);
        assert!(s.warnings.iter().any(|w| w.contains("dangling")));
    }

    #[test]
    fn out_of_order_names_index() {
        let events = vec![ev(0, Phase::Enter, 1, 1), ev(50, Phase::Move, 1, 1), ev(40, Phase::Leave, 1, 1)];
        match sessionize(&events) {
            Err(Error::Trace { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected trace error, got {other:?}"),
        }
    }

    fn form_state() -> UiState {
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("f1", Rect::new(20, 100, 340, 160)).editable())
            .child(UiElement::new("btn", Rect::new(20, 300, 340, 360)).clickable());
        UiState::new(root, ScreenSize::new(360, 640)).unwrap()
    }

    fn kbd(t: i64, field: Option<&str>) -> InteractionSession {
        InteractionSession {
            time_start: t,
            time_end: t + 80,
            loc_start: Point::new(100, 600),
            loc_end: Point::new(101, 600),
            keyboard_shown: true,
            focused_editable: field.map(str::to_string),
            state_before: "form".into(),
        }
    }

    #[test]
    fn keyboard_run_collapses() {
        let states = HashMap::from([("form".to_string(), form_state())]);
        let sessions: Vec<_> = (0..5).map(|i| kbd(i * 200, Some("f1"))).collect();
        let out = merge_text_sessions(&sessions, &states, &TraceConfig::default());
        assert_eq!(out.actions.len(), 1);
        assert_eq!(out.actions[0].kind, ActionType::InputText);
        assert_eq!(out.actions[0].location, Rect::new(20, 100, 340, 160).center());
    }

    #[test]
    fn interrupted_run_gives_two_inputs() {
        let states = HashMap::from([("form".to_string(), form_state())]);
        let mut middle = session((180, 330), (181, 330), 100);
        middle.time_start = 500;
        middle.time_end = 600;
        middle.state_before = "form".into();
        let sessions = vec![kbd(0, Some("f1")), kbd(200, Some("f1")), middle, kbd(800, Some("f1"))];
        let out = merge_text_sessions(&sessions, &states, &TraceConfig::default());
        let kinds: Vec<_> = out.actions.iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![ActionType::InputText, ActionType::Touch, ActionType::InputText]);
    }

    #[test]
    fn keyboard_without_field_falls_back() {
        let states = HashMap::from([("form".to_string(), form_state())]);
        let sessions = vec![kbd(0, None), kbd(200, None)];
        let out = merge_text_sessions(&sessions, &states, &TraceConfig::default());
        assert_eq!(out.actions.len(), 2);
        assert!(out.actions.iter().all(|a| a.kind == ActionType::Touch));
        assert_eq!(out.warnings.len(), 2);
    }

    #[test]
    fn pairs_with_state_right_before() {
        let a = form_state();
        let b = UiState::new(UiElement::new("root", Rect::new(0, 0, 360, 640)), ScreenSize::new(360, 640)).unwrap();
        let stream = vec![(0, &a), (600, &b)];
        let acts = vec![TimedAction {
            t: 500,
            kind: ActionType::Touch,
            location: Point::new(50, 320),
            element: None,
        }];
        let out = align_flow("app", &acts, &stream, &TraceConfig::default()).unwrap();
        assert_eq!(out.flow.states[0], a);
        assert_eq!(out.flow.actions[0].target_element, "btn");
        assert_eq!(out.flow.actions[0].location(), Rect::new(20, 300, 340, 360).center());
    }

    #[test]
    fn snaps_to_smallest_enclosing_element() {
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640)).child(
            UiElement::new("card", Rect::new(0, 0, 360, 300))
                .clickable()
                .child(UiElement::new("icon", Rect::new(10, 10, 60, 60)).clickable()),
        );
        let s = UiState::new(root, ScreenSize::new(360, 640)).unwrap();
        let acts = vec![TimedAction {
            t: 10,
            kind: ActionType::Touch,
            location: Point::new(20, 25),
            element: None,
        }];
        let out = align_flow("app", &acts, &[(0, &s)], &TraceConfig::default()).unwrap();
        assert_eq!(out.flow.actions[0].target_element, "icon");

        let miss = vec![TimedAction {
            t: 10,
            kind: ActionType::SwipeUp,
            location: Point::new(20, 25),
            element: None,
        }];
        let out = align_flow("app", &miss, &[(0, &s)], &TraceConfig::default()).unwrap();
        assert!(out.flow.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn empty_state_stream_is_rejected() {
        assert!(align_flow("app", &[], &[], &TraceConfig::default()).is_err());
    }
}
