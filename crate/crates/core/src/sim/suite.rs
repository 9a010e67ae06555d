//! Procedural benchmark apps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{PrefSpec, SimApp, SimAppSpec, TransitionSpec};
use crate::ui::{enumerate_actions, ActionType, Rect, ScreenSize, UiElement, UiState};

pub const SCREEN: ScreenSize = ScreenSize::new(360, 640);
pub const PRIMARY_WEIGHT: f64 = 30.0;
pub const BACK_WEIGHT: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    /// A target state behind a three-step chain of preferred primary buttons.
    Gated,
    /// No preference bias.
    Uniform,
    /// At least 50 enumerable actions per state on average.
    Wide,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Gated => "gated",
            SuiteKind::Uniform => "uniform",
            SuiteKind::Wide => "wide",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gated" => Ok(SuiteKind::Gated),
            "uniform" => Ok(SuiteKind::Uniform),
            "wide" => Ok(SuiteKind::Wide),
            other => Err(Error::Config(format!("unknown suite kind `{other}`"))),
        }
    }
}

struct Layout {
    columns: usize,
    items: usize,
    row_height: i32,
    list: bool,
    field: bool,
    primary: bool,
}

fn item(id: String, bounds: Rect, rng: &mut ChaCha8Rng) -> UiElement {
    // The first item is always interactive so every state has a free action.
    let roll: f64 = if id == "item0" { 0.0 } else { rng.random() };
    let label = format!("{} {}", ["Open", "Edit", "Share", "Save", "More", "Next"].choose(rng).expect("nonempty"), id);
    if roll < 0.55 {
        UiElement::new(id, bounds).text(label).clickable()
    } else if roll < 0.8 {
        UiElement::new(id, bounds).clickable()
    } else if roll < 0.9 {
        UiElement::new(id, bounds).clickable().long_clickable()
    } else {
        UiElement::new(id, bounds).text(label)
    }
}

fn screen(app: &str, name: &str, layout: &Layout, rng: &mut ChaCha8Rng) -> UiState {
    let w = SCREEN.w as i32;
    let mut root = UiElement::new("root", SCREEN.rect())
        .child(UiElement::new("back", Rect::new(0, 0, 56, 48)).clickable())
        .child(UiElement::new("title", Rect::new(64, 8, w - 8, 40)).text(format!("{app} {name}")));
    let bottom = if layout.primary { 556 } else { 632 };
    let mut y = 60;
    let col_w = w / layout.columns as i32;
    let rows = layout.items.div_ceil(layout.columns);
    for r in 0..rows {
        for c in 0..layout.columns {
            let k = r * layout.columns + c;
            if k >= layout.items || y + layout.row_height > bottom {
                continue;
            }
            let x0 = c as i32 * col_w;
            let b = Rect::new(x0 + 6, y + 4, x0 + col_w - 6, y + layout.row_height - 4);
            root = root.child(item(format!("item{k}"), b, rng));
        }
        y += layout.row_height;
    }
    if layout.field && y + 56 <= bottom {
        root = root.child(UiElement::new("field", Rect::new(16, y + 8, w - 16, y + 48)).editable());
        y += 56;
    }
    if layout.list && y + 120 <= bottom {
        let h = (bottom - y).min(rng.random_range(120..=200));
        let mut list = UiElement::new("list", Rect::new(0, y, w, y + h)).scrollable();
        for (i, ry) in (y..y + h - 40).step_by(48).enumerate().take(3) {
            list = list.child(UiElement::new(format!("row{i}"), Rect::new(8, ry + 4, w - 8, ry + 40)).text(format!("row {i}")).clickable());
        }
        root = root.child(list);
    }
    if layout.primary {
        let left = rng.random_range(24..=80);
        let right = rng.random_range(280..=336);
        root = root.child(UiElement::new("primary", Rect::new(left, 568, right, 624)).clickable());
    }
    UiState::new(root, SCREEN).expect("generated layouts are valid")
}

fn touch(from: &str, element: &str, to: &str) -> TransitionSpec {
    TransitionSpec {
        from: from.into(),
        element: element.into(),
        kind: ActionType::Touch,
        to: to.into(),
    }
}

/// (element, kind) pairs of a state other than `back` and `primary`.
fn free_actions(state: &UiState) -> Vec<(String, ActionType)> {
    enumerate_actions(state)
        .into_iter()
        .filter(|a| a.target_element != "back" && a.target_element != "primary")
        .map(|a| (a.target_element, a.kind))
        .collect()
}

fn gated(app_id: &str, rng: &mut ChaCha8Rng) -> SimAppSpec {
    let n_distract = rng.random_range(3..=5);
    let chain = ["g0", "g1", "g2", "target"];
    let distractors: Vec<String> = (0..n_distract).map(|i| format!("d{i}")).collect();
    let mut states = BTreeMap::new();
    for name in chain.iter().map(|s| s.to_string()).chain(distractors.iter().cloned()) {
        let layout = Layout {
            columns: 2,
            items: rng.random_range(4..=7),
            row_height: 64,
            list: rng.random_bool(0.35),
            field: rng.random_bool(0.25),
            primary: true,
        };
        states.insert(name.clone(), screen(app_id, &name, &layout, rng));
    }
    let mut transitions = vec![
        touch("g0", "primary", "g1"),
        touch("g1", "primary", "g2"),
        touch("g2", "primary", "target"),
        touch("target", "primary", "g0"),
        touch("g1", "back", "g0"),
        touch("g2", "back", "g1"),
        touch("target", "back", "g0"),
    ];
    for d in &distractors {
        transitions.push(touch(d, "primary", "g0"));
        transitions.push(touch(d, "back", "g0"));
    }
    for (name, state) in &states {
        if name == "target" {
            continue;
        }
        for (element, kind) in free_actions(state) {
            let roll: f64 = rng.random();
            let to = if roll < 0.45 {
                let others: Vec<&String> = distractors.iter().filter(|d| *d != name).collect();
                (*others.choose(rng).expect("at least three distractors")).clone()
            } else if roll < 0.6 && name != "g0" {
                "g0".to_string()
            } else {
                continue;
            };
            transitions.push(TransitionSpec {
                from: name.clone(),
                element,
                kind,
                to,
            });
        }
    }
    let mut prefs = Vec::new();
    for name in states.keys() {
        for (element, w) in [("primary", PRIMARY_WEIGHT), ("back", BACK_WEIGHT)] {
            prefs.push(PrefSpec {
                state: name.clone(),
                element: element.into(),
                kind: ActionType::Touch,
                w,
            });
        }
    }
    SimAppSpec {
        app_id: app_id.into(),
        screen: SCREEN,
        initial: "g0".into(),
        states,
        transitions,
        prefs,
        targets: vec!["target".into()],
    }
}

/// Random app where every state is reachable from `s0` and `back` returns
/// there, so the transition graph is strongly connected.
fn connected(app_id: &str, wide: bool, rng: &mut ChaCha8Rng) -> SimAppSpec {
    let n = if wide { rng.random_range(4..=6) } else { rng.random_range(5..=10) };
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut states = BTreeMap::new();
    for name in &names {
        let layout = if wide {
            Layout {
                columns: 3,
                items: 48,
                row_height: 28,
                list: true,
                field: false,
                primary: false,
            }
        } else {
            Layout {
                columns: 2,
                items: rng.random_range(3..=8),
                row_height: 64,
                list: rng.random_bool(0.35),
                field: rng.random_bool(0.25),
                primary: false,
            }
        };
        states.insert(name.clone(), screen(app_id, name, &layout, rng));
    }
    let mut transitions = Vec::new();
    let mut used: Vec<Vec<bool>> = names.iter().map(|n| vec![false; free_actions(&states[n]).len()]).collect();
    for i in 1..n {
        // Wire a free action of an earlier state to s_i.
        loop {
            let j = rng.random_range(0..i);
            let free = free_actions(&states[&names[j]]);
            let open: Vec<usize> = (0..free.len()).filter(|&k| !used[j][k]).collect();
            let Some(&k) = open.choose(rng) else { continue };
            used[j][k] = true;
            transitions.push(TransitionSpec {
                from: names[j].clone(),
                element: free[k].0.clone(),
                kind: free[k].1,
                to: names[i].clone(),
            });
            break;
        }
    }
    for (j, name) in names.iter().enumerate() {
        if j > 0 {
            transitions.push(touch(name, "back", "s0"));
        }
        for (k, (element, kind)) in free_actions(&states[name]).into_iter().enumerate() {
            if used[j][k] || !rng.random_bool(0.5) {
                continue;
            }
            let to = names.choose(rng).expect("nonempty").clone();
            if &to != name {
                transitions.push(TransitionSpec {
                    from: name.clone(),
                    element,
                    kind,
                    to,
                });
            }
        }
    }
    SimAppSpec {
        app_id: app_id.into(),
        screen: SCREEN,
        initial: "s0".into(),
        states,
        transitions,
        prefs: Vec::new(),
        targets: vec![names[n - 1].clone()],
    }
}

/// `count` apps of one kind, reproducible from `seed`.
pub fn make_benchmark_suite(kind: SuiteKind, count: usize, seed: u64) -> Result<Vec<SimAppSpec>> {
    if count == 0 {
        return Err(Error::Config("suite size must be at least 1".into()));
    }
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64));
            let app_id = format!("{}-{seed}-{i:03}", kind.name());
            let spec = match kind {
                SuiteKind::Gated => gated(&app_id, &mut rng),
                SuiteKind::Uniform => connected(&app_id, false, &mut rng),
                SuiteKind::Wide => connected(&app_id, true, &mut rng),
            };
            SimApp::new(spec.clone())?;
            Ok(spec)
        })
        .collect()
}
