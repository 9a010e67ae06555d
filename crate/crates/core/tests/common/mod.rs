//! Fixtures and independent reference implementations shared by the
//! integration tests. Nothing here calls the code it checks.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mimic_core::explore::UiTransitionGraph;
use mimic_core::raster::Dims;
use mimic_core::sim::SimApp;
use mimic_core::trace::{InteractionSession, MotionEvent, Phase};
use mimic_core::ui::{Action, ActionType, Point, Rect, ScreenSize, UiElement, UiState};

pub const SCREEN: ScreenSize = ScreenSize::new(360, 640);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- ui

/// A titled screen with `buttons` clickable rows.
pub fn button_state(tag: &str, buttons: usize) -> UiState {
    assert!(buttons <= 13);
    let mut root = UiElement::new("root", SCREEN.rect()).child(UiElement::new("title", Rect::new(10, 8, 350, 40)).text(tag));
    for k in 0..buttons {
        let top = 60 + 44 * k as i32;
        root = root.child(UiElement::new(format!("b{k}"), Rect::new(20, top, 340, top + 36)).clickable());
    }
    UiState::new(root, SCREEN).unwrap()
}

/// Twelve elements with every capability mix, nested two levels deep.
pub fn mixed_fixture() -> UiState {
    let root = UiElement::new("root", SCREEN.rect())
        .child(UiElement::new("toolbar", Rect::new(0, 0, 360, 56)).clickable()
            .child(UiElement::new("nav", Rect::new(0, 0, 56, 56)).clickable())
            .child(UiElement::new("heading", Rect::new(64, 8, 280, 48)).text("Inbox").long_clickable())
            .child(UiElement::new("menu", Rect::new(300, 0, 360, 56)).clickable().long_clickable()))
        .child(UiElement::new("search", Rect::new(16, 64, 344, 104)).editable().clickable())
        .child(UiElement::new("feed", Rect::new(0, 112, 360, 520)).scrollable()
            .child(UiElement::new("card0", Rect::new(8, 120, 352, 220)).clickable().long_clickable())
            .child(UiElement::new("card1", Rect::new(8, 228, 352, 328)).clickable().long_clickable())
            .child(UiElement::new("caption", Rect::new(8, 336, 352, 368)).text("caption").clickable()))
        .child(UiElement::new("pager", Rect::new(0, 528, 360, 576)).scrollable().long_clickable())
        .child(UiElement::new("fab", Rect::new(280, 584, 344, 632)).clickable().long_clickable());
    UiState::new(root, SCREEN).unwrap()
}

/// Naive recursive enumeration: element first, then children left to right.
pub fn enumerate_recursive(state: &UiState, text: &str) -> Vec<Action> {
    fn visit(el: &UiElement, text: &str, out: &mut Vec<Action>) {
        let cx = el.bounds.left + (el.bounds.right - el.bounds.left) / 2;
        let cy = el.bounds.top + (el.bounds.bottom - el.bounds.top) / 2;
        let mut push = |kind: ActionType| {
            out.push(Action {
                kind,
                target_element: el.id.clone(),
                x: cx,
                y: cy,
                text_payload: if kind == ActionType::InputText { Some(text.to_string()) } else { None },
            })
        };
        if el.clickable {
            push(ActionType::Touch);
        }
        if el.long_clickable {
            push(ActionType::LongTouch);
        }
        if el.scrollable {
            for k in [ActionType::SwipeUp, ActionType::SwipeDown, ActionType::SwipeLeft, ActionType::SwipeRight] {
                push(k);
            }
        }
        if el.editable {
            push(ActionType::InputText);
        }
        for c in &el.children {
            visit(c, text, out);
        }
    }
    let mut out = Vec::new();
    visit(state.root(), text, &mut out);
    out
}

/// Random valid tree of up to ~12 elements; children nest inside parents.
pub fn random_tree(r: &mut ChaCha8Rng) -> UiState {
    fn grow(r: &mut ChaCha8Rng, bounds: Rect, depth: usize, next: &mut usize) -> UiElement {
        let id = format!("e{next}");
        *next += 1;
        let mut el = UiElement::new(id, bounds);
        el.clickable = r.random_bool(0.4);
        el.long_clickable = r.random_bool(0.15);
        el.scrollable = r.random_bool(0.15);
        el.editable = r.random_bool(0.1);
        if r.random_bool(0.3) {
            el = el.text(format!("t{}", r.random_range(0..50)));
        }
        let kids = if depth < 2 && bounds.width() > 40 && bounds.height() > 40 { r.random_range(0..4) } else { 0 };
        for _ in 0..kids {
            let l = r.random_range(bounds.left..bounds.right - 10);
            let t = r.random_range(bounds.top..bounds.bottom - 10);
            let rr = r.random_range(l + 5..=bounds.right);
            let b = r.random_range(t + 5..=bounds.bottom);
            el = el.child(grow(r, Rect::new(l, t, rr, b), depth + 1, next));
        }
        el
    }
    let mut next = 0;
    let tree = grow(r, SCREEN.rect(), 0, &mut next);
    UiState::new(tree, SCREEN).unwrap()
}

/// Everything the fingerprint is meant to depend on, in a canonical string.
pub fn canonical_content(state: &UiState) -> String {
    fn q(v: i32) -> i32 {
        (v + 5).div_euclid(10)
    }
    fn walk(el: &UiElement, out: &mut String) {
        out.push_str(&format!(
            "[{} {} {} {} {}{}{}{}{} {:?} {}",
            q(el.bounds.left),
            q(el.bounds.top),
            q(el.bounds.right),
            q(el.bounds.bottom),
            el.is_text as u8,
            el.clickable as u8,
            el.long_clickable as u8,
            el.scrollable as u8,
            el.editable as u8,
            el.text,
            el.children.len()
        ));
        for c in &el.children {
            walk(c, out);
        }
        out.push(']');
    }
    let mut s = format!("{}x{}", state.screen().w, state.screen().h);
    walk(state.root(), &mut s);
    s
}

// ------------------------------------------------------------- trace

/// The gesture table, in integer arithmetic.
pub fn rule_table(x0: i32, y0: i32, x1: i32, y1: i32, dt: i64) -> ActionType {
    let (dx, dy) = (i64::from(x1 - x0), i64::from(y1 - y0));
    if dx * dx + dy * dy < 50 * 50 {
        return if dt < 500 { ActionType::Touch } else { ActionType::LongTouch };
    }
    if dx.abs() >= dy.abs() {
        if dx < 0 {
            ActionType::SwipeLeft
        } else {
            ActionType::SwipeRight
        }
    } else if dy < 0 {
        ActionType::SwipeUp
    } else {
        ActionType::SwipeDown
    }
}

pub fn session(x0: i32, y0: i32, x1: i32, y1: i32, dt: i64) -> InteractionSession {
    InteractionSession {
        time_start: 0,
        time_end: dt,
        loc_start: Point::new(x0, y0),
        loc_end: Point::new(x1, y1),
        keyboard_shown: false,
        focused_editable: None,
        state_before: String::new(),
    }
}

/// Boundary fixtures: distances 49, 50, 51 along every axis and the 3-4-5
/// diagonal, crossed with durations 499, 500, 501 and a few clear cases.
pub fn classification_fixtures() -> Vec<(InteractionSession, ActionType)> {
    let mut out = Vec::new();
    let (x, y) = (180, 320);
    let offsets: Vec<(i32, i32)> = [49, 50, 51]
        .iter()
        .flat_map(|&d| [(d, 0), (-d, 0), (0, d), (0, -d)])
        .chain([(30, 40), (-30, -40), (35, 35), (36, 36), (0, 0), (3, 4)])
        .collect();
    for &(dx, dy) in &offsets {
        for dt in [499, 500, 501] {
            let want = rule_table(x, y, x + dx, y + dy, dt);
            out.push((session(x, y, x + dx, y + dy, dt), want));
        }
    }
    out.push((session(100, 100, 120, 110, 300), ActionType::Touch));
    out.push((session(100, 100, 100, 100, 600), ActionType::LongTouch));
    out.push((session(100, 100, 300, 100, 200), ActionType::SwipeRight));
    out.push((session(100, 100, 150, 100, 5000), ActionType::SwipeRight));
    out.push((session(200, 200, 100, 100, 100), ActionType::SwipeLeft));
    out.push((session(200, 200, 200, 0, 100), ActionType::SwipeUp));
    out
}

pub fn event(t: i64, phase: Phase, x: i32, y: i32, state: &str) -> MotionEvent {
    MotionEvent {
        t,
        phase,
        x,
        y,
        keyboard_shown: false,
        focused_editable: None,
        state_ref: state.into(),
    }
}

/// Single-pass scanner: remember the latest unmatched enter, close it on leave.
pub fn reference_sessions(events: &[MotionEvent]) -> Vec<InteractionSession> {
    let mut out = Vec::new();
    let mut down: Option<&MotionEvent> = None;
    for e in events {
        if e.phase == Phase::Enter {
            down = Some(e);
        } else if e.phase == Phase::Leave {
            if let Some(s) = down.take() {
                out.push(InteractionSession {
                    time_start: s.t,
                    time_end: e.t,
                    loc_start: Point::new(s.x, s.y),
                    loc_end: Point::new(e.x, e.y),
                    keyboard_shown: s.keyboard_shown,
                    focused_editable: s.focused_editable.clone(),
                    state_before: s.state_ref.clone(),
                });
            }
        }
    }
    out
}

/// Forty events, seven complete spans, plus moves, a stray leave and a
/// superseded enter.
pub fn forty_event_stream() -> Vec<MotionEvent> {
    use Phase::*;
    let mut v = Vec::new();
    let mut t = 0;
    let mut push = |phase, x, y, dt: i64| {
        t += dt;
        v.push(event(t, phase, x, y, "s0"));
    };
    push(Leave, 5, 5, 0);
    push(Enter, 10, 10, 10);
    push(Move, 12, 11, 20);
    push(Leave, 14, 12, 30);
    push(Move, 99, 99, 10);
    push(Enter, 50, 400, 100);
    for k in 0..5 {
        push(Move, 50, 400 - 40 * k, 20);
    }
    push(Leave, 50, 180, 20);
    push(Enter, 300, 300, 500);
    push(Enter, 310, 310, 40);
    push(Leave, 310, 312, 700);
    push(Enter, 20, 600, 300);
    push(Move, 120, 600, 50);
    push(Move, 220, 600, 50);
    push(Leave, 320, 600, 50);
    push(Move, 100, 100, 200);
    push(Enter, 200, 200, 100);
    push(Move, 203, 204, 100);
    push(Move, 206, 208, 100);
    push(Move, 209, 212, 100);
    push(Move, 212, 216, 100);
    push(Leave, 215, 220, 100);
    push(Enter, 330, 100, 100);
    push(Move, 260, 110, 30);
    push(Move, 190, 120, 30);
    push(Move, 120, 130, 30);
    push(Leave, 60, 140, 30);
    push(Move, 0, 0, 10);
    push(Enter, 180, 500, 90);
    push(Move, 180, 450, 40);
    push(Move, 180, 400, 40);
    for k in 0..4 {
        push(Move, 181, 395 - 10 * k, 10);
    }
    push(Leave, 180, 350, 40);
    v
}

/// Two-pointer merger: `i` marks a keyboard run's start, `j` runs to its end.
pub fn reference_merge(
    sessions: &[InteractionSession],
    states: &HashMap<String, UiState>,
    gap_ms: i64,
) -> Vec<(i64, ActionType, Point, Option<String>)> {
    let typing = |s: &InteractionSession| s.keyboard_shown && s.focused_editable.is_some();
    let classify = |s: &InteractionSession| {
        (
            s.time_start,
            rule_table(s.loc_start.x, s.loc_start.y, s.loc_end.x, s.loc_end.y, s.time_end - s.time_start),
            s.loc_start,
            None,
        )
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < sessions.len() {
        if !typing(&sessions[i]) {
            out.push(classify(&sessions[i]));
            i += 1;
            continue;
        }
        let field = sessions[i].focused_editable.clone().unwrap();
        let mut j = i + 1;
        while j < sessions.len()
            && typing(&sessions[j])
            && sessions[j].focused_editable.as_ref() == Some(&field)
            && sessions[j].time_start - sessions[j - 1].time_end < gap_ms
        {
            j += 1;
        }
        let el = states.get(&sessions[i].state_before).and_then(|s| s.elements().find(|e| e.id == field).cloned());
        match el {
            Some(el) => {
                let c = Point::new(
                    el.bounds.left + (el.bounds.right - el.bounds.left) / 2,
                    el.bounds.top + (el.bounds.bottom - el.bounds.top) / 2,
                );
                out.push((sessions[i].time_start, ActionType::InputText, c, Some(field)));
            }
            None => out.extend(sessions[i..j].iter().map(classify)),
        }
        i = j;
    }
    out
}

// ------------------------------------------------------------ raster

/// Scanline rasterizer: for every pixel row and column, test the pixel
/// center against each non-root leaf in floating point.
pub fn reference_skeleton(state: &UiState, dims: Dims) -> Vec<f32> {
    let (sw, sh) = (state.screen().w as f64, state.screen().h as f64);
    let mut out = vec![0.0f32; 2 * dims.w * dims.h];
    let mut leaves = Vec::new();
    fn collect<'a>(el: &'a UiElement, out: &mut Vec<&'a UiElement>) {
        for c in &el.children {
            if c.children.is_empty() {
                out.push(c);
            } else {
                collect(c, out);
            }
        }
    }
    collect(state.root(), &mut leaves);
    let span = |lo: i32, hi: i32, screen: f64, n: usize| -> Vec<usize> {
        let hits: Vec<usize> = (0..n)
            .filter(|&p| {
                let c = (p as f64 + 0.5) * screen / n as f64;
                c >= lo as f64 && c < hi as f64
            })
            .collect();
        if hits.is_empty() {
            let mid = (lo as f64 + hi as f64) / 2.0 * n as f64 / screen;
            vec![(mid.floor() as usize).min(n - 1)]
        } else {
            hits
        }
    };
    for el in leaves {
        let ch = if el.is_text { 0 } else { 1 };
        let xs = span(el.bounds.left, el.bounds.right, sw, dims.w);
        for y in span(el.bounds.top, el.bounds.bottom, sh, dims.h) {
            for &x in &xs {
                out[(ch * dims.h + y) * dims.w + x] = 1.0;
            }
        }
    }
    out
}

// ---------------------------------------------------------------- nn

/// Same-padded stride-1 cross-correlation, six nested loops.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv(x: &[f64], c: usize, h: usize, w: usize, k: &[f64], o: usize, kh: usize, kw: usize, bias: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; o * h * w];
    for oc in 0..o {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = bias[oc];
                for ic in 0..c {
                    for a in 0..kh {
                        for b in 0..kw {
                            let sy = y as isize + a as isize - (kh / 2) as isize;
                            let sx = xx as isize + b as isize - (kw / 2) as isize;
                            if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                                acc += k[((oc * c + ic) * kh + a) * kw + b] * x[(ic * h + sy as usize) * w + sx as usize];
                            }
                        }
                    }
                }
                out[(oc * h + y) * w + xx] = acc;
            }
        }
    }
    out
}

/// Transposed stride-2 convolution by explicit scatter onto a padded
/// canvas, cropped afterwards.
pub fn naive_deconv(x: &[f64], c: usize, h: usize, w: usize, k: &[f64], o: usize, kh: usize, kw: usize) -> Vec<f64> {
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let (ch, cw) = (2 * h + kh, 2 * w + kw);
    let mut canvas = vec![0.0; o * ch * cw];
    for ic in 0..c {
        for i in 0..h {
            for j in 0..w {
                for oc in 0..o {
                    for a in 0..kh {
                        for b in 0..kw {
                            canvas[(oc * ch + 2 * i + a) * cw + 2 * j + b] += x[(ic * h + i) * w + j] * k[((ic * o + oc) * kh + a) * kw + b];
                        }
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; o * 2 * h * 2 * w];
    for oc in 0..o {
        for y in 0..2 * h {
            for xx in 0..2 * w {
                out[(oc * 2 * h + y) * 2 * w + xx] = canvas[(oc * ch + y + ph) * cw + xx + pw];
            }
        }
    }
    out
}

/// Stride-2 correlation with the deconvolution kernel, the deconvolution's
/// adjoint: `y` is `(o, 2h, 2w)`, the result `(c, h, w)`.
pub fn naive_strided_conv(y: &[f64], c: usize, h: usize, w: usize, k: &[f64], o: usize, kh: usize, kw: usize) -> Vec<f64> {
    let (ph, pw) = (((kh - 1) / 2) as isize, ((kw - 1) / 2) as isize);
    let (oh, ow) = (2 * h as isize, 2 * w as isize);
    let mut out = vec![0.0; c * h * w];
    for ic in 0..c {
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for oc in 0..o {
                    for a in 0..kh {
                        for b in 0..kw {
                            let yy = 2 * i as isize + a as isize - ph;
                            let xx = 2 * j as isize + b as isize - pw;
                            if yy >= 0 && yy < oh && xx >= 0 && xx < ow {
                                acc += k[((ic * o + oc) * kh + a) * kw + b] * y[((oc as isize * oh + yy) * ow + xx) as usize];
                            }
                        }
                    }
                }
                out[(ic * h + i) * w + j] = acc;
            }
        }
    }
    out
}

/// 2x2 stride-2 max pool with ceiling size.
pub fn naive_pool(x: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = vec![f64::NEG_INFINITY; c * oh * ow];
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                let o = (ch * oh + y / 2) * ow + xx / 2;
                out[o] = out[o].max(x[(ch * h + y) * w + xx]);
            }
        }
    }
    out
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ----------------------------------------------------------- explore

/// A UTG over `n` button screens with random edges, plus its adjacency.
pub fn random_utg(n: usize, r: &mut ChaCha8Rng) -> (UiTransitionGraph, Vec<UiState>, Vec<Vec<bool>>) {
    let states: Vec<UiState> = (0..n).map(|i| button_state(&format!("node {i}"), r.random_range(1..=4))).collect();
    let mut utg = UiTransitionGraph::new();
    let mut adj = vec![vec![false; n]; n];
    for s in &states {
        utg.add_state(s);
    }
    let edges = r.random_range(n..3 * n);
    for _ in 0..edges {
        let from = r.random_range(0..n);
        let to = r.random_range(0..n);
        let actions = mimic_core::ui::enumerate_actions(&states[from]);
        let a = &actions[r.random_range(0..actions.len())];
        utg.record_transition(&states[from], a, &states[to]).unwrap();
        adj[from][to] = true;
    }
    (utg, states, adj)
}

/// All-pairs hop counts.
pub fn floyd_warshall(adj: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Some(0) } else if adj[i][j] { Some(1) } else { None }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

// --------------------------------------------------------------- sim

/// Probability that uniformly random actions from the initial state reach
/// a target within `steps` steps, by enumerating every action sequence.
pub fn exhaustive_hit_probability(app: &SimApp, steps: usize) -> f64 {
    fn go(app: &SimApp, s: usize, left: usize) -> f64 {
        if app.is_target(s) {
            return 1.0;
        }
        if left == 0 {
            return 0.0;
        }
        let actions = app.actions(s);
        let p = 1.0 / actions.len() as f64;
        actions.iter().map(|a| p * go(app, app.successor(s, a).unwrap(), left - 1)).sum()
    }
    go(app, app.initial(), steps)
}

// ------------------------------------------------------------- model

/// 1-based rank of `truth` by descending score, earlier index first on ties.
pub fn brute_rank(scores: &[f64], truth: usize) -> usize {
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| s > scores[truth] || (s == scores[truth] && i < truth))
        .count()
}

// -------------------------------------------------------- round trip

/// Generates a small corpus for one app, re-extracts every raw trace and
/// reports the first disagreement.
pub fn round_trip(kind: mimic_core::sim::SuiteKind, seed: u64) -> Result<usize, String> {
    use mimic_core::trace::{extract_flow, TraceConfig};
    let spec = mimic_core::sim::make_benchmark_suite(kind, 1, seed).unwrap().remove(0);
    let app = std::sync::Arc::new(SimApp::new(spec).unwrap());
    let corpus = mimic_core::sim::generate_traces(&app, 3, 12, seed, true).unwrap();
    let states: HashMap<String, UiState> = corpus.states.clone().into_iter().collect();
    for (i, (flow, raw)) in corpus.flows.iter().zip(&corpus.raw).enumerate() {
        let (got, notes) = extract_flow(&raw.app_id, &raw.events, &states, &TraceConfig::default()).map_err(|e| e.to_string())?;
        if !notes.is_empty() {
            return Err(format!("seed {seed} flow {i}: {notes:?}"));
        }
        if &got != flow {
            return Err(format!("seed {seed} flow {i}: re-extracted flow differs"));
        }
    }
    Ok(corpus.flows.len())
}

/// Recomputes top-1/3/5/10, their random baselines and the mean and median
/// percentile rank from a dumped `scores.csv`.
pub fn metrics_from_scores_csv(text: &str) -> ([f64; 4], [f64; 4], f64, f64) {
    let ks = [1usize, 3, 5, 10];
    let mut top = [0.0; 4];
    let mut random = [0.0; 4];
    let mut pct = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let truth: usize = cols[3].parse().unwrap();
        let scores: Vec<f64> = cols[4].split(' ').map(|v| v.parse().unwrap()).collect();
        let rank = brute_rank(&scores, truth);
        for (j, &k) in ks.iter().enumerate() {
            top[j] += f64::from(u8::from(rank <= k));
            random[j] += k.min(scores.len()) as f64 / scores.len() as f64;
        }
        pct.push(rank as f64 / scores.len() as f64);
    }
    let n = pct.len() as f64;
    top.iter_mut().chain(random.iter_mut()).for_each(|v| *v /= n);
    let mean = pct.iter().sum::<f64>() / n;
    pct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if pct.len() % 2 == 1 { pct[pct.len() / 2] } else { (pct[pct.len() / 2 - 1] + pct[pct.len() / 2]) / 2.0 };
    (top, random, mean, median)
}

/// An app whose state `i` is `button_state("s{i}", buttons[i])`. Each edge
/// `(from, button, to)` wires a touch; unwired buttons self-loop.
pub fn button_app(
    id: &str,
    buttons: &[usize],
    edges: &[(usize, usize, usize)],
    prefs: &[(usize, usize, f64)],
    targets: &[usize],
) -> SimApp {
    use mimic_core::sim::{PrefSpec, SimAppSpec, TransitionSpec};
    let name = |i: usize| format!("s{i:02}");
    let spec = SimAppSpec {
        app_id: id.into(),
        screen: SCREEN,
        initial: name(0),
        states: buttons.iter().enumerate().map(|(i, &b)| (name(i), button_state(&name(i), b))).collect(),
        transitions: edges
            .iter()
            .map(|&(f, b, t)| TransitionSpec { from: name(f), element: format!("b{b}"), kind: ActionType::Touch, to: name(t) })
            .collect(),
        prefs: prefs
            .iter()
            .map(|&(s, b, w)| PrefSpec { state: name(s), element: format!("b{b}"), kind: ActionType::Touch, w })
            .collect(),
        targets: targets.iter().map(|&t| name(t)).collect(),
    };
    SimApp::new(spec).unwrap()
}

// ------------------------------------------------------ model fixtures

pub fn screen(variant: i32) -> UiState {
    let root = UiElement::new("root", Rect::new(0, 0, 360, 640))
        .child(UiElement::new("title", Rect::new(20, 20, 200 + variant * 20, 60)).text(format!("s{variant}")))
        .child(UiElement::new("list", Rect::new(0, 100, 360, 420)).scrollable())
        .child(UiElement::new("ok", Rect::new(40 + variant * 30, 520, 200 + variant * 30, 600)).clickable())
        .child(UiElement::new("field", Rect::new(20, 440, 340, 500)).editable());
    UiState::new(root, ScreenSize::new(360, 640)).unwrap()
}

pub fn sequence() -> (Vec<UiState>, Vec<Action>) {
    let states: Vec<UiState> = (0..4).map(screen).collect();
    let actions = states.iter().enumerate().map(|(i, s)| mimic_core::ui::enumerate_actions(s)[i % 3].clone()).collect();
    (states, actions)
}

pub fn small_config() -> mimic_core::model::ModelConfig {
    mimic_core::model::ModelConfig {
        dims: Dims::new(12, 20),
        conv_channels: [3, 4, 4, 5, 5],
        reduce_channels: [3, 4, 4],
        decoder_channels: [4, 3, 3, 3],
        seed: 5,
        ..mimic_core::model::ModelConfig::default()
    }
}

/// Moves zero-initialized biases off the ReLU kink at blank pixels.
pub fn jitter_biases(model: &mut mimic_core::model::InteractionModel<f64>) {
    let mut rng = rng(11);
    for p in model.params.params_mut() {
        if p.name.ends_with(".bias") {
            p.value.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.2..0.2));
        }
    }
}
