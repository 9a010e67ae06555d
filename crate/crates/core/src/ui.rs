//! UI states, elements, gestures, and the actions a state admits.
//!
//! A [`UiState`] is an immutable snapshot of a screen. Its identity is the
//! [`Fingerprint`], a structural hash that quantizes bounds to a 10 px grid so
//! that small rendering jitter does not split one logical screen into many.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Grid used when hashing element bounds.
pub const FINGERPRINT_GRID_PX: i32 = 10;

/// Text attached to `input_text` actions when no other text is configured.
pub const DEFAULT_TEXT_PLACEHOLDER: &str = "hello";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        let dx = f64::from(other.x - self.x);
        let dy = f64::from(other.y - self.y);
        dx.hypot(dy)
    }
}

/// Screen-pixel rectangle, half-open: `left <= x < right`, `top <= y < bottom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Rect {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl From<[i32; 4]> for Rect {
    fn from([left, top, right, bottom]: [i32; 4]) -> Self {
        Rect {
            left,
            top,
            right,
            bottom,
        }
    }
}

impl From<Rect> for [i32; 4] {
    fn from(r: Rect) -> Self {
        [r.left, r.top, r.right, r.bottom]
    }
}

impl Rect {
    pub const fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Rect {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    pub fn area(&self) -> i64 {
        i64::from(self.width()) * i64::from(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.left + (self.right - self.left) / 2,
            self.top + (self.bottom - self.top) / 2,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.left && p.x < self.right && p.y >= self.top && p.y < self.bottom
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.left >= self.left
            && other.top >= self.top
            && other.right <= self.right
            && other.bottom <= self.bottom
    }

    fn is_well_formed(&self) -> bool {
        self.left < self.right && self.top < self.bottom
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreenSize {
    pub w: u32,
    pub h: u32,
}

impl ScreenSize {
    pub const fn new(w: u32, h: u32) -> Self {
        ScreenSize { w, h }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(0, 0, self.w as i32, self.h as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    pub id: String,
    pub bounds: Rect,
    #[serde(default)]
    pub is_text: bool,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub clickable: bool,
    #[serde(default)]
    pub long_clickable: bool,
    #[serde(default)]
    pub scrollable: bool,
    #[serde(default)]
    pub editable: bool,
    #[serde(default)]
    pub children: Vec<UiElement>,
}

impl UiElement {
    /// A non-interactive container or decoration.
    pub fn new(id: impl Into<String>, bounds: Rect) -> Self {
        UiElement {
            id: id.into(),
            bounds,
            is_text: false,
            text: None,
            clickable: false,
            long_clickable: false,
            scrollable: false,
            editable: false,
            children: Vec::new(),
        }
    }

    pub fn text(mut self, content: impl Into<String>) -> Self {
        self.is_text = true;
        self.text = Some(content.into());
        self
    }

    pub fn clickable(mut self) -> Self {
        self.clickable = true;
        self
    }

    pub fn long_clickable(mut self) -> Self {
        self.long_clickable = true;
        self
    }

    pub fn scrollable(mut self) -> Self {
        self.scrollable = true;
        self
    }

    pub fn editable(mut self) -> Self {
        self.editable = true;
        self
    }

    pub fn child(mut self, child: UiElement) -> Self {
        self.children.push(child);
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn is_interactive(&self) -> bool {
        self.clickable || self.long_clickable || self.scrollable || self.editable
    }

    /// Action kinds this element supports, in canonical order.
    pub fn supported_kinds(&self) -> impl Iterator<Item = ActionType> + '_ {
        ActionType::ALL.into_iter().filter(|k| match k {
            ActionType::Touch => self.clickable,
            ActionType::LongTouch => self.long_clickable,
            ActionType::SwipeUp
            | ActionType::SwipeDown
            | ActionType::SwipeLeft
            | ActionType::SwipeRight => self.scrollable,
            ActionType::InputText => self.editable,
        })
    }

    /// Pre-order traversal of this subtree.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a UiElement>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a UiElement;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// Opaque, architecture-independent state identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Fingerprint(pub u64);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl From<Fingerprint> for String {
    fn from(fp: Fingerprint) -> Self {
        fp.to_string()
    }
}

impl TryFrom<String> for Fingerprint {
    type Error = std::num::ParseIntError;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl std::str::FromStr for Fingerprint {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(Fingerprint)
    }
}

#[derive(Serialize, Deserialize)]
struct UiStateJson {
    screen: ScreenSize,
    root: UiElement,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "UiStateJson", into = "UiStateJson")]
pub struct UiState {
    tree: UiElement,
    screen: ScreenSize,
    fingerprint: Fingerprint,
}

impl PartialEq for UiState {
    fn eq(&self, other: &Self) -> bool {
        self.screen == other.screen && self.tree == other.tree
    }
}

impl TryFrom<UiStateJson> for UiState {
    type Error = Error;

    fn try_from(raw: UiStateJson) -> Result<Self> {
        UiState::new(raw.root, raw.screen)
    }
}

impl From<UiState> for UiStateJson {
    fn from(s: UiState) -> Self {
        UiStateJson {
            screen: s.screen,
            root: s.tree,
        }
    }
}

impl UiState {
    /// Validates the tree against the screen and computes the fingerprint.
    pub fn new(tree: UiElement, screen: ScreenSize) -> Result<Self> {
        if screen.w == 0 || screen.h == 0 {
            return Err(Error::InvalidState("screen dimensions must be positive".into()));
        }
        validate_tree(&tree, screen)?;
        let fingerprint = fingerprint_tree(&tree, screen);
        Ok(UiState {
            tree,
            screen,
            fingerprint,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ui state serializes")
    }

    pub fn root(&self) -> &UiElement {
        &self.tree
    }

    pub fn screen(&self) -> ScreenSize {
        self.screen
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn elements(&self) -> Preorder<'_> {
        self.tree.preorder()
    }

    pub fn element(&self, id: &str) -> Option<&UiElement> {
        self.elements().find(|e| e.id == id)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &UiElement> {
        self.elements().filter(|e| e.is_leaf())
    }
}

fn validate_tree(root: &UiElement, screen: ScreenSize) -> Result<()> {
    let screen_rect = screen.rect();
    let mut ids = HashSet::new();
    let mut stack: Vec<(&UiElement, Option<&UiElement>)> = vec![(root, None)];
    while let Some((el, parent)) = stack.pop() {
        if !el.bounds.is_well_formed() {
            return Err(Error::InvalidState(format!(
                "element `{}` has degenerate bounds {:?}",
                el.id, el.bounds
            )));
        }
        if !screen_rect.contains_rect(&el.bounds) {
            return Err(Error::InvalidState(format!(
                "element `{}` bounds {:?} exceed screen {}x{}",
                el.id, el.bounds, screen.w, screen.h
            )));
        }
        if let Some(p) = parent {
            if !p.bounds.contains_rect(&el.bounds) {
                return Err(Error::InvalidState(format!(
                    "element `{}` escapes parent `{}`",
                    el.id, p.id
                )));
            }
        }
        if !ids.insert(el.id.as_str()) {
            return Err(Error::InvalidState(format!("duplicate element id `{}`", el.id)));
        }
        stack.extend(el.children.iter().map(|c| (c, Some(el))));
    }
    Ok(())
}

fn quantize(v: i32) -> i32 {
    (v + FINGERPRINT_GRID_PX / 2).div_euclid(FINGERPRINT_GRID_PX)
}

fn fingerprint_tree(root: &UiElement, screen: ScreenSize) -> Fingerprint {
    let mut hasher = Sha256::new();
    hasher.update(screen.w.to_le_bytes());
    hasher.update(screen.h.to_le_bytes());
    for el in root.preorder() {
        let flags = u8::from(el.is_text)
            | u8::from(el.clickable) << 1
            | u8::from(el.long_clickable) << 2
            | u8::from(el.scrollable) << 3
            | u8::from(el.editable) << 4;
        hasher.update([flags]);
        hasher.update((el.children.len() as u32).to_le_bytes());
        for v in [el.bounds.left, el.bounds.top, el.bounds.right, el.bounds.bottom] {
            hasher.update(quantize(v).to_le_bytes());
        }
        match &el.text {
            Some(t) => {
                hasher.update([1]);
                hasher.update((t.len() as u32).to_le_bytes());
                hasher.update(t.as_bytes());
            }
            None => hasher.update([0]),
        }
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    Fingerprint(u64::from_le_bytes(head))
}

/// The seven gesture kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Touch,
    LongTouch,
    SwipeUp,
    SwipeDown,
    SwipeLeft,
    SwipeRight,
    InputText,
}

impl ActionType {
    pub const COUNT: usize = 7;

    pub const ALL: [ActionType; 7] = [
        ActionType::Touch,
        ActionType::LongTouch,
        ActionType::SwipeUp,
        ActionType::SwipeDown,
        ActionType::SwipeLeft,
        ActionType::SwipeRight,
        ActionType::InputText,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 7] {
        let mut v = [0.0; 7];
        v[self.index()] = 1.0;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionType::Touch => "touch",
            ActionType::LongTouch => "long_touch",
            ActionType::SwipeUp => "swipe_up",
            ActionType::SwipeDown => "swipe_down",
            ActionType::SwipeLeft => "swipe_left",
            ActionType::SwipeRight => "swipe_right",
            ActionType::InputText => "input_text",
        }
    }

    pub fn is_swipe(self) -> bool {
        matches!(
            self,
            ActionType::SwipeUp | ActionType::SwipeDown | ActionType::SwipeLeft | ActionType::SwipeRight
        )
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ActionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActionType::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidAction(format!("unknown action kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionType,
    #[serde(rename = "element")]
    pub target_element: String,
    pub x: i32,
    pub y: i32,
    #[serde(default, rename = "text", skip_serializing_if = "Option::is_none")]
    pub text_payload: Option<String>,
}

impl Action {
    /// An action on `element` at its center.
    pub fn on(element: &UiElement, kind: ActionType, text: &str) -> Self {
        let c = element.bounds.center();
        Action {
            kind,
            target_element: element.id.clone(),
            x: c.x,
            y: c.y,
            text_payload: (kind == ActionType::InputText).then(|| text.to_string()),
        }
    }

    pub fn location(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Same gesture on the same element at the same spot, ignoring text.
    pub fn same_target(&self, other: &Action) -> bool {
        self.kind == other.kind
            && self.target_element == other.target_element
            && self.x == other.x
            && self.y == other.y
    }

    pub fn validate(&self, state: &UiState) -> Result<()> {
        let el = state.element(&self.target_element).ok_or_else(|| {
            Error::InvalidAction(format!("unknown element `{}`", self.target_element))
        })?;
        if !el.bounds.contains(self.location()) {
            return Err(Error::InvalidAction(format!(
                "location ({}, {}) outside `{}`",
                self.x, self.y, el.id
            )));
        }
        if self.text_payload.is_some() != (self.kind == ActionType::InputText) {
            return Err(Error::InvalidAction(
                "text payload must be present exactly for input_text".into(),
            ));
        }
        Ok(())
    }
}

/// All actions the state admits, in pre-order with kinds in canonical order.
pub fn enumerate_actions(state: &UiState) -> Vec<Action> {
    enumerate_actions_with_text(state, DEFAULT_TEXT_PLACEHOLDER)
}

pub fn enumerate_actions_with_text(state: &UiState, text: &str) -> Vec<Action> {
    state
        .elements()
        .flat_map(|el| el.supported_kinds().map(move |k| Action::on(el, k, text)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionFlow {
    pub app_id: String,
    pub states: Vec<UiState>,
    pub actions: Vec<Action>,
}

impl InteractionFlow {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.actions.len() {
            return Err(Error::InvalidAction(format!(
                "flow `{}` has {} states but {} actions",
                self.app_id,
                self.states.len(),
                self.actions.len()
            )));
        }
        for (i, (s, a)) in self.states.iter().zip(&self.actions).enumerate() {
            if !enumerate_actions(s).iter().any(|e| e.same_target(a)) {
                return Err(Error::InvalidAction(format!(
                    "flow `{}` step {i}: {} on `{}` is not enumerable",
                    self.app_id, a.kind, a.target_element
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn screen() -> ScreenSize {
        ScreenSize::new(360, 640)
    }

    fn button_state(dx: i32, clickable: bool) -> UiState {
        let mut b = UiElement::new("b", Rect::new(100 + dx, 200, 200, 260));
        b.clickable = clickable;
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640)).child(b);
        UiState::new(root, screen()).unwrap()
    }

    #[test]
    fn small_jitter_keeps_fingerprint() {
        assert_eq!(button_state(0, true).fingerprint(), button_state(3, true).fingerprint());
        assert_eq!(button_state(0, true).fingerprint(), button_state(-3, true).fingerprint());
    }

    #[test]
    fn flag_toggle_changes_fingerprint() {
        assert_ne!(button_state(0, true).fingerprint(), button_state(0, false).fingerprint());
    }

    #[test]
    fn fingerprint_is_stable_value() {
        // Pinned so that any change to the hashing layout is noticed.
        let fp = button_state(0, true).fingerprint();
        let again = button_state(0, true).fingerprint();
        assert_eq!(fp, again);
        assert_eq!(fp.to_string().len(), 16);
        assert_eq!(fp.to_string().parse::<Fingerprint>().unwrap(), fp);
    }

    #[test]
    fn clickable_long_clickable_button() {
        let b = UiElement::new("ok", Rect::new(10, 10, 110, 60)).clickable().long_clickable();
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640)).child(b);
        let s = UiState::new(root, screen()).unwrap();
        let kinds: Vec<_> = enumerate_actions(&s).iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![ActionType::Touch, ActionType::LongTouch]);
        assert!(enumerate_actions(&s).iter().all(|a| a.target_element == "ok"));
    }

    #[test]
    fn list_and_field() {
        let list = UiElement::new("list", Rect::new(0, 100, 360, 500)).scrollable();
        let field = UiElement::new("f", Rect::new(20, 520, 340, 580)).editable();
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640)).child(list).child(field);
        let s = UiState::new(root, screen()).unwrap();
        let acts = enumerate_actions(&s);
        assert_eq!(acts.len(), 5);
        assert_eq!(acts.iter().filter(|a| a.kind.is_swipe()).count(), 4);
        assert_eq!(acts[4].kind, ActionType::InputText);
        assert_eq!(acts[4].text_payload.as_deref(), Some(DEFAULT_TEXT_PLACEHOLDER));
        for a in &acts {
            a.validate(&s).unwrap();
        }
    }

    #[test]
    fn no_interactive_elements() {
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("t", Rect::new(0, 0, 100, 20)).text("title"));
        let s = UiState::new(root, screen()).unwrap();
        assert!(enumerate_actions(&s).is_empty());
    }

    #[test]
    fn rejects_invalid_trees() {
        let out = UiElement::new("root", Rect::new(0, 0, 400, 640));
        assert!(UiState::new(out, screen()).is_err());

        let degenerate = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("x", Rect::new(5, 5, 5, 9)));
        assert!(UiState::new(degenerate, screen()).is_err());

        let escaping = UiElement::new("root", Rect::new(0, 0, 360, 640)).child(
            UiElement::new("p", Rect::new(0, 0, 100, 100))
                .child(UiElement::new("c", Rect::new(50, 50, 150, 90))),
        );
        assert!(UiState::new(escaping, screen()).is_err());

        let dup = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("a", Rect::new(0, 0, 10, 10)))
            .child(UiElement::new("a", Rect::new(10, 0, 20, 10)));
        assert!(UiState::new(dup, screen()).is_err());
    }

    #[test]
    fn json_shape() {
        let text = r#"{"screen":{"w":360,"h":640},"root":{"id":"root","bounds":[0,0,360,640],
            "is_text":false,"text":null,"clickable":false,"long_clickable":false,
            "scrollable":false,"editable":false,"children":[{"id":"t","bounds":[0,0,100,20],
            "is_text":true,"text":"Hi","clickable":true,"long_clickable":false,
            "scrollable":false,"editable":false,"children":[]}]}}"#;
        let s = UiState::from_json(text).unwrap();
        assert_eq!(s.root().children[0].text.as_deref(), Some("Hi"));
        let back = UiState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.fingerprint(), s.fingerprint());
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["root"]["bounds"], serde_json::json!([0, 0, 360, 640]));
    }

    #[test]
    fn action_kind_names_round_trip() {
        for k in ActionType::ALL {
            assert_eq!(k.name().parse::<ActionType>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }
}
