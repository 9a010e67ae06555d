//! Rasterization of UI states and actions into the model's input planes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::NdArray;
use crate::ui::{Action, Rect, ScreenSize, UiState};

/// Raster size, width by height.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub w: usize,
    pub h: usize,
}

impl Dims {
    pub const REFERENCE: Dims = Dims { w: 180, h: 320 };
    pub const DESK: Dims = Dims { w: 45, h: 80 };

    pub const fn new(w: usize, h: usize) -> Self {
        Dims { w, h }
    }

    pub fn pixels(&self) -> usize {
        self.w * self.h
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.w, self.h)
    }
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("dims `{s}` must look like WxH")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("bad dimension `{v}` in `{s}`")))
        };
        Ok(Dims::new(parse(w)?, parse(h)?))
    }
}

/// Half-open pixel window `x0..x1`, `y0..y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl PixelBox {
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }
}

/// Pixel index range whose centers fall inside `[lo, hi)` along one axis,
/// computed exactly in integers: center of pixel `p` sits at
/// `(2p + 1) * screen / (2 * n)`.
fn axis_span(lo: i32, hi: i32, screen: u32, n: usize) -> (usize, usize) {
    let (s, n2) = (i64::from(screen), 2 * n as i64);
    let inside = |p: i64| {
        let c = (2 * p + 1) * s;
        c >= n2 * i64::from(lo) && c < n2 * i64::from(hi)
    };
    let first = (0..n as i64).find(|&p| inside(p));
    match first {
        Some(a) => {
            let b = (a..n as i64).take_while(|&p| inside(p)).last().unwrap_or(a);
            (a as usize, b as usize + 1)
        }
        None => {
            // No center inside: the single pixel nearest to the span's middle.
            let mid = (i64::from(lo) + i64::from(hi)) * n as i64 / (2 * s);
            let p = mid.clamp(0, n as i64 - 1) as usize;
            (p, p + 1)
        }
    }
}

/// Pixels covered by a screen rectangle at raster size `dims`.
pub fn scaled_box(bounds: &Rect, screen: ScreenSize, dims: Dims) -> Result<PixelBox> {
    if !screen.rect().contains_rect(bounds) {
        return Err(Error::InvalidState(format!(
            "bounds {bounds:?} outside the {}x{} screen",
            screen.w, screen.h
        )));
    }
    let (x0, x1) = axis_span(bounds.left, bounds.right, screen.w, dims.w);
    let (y0, y1) = axis_span(bounds.top, bounds.bottom, screen.h, dims.h);
    Ok(PixelBox { x0, x1, y0, y1 })
}

/// Two planes, `(2, h, w)`: text elements then non-text elements.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonImage {
    pub dims: Dims,
    pub data: Vec<f32>,
}

impl SkeletonImage {
    pub fn at(&self, channel: usize, x: usize, y: usize) -> f32 {
        self.data[(channel * self.dims.h + y) * self.dims.w + x]
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        let n = self.dims.pixels();
        &self.data[channel * n..(channel + 1) * n]
    }
}

pub fn render_skeleton(state: &UiState, dims: Dims) -> SkeletonImage {
    let mut data = vec![0.0f32; 2 * dims.pixels()];
    // The root is the window itself and is never drawn.
    for el in state.root().children.iter().flat_map(|c| c.preorder()).filter(|e| e.is_leaf()) {
        let channel = if el.is_text { 0 } else { 1 };
        let b = scaled_box(&el.bounds, state.screen(), dims).expect("validated state");
        for (x, y) in b.pixels() {
            data[(channel * dims.h + y) * dims.w + x] = 1.0;
        }
    }
    SkeletonImage { dims, data }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LabelConfig {
    /// Gaussian variance in px² at the reference raster size.
    pub variance: f64,
    pub reference: Dims,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            variance: 20.0,
            reference: Dims::REFERENCE,
        }
    }
}

impl LabelConfig {
    /// Variance in px² at raster size `dims`.
    pub fn variance_at(&self, dims: Dims) -> f64 {
        let sx = dims.w as f64 / self.reference.w as f64;
        let sy = dims.h as f64 / self.reference.h as f64;
        self.variance * sx * sy
    }
}

/// A single plane, `(h, w)`, of non-negative values.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionHeatmap {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl ActionHeatmap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.dims.w + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// The pixel that contains a screen point.
pub fn target_pixel(x: i32, y: i32, screen: ScreenSize, dims: Dims) -> (usize, usize) {
    let px = (i64::from(x) * dims.w as i64).div_euclid(i64::from(screen.w));
    let py = (i64::from(y) * dims.h as i64).div_euclid(i64::from(screen.h));
    (
        px.clamp(0, dims.w as i64 - 1) as usize,
        py.clamp(0, dims.h as i64 - 1) as usize,
    )
}

/// Isotropic Gaussian around the action's target pixel, normalized to sum 1.
pub fn render_gaussian_label(action: &Action, screen: ScreenSize, dims: Dims, cfg: &LabelConfig) -> ActionHeatmap {
    let (cx, cy) = target_pixel(action.x, action.y, screen, dims);
    let var = cfg.variance_at(dims);
    let mut data = Vec::with_capacity(dims.pixels());
    for y in 0..dims.h {
        for x in 0..dims.w {
            let dx = x as f64 - cx as f64;
            let dy = y as f64 - cy as f64;
            data.push((-(dx * dx + dy * dy) / (2.0 * var)).exp());
        }
    }
    let z: f64 = data.iter().sum();
    data.iter_mut().for_each(|v| *v /= z);
    ActionHeatmap { dims, data }
}

/// The current state plus up to three preceding (state, action) pairs,
/// most recent last.
#[derive(Clone, Debug)]
pub struct UiContext<'a> {
    pub current: &'a UiState,
    pub history: Vec<(&'a UiState, &'a Action)>,
}

pub const HISTORY_LEN: usize = 3;
pub const FRAMES: usize = HISTORY_LEN + 1;
pub const FRAME_CHANNELS: usize = 3;

impl<'a> UiContext<'a> {
    pub fn new(current: &'a UiState, history: Vec<(&'a UiState, &'a Action)>) -> Result<Self> {
        if history.len() > HISTORY_LEN {
            return Err(Error::Config(format!(
                "context history holds at most {HISTORY_LEN} transitions, got {}",
                history.len()
            )));
        }
        Ok(UiContext { current, history })
    }

    /// Context for step `i` of a recorded sequence.
    pub fn at_step(states: &'a [UiState], actions: &'a [Action], i: usize) -> Self {
        let start = i.saturating_sub(HISTORY_LEN);
        UiContext {
            current: &states[i],
            history: (start..i).map(|j| (&states[j], &actions[j])).collect(),
        }
    }
}

/// `(frames, h, w, 3)` stack: padded history oldest first, then the current state.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextTensor {
    pub dims: Dims,
    array: NdArray<f32>,
}

impl ContextTensor {
    pub fn shape(&self) -> &[usize] {
        self.array.shape()
    }

    pub fn array(&self) -> &NdArray<f32> {
        &self.array
    }

    pub fn get(&self, frame: usize, y: usize, x: usize, c: usize) -> f32 {
        self.array.data()[((frame * self.dims.h + y) * self.dims.w + x) * FRAME_CHANNELS + c]
    }

    /// One frame in channel-major `(3, h, w)` layout.
    pub fn frame_chw<T: crate::nn::Scalar>(&self, frame: usize) -> NdArray<T> {
        let (h, w) = (self.dims.h, self.dims.w);
        let mut out = NdArray::zeros(&[FRAME_CHANNELS, h, w]);
        for y in 0..h {
            for x in 0..w {
                for c in 0..FRAME_CHANNELS {
                    out.data_mut()[(c * h + y) * w + x] = T::of(f64::from(self.get(frame, y, x, c)));
                }
            }
        }
        out
    }
}

pub fn encode_context(ctx: &UiContext<'_>, dims: Dims, labels: &LabelConfig) -> ContextTensor {
    let (h, w) = (dims.h, dims.w);
    let mut data = vec![0.0f32; FRAMES * h * w * FRAME_CHANNELS];
    let pad = HISTORY_LEN - ctx.history.len();
    let put_skeleton = |frame: usize, sk: &SkeletonImage, data: &mut Vec<f32>| {
        for y in 0..h {
            for x in 0..w {
                let base = ((frame * h + y) * w + x) * FRAME_CHANNELS;
                data[base] = sk.at(0, x, y);
                data[base + 1] = sk.at(1, x, y);
            }
        }
    };
    for (k, (state, action)) in ctx.history.iter().enumerate() {
        let frame = pad + k;
        put_skeleton(frame, &render_skeleton(state, dims), &mut data);
        let heat = render_gaussian_label(action, state.screen(), dims, labels);
        for y in 0..h {
            for x in 0..w {
                data[((frame * h + y) * w + x) * FRAME_CHANNELS + 2] = heat.at(x, y) as f32;
            }
        }
    }
    put_skeleton(HISTORY_LEN, &render_skeleton(ctx.current, dims), &mut data);
    ContextTensor {
        dims,
        array: NdArray::from_vec(&[FRAMES, h, w, FRAME_CHANNELS], data).expect("sized"),
    }
}

/// Binary PGM of one plane scaled to its maximum, for eyeballing.
pub fn plane_to_pgm(plane: &[f64], dims: Dims) -> Vec<u8> {
    let max = plane.iter().copied().fold(0.0f64, f64::max);
    let mut out = format!("P5\n{} {}\n255\n", dims.w, dims.h).into_bytes();
    out.extend(plane.iter().map(|&v| if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ui::{ActionType, UiElement};

    fn screen() -> ScreenSize {
        ScreenSize::new(360, 640)
    }

    #[test]
    fn full_screen_text() {
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("all", Rect::new(0, 0, 360, 640)).text("all"));
        let s = UiState::new(root, screen()).unwrap();
        let sk = render_skeleton(&s, Dims::DESK);
        assert!(sk.channel(0).iter().all(|&v| v == 1.0));
        assert!(sk.channel(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_tree_is_blank() {
        let s = UiState::new(UiElement::new("root", Rect::new(0, 0, 360, 640)), screen()).unwrap();
        let sk = render_skeleton(&s, Dims::DESK);
        assert!(sk.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tiny_element_marks_nearest_pixel() {
        let root = UiElement::new("root", Rect::new(0, 0, 360, 640))
            .child(UiElement::new("dot", Rect::new(0, 0, 1, 1)).text("."));
        let s = UiState::new(root, screen()).unwrap();
        let sk = render_skeleton(&s, Dims::DESK);
        assert_eq!(sk.channel(0).iter().sum::<f32>(), 1.0);
        assert_eq!(sk.at(0, 0, 0), 1.0);
    }

    #[test]
    fn gaussian_label_properties() {
        let cfg = LabelConfig::default();
        let a = Action {
            kind: ActionType::Touch,
            target_element: "b".into(),
            x: 180,
            y: 320,
            text_payload: None,
        };
        let hm = render_gaussian_label(&a, screen(), Dims::DESK, &cfg);
        assert!((hm.sum() - 1.0).abs() < 1e-9);
        let (cx, cy) = target_pixel(180, 320, screen(), Dims::DESK);
        let peak = hm.at(cx, cy);
        assert!(hm.data.iter().all(|&v| v <= peak));
        assert_eq!(hm.data.iter().filter(|&&v| v == peak).count(), 1);
        assert_eq!(hm.at(cx + 2, cy), hm.at(cx, cy + 2));
        assert_eq!(hm.at(cx - 1, cy - 1), hm.at(cx + 1, cy + 1));
        assert!((cfg.variance_at(Dims::DESK) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn dims_parse() {
        assert_eq!("45x80".parse::<Dims>().unwrap(), Dims::DESK);
        assert!("45".parse::<Dims>().is_err());
        assert!("0x80".parse::<Dims>().is_err());
    }

    #[test]
    fn scaled_box_rejects_out_of_screen() {
        assert!(scaled_box(&Rect::new(0, 0, 400, 10), screen(), Dims::DESK).is_err());
    }
}
