//! The interaction model: network, loss, action scoring, training,
//! evaluation, and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod network;
pub mod train;

use crate::error::{Error, Result};
use crate::nn::ops::softmax_cross_entropy;
use crate::nn::{NdArray, ParamStore, Scalar};
use crate::raster::{encode_context, render_gaussian_label, scaled_box, ContextTensor, Dims, UiContext};
use crate::ui::{Action, ActionType, UiState};

pub use checkpoint::Checkpoint;
pub use config::ModelConfig;
pub use eval::{evaluate, EvalReport, ScoredState};
pub use network::{Architecture, ForwardCache};
pub use train::{train, TrainOptions, TrainReport};

/// `p_type(t | context)` indexed by [`ActionType::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDistribution(pub [f64; ActionType::COUNT]);

impl TypeDistribution {
    pub fn get(&self, kind: ActionType) -> f64 {
        self.0[kind.index()]
    }
}

/// `p_loc(x, y | context)` over the raster grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationHeatmap {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl LocationHeatmap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.dims.w + x]
    }

    pub fn uniform(dims: Dims) -> Self {
        LocationHeatmap {
            dims,
            data: vec![1.0 / dims.pixels() as f64; dims.pixels()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub types: TypeDistribution,
    pub location: LocationHeatmap,
}

/// Softmax in double precision regardless of the network's scalar type.
fn softmax_f64<T: Scalar>(logits: &NdArray<T>) -> Vec<f64> {
    let v: Vec<f64> = logits.data().iter().map(|x| x.as_f64()).collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Network architecture plus its weights.
#[derive(Clone, Debug)]
pub struct InteractionModel<T> {
    pub arch: Architecture,
    pub params: ParamStore<T>,
}

/// Training target for one context.
#[derive(Clone, Debug)]
pub struct Target<T> {
    pub kind: ActionType,
    pub location: NdArray<T>,
}

impl<T: Scalar> Target<T> {
    pub fn new(action: &Action, state: &UiState, cfg: &ModelConfig) -> Self {
        let hm = render_gaussian_label(action, state.screen(), cfg.dims, &cfg.labels);
        let data = hm.data.iter().map(|&v| T::of(v)).collect();
        Target {
            kind: action.kind,
            location: NdArray::from_vec(&[1, cfg.dims.h, cfg.dims.w], data).expect("sized"),
        }
    }
}

impl<T: Scalar> InteractionModel<T> {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let mut params = ParamStore::new();
        let arch = Architecture::build(cfg, &mut params)?;
        Ok(InteractionModel { arch, params })
    }

    pub fn config(&self) -> &ModelConfig {
        self.arch.config()
    }

    pub fn dims(&self) -> Dims {
        self.config().dims
    }

    pub fn encode(&self, ctx: &UiContext<'_>) -> ContextTensor {
        encode_context(ctx, self.dims(), &self.config().labels)
    }

    pub fn forward(&self, ctx: &ContextTensor) -> Result<Prediction> {
        let cache = self.arch.forward(&self.params, ctx)?;
        Ok(prediction_from(&cache, self.dims()))
    }

    pub fn predict(&self, ctx: &UiContext<'_>) -> Result<Prediction> {
        self.forward(&self.encode(ctx))
    }

    /// Loss of one sample with its parameter gradients added to `grads`.
    pub fn loss_and_grad(&self, ctx: &ContextTensor, target: &Target<T>, grads: &mut [NdArray<T>]) -> Result<T> {
        let cache = self.arch.forward(&self.params, ctx)?;
        let mut onehot = NdArray::zeros(&[ActionType::COUNT]);
        onehot.data_mut()[target.kind.index()] = T::one();
        let (type_loss, _, g_type) = softmax_cross_entropy(&cache.type_logits, &onehot)?;
        let (loc_loss, _, g_loc) = softmax_cross_entropy(&cache.loc_logits, &target.location)?;
        self.arch.backward(&self.params, &cache, &g_type, &g_loc, grads)?;
        Ok(type_loss + loc_loss)
    }

    /// Loss only, plus the branch signature of the evaluation.
    pub fn loss_probe(&self, params: &ParamStore<T>, ctx: &ContextTensor, target: &Target<T>) -> Result<(T, u64)> {
        let cache = self.arch.forward(params, ctx)?;
        let mut onehot = NdArray::zeros(&[ActionType::COUNT]);
        onehot.data_mut()[target.kind.index()] = T::one();
        let (a, _, _) = softmax_cross_entropy(&cache.type_logits, &onehot)?;
        let (b, _, _) = softmax_cross_entropy(&cache.loc_logits, &target.location)?;
        Ok((a + b, cache.branch_signature()))
    }

    pub fn cast<U: Scalar>(&self) -> InteractionModel<U> {
        InteractionModel {
            arch: self.arch.clone(),
            params: self.params.cast(),
        }
    }
}

pub fn prediction_from<T: Scalar>(cache: &ForwardCache<T>, dims: Dims) -> Prediction {
    let t = softmax_f64(&cache.type_logits);
    let mut types = [0.0; ActionType::COUNT];
    types.copy_from_slice(&t);
    Prediction {
        types: TypeDistribution(types),
        location: LocationHeatmap {
            dims,
            data: softmax_f64(&cache.loc_logits),
        },
    }
}

/// Cross-entropy of a prediction against an observed action: type term
/// against the one-hot kind plus location term against its Gaussian label.
pub fn loss(pred: &Prediction, action: &Action, state: &UiState, cfg: &ModelConfig) -> f64 {
    let type_term = -pred.types.get(action.kind).ln();
    let label = render_gaussian_label(action, state.screen(), pred.location.dims, &cfg.labels);
    let loc_term: f64 = label
        .data
        .iter()
        .zip(&pred.location.data)
        .filter(|(&l, _)| l > 0.0)
        .map(|(&l, &p)| -l * p.ln())
        .sum();
    type_term + loc_term
}

/// `p_type(kind) * sum of p_loc over the element's pixels`, per action.
pub fn score_actions(pred: &Prediction, state: &UiState, actions: &[Action]) -> Result<Vec<f64>> {
    let dims = pred.location.dims;
    actions
        .iter()
        .map(|a| {
            let el = state
                .element(&a.target_element)
                .ok_or_else(|| Error::InvalidAction(format!("unknown element `{}`", a.target_element)))?;
            let b = scaled_box(&el.bounds, state.screen(), dims)?;
            if b.x1 > dims.w || b.y1 > dims.h {
                return Err(Error::shape("score_actions", format!("box {b:?} exceeds heatmap {dims}")));
            }
            let mass: f64 = (b.y0..b.y1)
                .map(|y| pred.location.data[y * dims.w + b.x0..y * dims.w + b.x1].iter().sum::<f64>())
                .sum();
            Ok(pred.types.get(a.kind) * mass)
        })
        .collect()
}

/// Indices of `scores` in descending order; ties keep enumeration order.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}
