//! The interaction network.
//!
//! Every context frame runs through a shared five-stage encoder
//! (conv, ReLU, stride-2 max-pool). At the last three stages a 1x1
//! reduction feeds a per-pixel LSTM that reads the four frames as a
//! sequence; its final hidden state is added back onto the reduced current
//! frame. A transposed-convolution decoder climbs from the deepest level to
//! the input resolution, concatenating the same-resolution feature at every
//! step, and ends in a spatial softmax. The type head is a single fully
//! connected layer over the deepest residual feature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, CONV_STAGES, LSTM_LEVELS};
use crate::nn::ops::{self, conv2d, conv2d_backward, maxpool2, maxpool2_backward, relu, relu_backward};
use crate::nn::{lstm_step, lstm_step_backward, LstmCache, LstmWeights, NdArray, ParamId, ParamStore, Scalar, SignatureHasher};
use crate::raster::{ContextTensor, FRAMES, FRAME_CHANNELS};
use crate::ui::ActionType;

/// First encoder stage that carries an LSTM branch (zero-based).
const FIRST_BRANCH_STAGE: usize = CONV_STAGES - LSTM_LEVELS;

/// Parameter handles and fixed shapes; the weights live in a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Architecture {
    cfg: ModelConfig,
    levels: [(usize, usize); CONV_STAGES + 1],
    conv: [(ParamId, ParamId); CONV_STAGES],
    reduce: [(ParamId, ParamId); LSTM_LEVELS],
    lstm: [(ParamId, ParamId, ParamId); LSTM_LEVELS],
    /// Indexed by the level the stage reads from, `deconv[s]` upsamples
    /// level `s + 1` to level `s`.
    deconv: [(ParamId, ParamId); CONV_STAGES],
    fc: (ParamId, ParamId),
}

struct FrameCache<T> {
    conv_in: Vec<NdArray<T>>,
    pre_relu: Vec<NdArray<T>>,
    argmax: Vec<Vec<usize>>,
    pooled: Vec<NdArray<T>>,
}

struct BranchCache<T> {
    reduce_in: Vec<NdArray<T>>,
    steps: Vec<LstmCache<T>>,
}

struct DecoderCache<T> {
    /// Input of `deconv[s]`.
    inputs: Vec<NdArray<T>>,
    /// `pre_relu[i]` is the cropped pre-activation output of `deconv[i + 1]`.
    pre_relu: Vec<NdArray<T>>,
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache<T> {
    frames: Vec<FrameCache<T>>,
    branches: Vec<BranchCache<T>>,
    residual: Vec<NdArray<T>>,
    decoder: DecoderCache<T>,
    pub type_logits: NdArray<T>,
    pub loc_logits: NdArray<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Hash of every ReLU mask and pooling choice taken.
    pub fn branch_signature(&self) -> u64 {
        let mut h = SignatureHasher::default();
        for f in &self.frames {
            for (pre, idx) in f.pre_relu.iter().zip(&f.argmax) {
                h.write_mask(pre.data());
                h.write_indices(idx);
            }
        }
        for pre in &self.decoder.pre_relu {
            h.write_mask(pre.data());
        }
        h.finish()
    }
}

impl Architecture {
    /// Allocates and initializes all parameters in `store` from `cfg.seed`.
    pub fn build<T: Scalar>(cfg: &ModelConfig, store: &mut ParamStore<T>) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let k = cfg.conv_kernel;
        let c = cfg.conv_channels;
        let r = cfg.reduce_channels;
        let d = cfg.decoder_channels;
        let levels = cfg.level_sizes();

        let conv = std::array::from_fn(|s| {
            let cin = if s == 0 { FRAME_CHANNELS } else { c[s - 1] };
            let w = store.add_uniform(format!("conv{}.weight", s + 1), &[c[s], cin, k, k], cin * k * k, &mut rng);
            let b = store.add_zeros(format!("conv{}.bias", s + 1), &[c[s]]);
            (w, b)
        });
        let reduce = std::array::from_fn(|j| {
            let cin = c[FIRST_BRANCH_STAGE + j];
            let w = store.add_uniform(format!("reduce{}.weight", j + 1), &[r[j], cin, 1, 1], cin, &mut rng);
            let b = store.add_zeros(format!("reduce{}.bias", j + 1), &[r[j]]);
            (w, b)
        });
        let lstm = std::array::from_fn(|j| {
            let hdim = r[j];
            // Glorot-like scale for the gate matrices.
            let wx = store.add_uniform(format!("lstm{}.input_weight", j + 1), &[4 * hdim, hdim], 3 * hdim, &mut rng);
            let wh = store.add_uniform(format!("lstm{}.hidden_weight", j + 1), &[4 * hdim, hdim], 3 * hdim, &mut rng);
            let mut bias = NdArray::zeros(&[4 * hdim]);
            for v in &mut bias.data_mut()[hdim..2 * hdim] {
                *v = T::one();
            }
            let b = store.add(format!("lstm{}.bias", j + 1), bias, false);
            (wx, wh, b)
        });
        let dk = cfg.deconv_kernel;
        // deconv[s] reads level s+1: its input is the upsampled deeper
        // feature (absent at the deepest level) plus the level's own skip.
        let skip_width = |level: usize| {
            if level > FIRST_BRANCH_STAGE {
                r[level - 1 - FIRST_BRANCH_STAGE]
            } else {
                c[level - 1]
            }
        };
        let out_width = |s: usize| if s == 0 { 1 } else { d[CONV_STAGES - 1 - s] };
        let mut deconv_ids = Vec::with_capacity(CONV_STAGES);
        for s in (0..CONV_STAGES).rev() {
            let level = s + 1;
            let up = if level == CONV_STAGES { 0 } else { out_width(level) };
            let cin = up + skip_width(level);
            let cout = out_width(s);
            let fan_in = (cin * dk * dk / 4).max(1);
            let w = store.add_uniform(format!("deconv{}.weight", s + 1), &[cin, cout, dk, dk], fan_in, &mut rng);
            let b = store.add_zeros(format!("deconv{}.bias", s + 1), &[cout]);
            deconv_ids.push((s, (w, b)));
        }
        deconv_ids.sort_by_key(|(s, _)| *s);
        let deconv = std::array::from_fn(|s| deconv_ids[s].1);

        let (h5, w5) = levels[CONV_STAGES];
        let flat = r[LSTM_LEVELS - 1] * h5 * w5;
        let fc_w = store.add_uniform("type_head.weight", &[ActionType::COUNT, flat], flat, &mut rng);
        let fc_b = store.add_zeros("type_head.bias", &[ActionType::COUNT]);

        Ok(Architecture {
            cfg: cfg.clone(),
            levels,
            conv,
            reduce,
            lstm,
            deconv,
            fc: (fc_w, fc_b),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn check_input(&self, ctx: &ContextTensor) -> Result<()> {
        let (h, w) = self.levels[0];
        if ctx.shape() != [FRAMES, h, w, FRAME_CHANNELS] {
            return Err(Error::shape(
                "model input",
                format!("context {:?} vs model {:?}", ctx.shape(), [FRAMES, h, w, FRAME_CHANNELS]),
            ));
        }
        Ok(())
    }

    /// Skip feature concatenated at level `level` (1-based pooling level).
    fn skip<'c, T: Scalar>(&self, level: usize, frames: &'c [FrameCache<T>], residual: &'c [NdArray<T>]) -> &'c NdArray<T> {
        if level > FIRST_BRANCH_STAGE {
            &residual[level - 1 - FIRST_BRANCH_STAGE]
        } else {
            &frames[FRAMES - 1].pooled[level - 1]
        }
    }

    pub fn forward<T: Scalar>(&self, store: &ParamStore<T>, ctx: &ContextTensor) -> Result<ForwardCache<T>> {
        self.check_input(ctx)?;

        let mut frames = Vec::with_capacity(FRAMES);
        for f in 0..FRAMES {
            let mut x = ctx.frame_chw::<T>(f);
            let mut fc = FrameCache {
                conv_in: Vec::with_capacity(CONV_STAGES),
                pre_relu: Vec::with_capacity(CONV_STAGES),
                argmax: Vec::with_capacity(CONV_STAGES),
                pooled: Vec::with_capacity(CONV_STAGES),
            };
            for &(w, b) in &self.conv {
                let pre = conv2d(&x, store.value(w), store.value(b))?;
                let (pooled, idx) = maxpool2(&relu(&pre))?;
                fc.conv_in.push(x);
                fc.pre_relu.push(pre);
                fc.argmax.push(idx);
                x = pooled.clone();
                fc.pooled.push(pooled);
            }
            frames.push(fc);
        }

        let mut branches = Vec::with_capacity(LSTM_LEVELS);
        let mut residual = Vec::with_capacity(LSTM_LEVELS);
        for j in 0..LSTM_LEVELS {
            let stage = FIRST_BRANCH_STAGE + j;
            let (h, w) = self.levels[stage + 1];
            let (rw, rb) = self.reduce[j];
            let (wx, wh, lb) = self.lstm[j];
            let weights = LstmWeights {
                input_weight: store.value(wx),
                hidden_weight: store.value(wh),
                bias: store.value(lb),
            };
            let hdim = self.cfg.reduce_channels[j];
            let mut hs = NdArray::zeros(&[h * w, hdim]);
            let mut cs = NdArray::zeros(&[h * w, hdim]);
            let mut bc = BranchCache {
                reduce_in: Vec::with_capacity(FRAMES),
                steps: Vec::with_capacity(FRAMES),
            };
            let mut last_rows = None;
            for frame in &frames {
                let reduced = conv2d(&frame.pooled[stage], store.value(rw), store.value(rb))?;
                let rows = ops::pixels_as_rows(&reduced)?;
                let (h2, c2, cache) = lstm_step(&rows, &hs, &cs, &weights)?;
                hs = h2;
                cs = c2;
                bc.reduce_in.push(frame.pooled[stage].clone());
                bc.steps.push(cache);
                last_rows = Some(rows);
            }
            let sum = last_rows.expect("frames").add(&hs)?;
            residual.push(ops::rows_as_pixels(&sum, h, w)?);
            branches.push(bc);
        }

        let mut dec = DecoderCache {
            inputs: vec![NdArray::zeros(&[0]); CONV_STAGES],
            pre_relu: vec![NdArray::zeros(&[0]); CONV_STAGES],
        };
        let mut up: Option<NdArray<T>> = None;
        let mut loc_logits = None;
        for s in (0..CONV_STAGES).rev() {
            let level = s + 1;
            let skip = self.skip(level, &frames, &residual);
            let input = match up.take() {
                Some(u) => ops::concat_channels(&u, skip)?,
                None => skip.clone(),
            };
            let (w, b) = self.deconv[s];
            let raw = ops::deconv2d(&input, store.value(w))?;
            let (th, tw) = self.levels[s];
            let pre = ops::crop(&ops::add_channel_bias(&raw, store.value(b))?, th, tw)?;
            dec.inputs[s] = input;
            if s == 0 {
                loc_logits = Some(pre);
            } else {
                up = Some(relu(&pre));
                dec.pre_relu[s] = pre;
            }
        }
        let loc_logits = loc_logits.expect("decoder ran");
        dec.pre_relu.remove(0);

        let deepest = &residual[LSTM_LEVELS - 1];
        let flat = NdArray::from_vec(&[deepest.len()], deepest.data().to_vec())?;
        let type_logits = ops::linear(&flat, store.value(self.fc.0), store.value(self.fc.1))?;

        Ok(ForwardCache {
            frames,
            branches,
            residual,
            decoder: dec,
            type_logits,
            loc_logits,
        })
    }

    /// Accumulates parameter gradients into `grads` (aligned with the store)
    /// given gradients of the loss with respect to both logit tensors.
    pub fn backward<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        cache: &ForwardCache<T>,
        grad_type_logits: &NdArray<T>,
        grad_loc_logits: &NdArray<T>,
        grads: &mut [NdArray<T>],
    ) -> Result<()> {
        let acc = |grads: &mut [NdArray<T>], id: ParamId, g: &NdArray<T>| grads[id.0].add_assign(g);

        // Type head.
        let deepest = &cache.residual[LSTM_LEVELS - 1];
        let flat = NdArray::from_vec(&[deepest.len()], deepest.data().to_vec())?;
        let lg = ops::linear_backward(&flat, store.value(self.fc.0), grad_type_logits);
        acc(grads, self.fc.0, &lg.weight)?;
        acc(grads, self.fc.1, &lg.bias)?;
        let mut grad_residual: Vec<NdArray<T>> = cache.residual.iter().map(|r| NdArray::zeros(r.shape())).collect();
        grad_residual[LSTM_LEVELS - 1].add_assign(&lg.input.reshape(deepest.shape())?)?;

        // Decoder, shallowest stage first.
        let mut grad_skip_pooled: Vec<Option<NdArray<T>>> = vec![None; FIRST_BRANCH_STAGE];
        let mut grad_pre = grad_loc_logits.clone();
        for s in 0..CONV_STAGES {
            let level = s + 1;
            let (w, b) = self.deconv[s];
            let input = &cache.decoder.inputs[s];
            let (_, ih, iw) = input.chw()?;
            let cout = store.value(w).shape()[1];
            let g_raw = ops::crop_backward(&grad_pre, &[cout, 2 * ih, 2 * iw])?;
            acc(grads, b, &ops::channel_bias_backward(&g_raw)?)?;
            let dg = ops::deconv2d_backward(input, store.value(w), &g_raw)?;
            acc(grads, w, &dg.kernel)?;
            let skip = self.skip(level, &cache.frames, &cache.residual);
            let skip_c = skip.chw()?.0;
            let in_c = input.chw()?.0;
            let (g_up, g_skip) = if in_c == skip_c {
                (None, dg.input)
            } else {
                let (a, b) = ops::split_channels(&dg.input, in_c - skip_c)?;
                (Some(a), b)
            };
            if level > FIRST_BRANCH_STAGE {
                grad_residual[level - 1 - FIRST_BRANCH_STAGE].add_assign(&g_skip)?;
            } else {
                grad_skip_pooled[level - 1] = Some(g_skip);
            }
            match g_up {
                Some(g) => {
                    // deconv[s + 1] produced this after ReLU.
                    grad_pre = relu_backward(&cache.decoder.pre_relu[s], &g);
                }
                None => break,
            }
        }

        // LSTM branches back to per-frame pooled features.
        let mut grad_pooled: Vec<Vec<Option<NdArray<T>>>> = (0..FRAMES).map(|_| vec![None; CONV_STAGES]).collect();
        for j in 0..LSTM_LEVELS {
            let stage = FIRST_BRANCH_STAGE + j;
            let (h, w) = self.levels[stage + 1];
            let (rw, rb) = self.reduce[j];
            let (wx, wh, lb) = self.lstm[j];
            let weights = LstmWeights {
                input_weight: store.value(wx),
                hidden_weight: store.value(wh),
                bias: store.value(lb),
            };
            let g_out = ops::pixels_as_rows(&grad_residual[j])?;
            let hdim = self.cfg.reduce_channels[j];
            let mut g_h = g_out.clone();
            let mut g_c = NdArray::zeros(&[h * w, hdim]);
            let bc = &cache.branches[j];
            for f in (0..FRAMES).rev() {
                let lg = lstm_step_backward(&bc.steps[f], &weights, &g_h, &g_c)?;
                acc(grads, wx, &lg.input_weight)?;
                acc(grads, wh, &lg.hidden_weight)?;
                acc(grads, lb, &lg.bias)?;
                let mut g_rows = lg.x;
                if f == FRAMES - 1 {
                    g_rows.add_assign(&g_out)?;
                }
                let g_reduced = ops::rows_as_pixels(&g_rows, h, w)?;
                let cg = conv2d_backward(&bc.reduce_in[f], store.value(rw), &g_reduced)?;
                acc(grads, rw, &cg.kernel)?;
                acc(grads, rb, &cg.bias)?;
                grad_pooled[f][stage] = Some(cg.input);
                g_h = lg.h_prev;
                g_c = lg.c_prev;
            }
        }
        for (level0, g) in grad_skip_pooled.into_iter().enumerate() {
            if let Some(g) = g {
                grad_pooled[FRAMES - 1][level0] = Some(g);
            }
        }

        // Encoder, per frame, deepest stage first.
        for (f, fc) in cache.frames.iter().enumerate() {
            let mut from_above: Option<NdArray<T>> = None;
            for s in (0..CONV_STAGES).rev() {
                let mut g = match (grad_pooled[f][s].take(), from_above.take()) {
                    (Some(a), Some(b)) => a.add(&b)?,
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => continue,
                };
                if !g.all_finite() {
                    return Err(Error::NonFinite(format!("encoder stage {}", s + 1)));
                }
                let pre = &fc.pre_relu[s];
                g = maxpool2_backward(&g, &fc.argmax[s], pre.shape());
                g = relu_backward(pre, &g);
                let (w, b) = self.conv[s];
                let cg = conv2d_backward(&fc.conv_in[s], store.value(w), &g)?;
                acc(grads, w, &cg.kernel)?;
                acc(grads, b, &cg.bias)?;
                if s > 0 {
                    from_above = Some(cg.input);
                }
            }
        }
        Ok(())
    }
}

/// Zeroed gradient buffers matching a store's layout.
pub fn zero_grads_like<T: Scalar>(store: &ParamStore<T>) -> Vec<NdArray<T>> {
    store.params().iter().map(|p| NdArray::zeros(p.value.shape())).collect()
}
