use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::checkpoint::{Checkpoint, RngState};
use crate::model::network::zero_grads_like;
use crate::model::{InteractionModel, ModelConfig, Target};
use crate::nn::{NdArray, ParamStore, Sgd};
use crate::raster::UiContext;
use crate::ui::InteractionFlow;

/// Loop controls that do not affect the architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Stop after this many epochs without held-out improvement.
    pub patience: Option<usize>,
    /// Fraction of apps held out for early stopping. Zero disables it.
    pub val_fraction: f64,
    pub max_steps: Option<u64>,
    pub workers: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 8,
            patience: Some(2),
            val_fraction: 0.0,
            max_steps: None,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub val: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: InteractionModel<f32>,
    /// Mean batch loss after every optimizer step.
    pub step_losses: Vec<f64>,
    pub epochs: Vec<EpochLoss>,
    pub steps: u64,
    pub train_apps: Vec<String>,
    pub val_apps: Vec<String>,
    pub rng: RngState,
}

impl TrainReport {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_model(&self.model, self.steps, self.rng)
    }

    pub fn write_step_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "step,loss")?;
        for (i, l) in self.step_losses.iter().enumerate() {
            writeln!(out, "{},{l:.6}", i + 1)?;
        }
        Ok(())
    }

    pub fn write_epoch_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "epoch,train_loss,val_loss")?;
        for e in &self.epochs {
            let val = e.val.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(out, "{},{:.6},{val}", e.epoch, e.train)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    flow: usize,
    step: usize,
}

fn samples_of(flows: &[InteractionFlow], keep: impl Fn(&str) -> bool) -> Vec<Sample> {
    flows
        .iter()
        .enumerate()
        .filter(|(_, f)| keep(&f.app_id))
        .flat_map(|(fi, f)| (0..f.len()).map(move |step| Sample { flow: fi, step }))
        .collect()
}

/// Loss and gradient of one sample.
fn sample_grad(
    model: &InteractionModel<f32>,
    flows: &[InteractionFlow],
    s: Sample,
) -> Result<(f32, Vec<NdArray<f32>>)> {
    let f = &flows[s.flow];
    let ctx = model.encode(&UiContext::at_step(&f.states, &f.actions, s.step));
    let target = Target::new(&f.actions[s.step], &f.states[s.step], model.config());
    let mut grads = zero_grads_like(&model.params);
    let loss = model.loss_and_grad(&ctx, &target, &mut grads)?;
    Ok((loss, grads))
}

fn sample_loss(model: &InteractionModel<f32>, flows: &[InteractionFlow], s: Sample) -> Result<f64> {
    let f = &flows[s.flow];
    let ctx = model.encode(&UiContext::at_step(&f.states, &f.actions, s.step));
    let target = Target::new(&f.actions[s.step], &f.states[s.step], model.config());
    let (loss, _) = model.loss_probe(&model.params, &ctx, &target)?;
    Ok(f64::from(loss))
}

/// Per-sample results in input order, computed on `workers` threads.
fn map_ordered<R: Send>(
    items: &[Sample],
    workers: usize,
    f: impl Fn(Sample) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(|&s| f(s)).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(|&s| f(s)).collect::<Result<Vec<R>>>())
            })
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().map_err(|_| Error::Config("training worker panicked".into()))??);
        }
        Ok(out)
    })
}

pub fn mean_loss(model: &InteractionModel<f32>, flows: &[InteractionFlow], workers: usize) -> Result<f64> {
    let samples = samples_of(flows, |_| true);
    if samples.is_empty() {
        return Err(Error::EmptyDataset("no samples to score".into()));
    }
    let losses = map_ordered(&samples, workers, |s| sample_loss(model, flows, s))?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Momentum SGD over every (context, action) sample. Gradients of a batch
/// are summed in sample order, so the result does not depend on `workers`.
pub fn train(flows: &[InteractionFlow], cfg: &ModelConfig, opts: &TrainOptions) -> Result<TrainReport> {
    cfg.validate()?;
    for f in flows {
        f.validate()?;
    }
    let apps: Vec<String> = flows.iter().map(|f| f.app_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7472_6169_6e00);

    let mut shuffled = apps.clone();
    shuffled.shuffle(&mut rng);
    let n_val = if opts.val_fraction > 0.0 && apps.len() > 1 {
        ((apps.len() as f64 * opts.val_fraction).ceil() as usize).clamp(1, apps.len() - 1)
    } else {
        0
    };
    let mut val_apps: Vec<String> = shuffled[..n_val].to_vec();
    let mut train_apps: Vec<String> = shuffled[n_val..].to_vec();
    val_apps.sort();
    train_apps.sort();

    let train_set = samples_of(flows, |a| train_apps.binary_search_by(|x| x.as_str().cmp(a)).is_ok());
    let val_set = samples_of(flows, |a| val_apps.binary_search_by(|x| x.as_str().cmp(a)).is_ok());
    if train_set.is_empty() {
        return Err(Error::EmptyDataset("training set has no samples".into()));
    }

    let mut model = InteractionModel::<f32>::new(cfg)?;
    let mut opt = Sgd::<f32>::new(cfg.learning_rate as f32, cfg.momentum as f32, cfg.weight_decay as f32)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step_losses = Vec::new();
    let mut epochs = Vec::new();
    let mut steps = 0u64;
    let mut best: Option<(f64, ParamStore<f32>)> = None;
    let mut stale = 0usize;

    'outer: for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut epoch_n = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            if opts.max_steps.is_some_and(|m| steps >= m) {
                break 'outer;
            }
            let picked: Vec<Sample> = batch.iter().map(|&i| train_set[i]).collect();
            let results = map_ordered(&picked, opts.workers, |s| sample_grad(&model, flows, s))?;
            model.params.zero_grads();
            let mut batch_loss = 0.0f64;
            for (loss, grads) in &results {
                batch_loss += f64::from(*loss);
                for (p, g) in model.params.params_mut().iter_mut().zip(grads) {
                    p.grad.add_assign(g)?;
                }
            }
            model.params.scale_grads(1.0 / batch.len() as f32);
            opt.step(&mut model.params)?;
            steps += 1;
            step_losses.push(batch_loss / batch.len() as f64);
            epoch_sum += batch_loss;
            epoch_n += batch.len();
        }
        let train_loss = epoch_sum / epoch_n.max(1) as f64;
        let val = if val_set.is_empty() {
            None
        } else {
            let losses = map_ordered(&val_set, opts.workers, |s| sample_loss(&model, flows, s))?;
            Some(losses.iter().sum::<f64>() / losses.len() as f64)
        };
        log::info!("epoch {epoch}: train {train_loss:.4} val {val:?}");
        epochs.push(EpochLoss {
            epoch,
            train: train_loss,
            val,
        });
        if epoch_n == 0 {
            break;
        }
        if let Some(v) = val {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.params.clone()));
                stale = 0;
            } else {
                stale += 1;
                if opts.patience.is_some_and(|p| stale >= p) {
                    break;
                }
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    model.params.zero_grads();
    Ok(TrainReport {
        model,
        step_losses,
        epochs,
        steps,
        train_apps,
        val_apps,
        rng: RngState::capture(&rng),
    })
}
