use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::array::{NdArray, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: NdArray<T>,
    pub grad: NdArray<T>,
    /// Weight decay applies to this parameter (weights yes, biases no).
    pub decay: bool,
}

/// Owns every trainable tensor of a model; layers hold [`ParamId`]s.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: NdArray<T>, decay: bool) -> ParamId {
        let grad = NdArray::zeros(value.shape());
        self.params.push(Param {
            name: name.into(),
            value,
            grad,
            decay,
        });
        ParamId(self.params.len() - 1)
    }

    /// Adds a tensor drawn uniformly from `±sqrt(6 / fan_in)`.
    pub fn add_uniform(&mut self, name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> ParamId {
        let bound = (6.0 / fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::of(rng.random_range(-bound..bound))).collect();
        self.add(name, NdArray::from_vec(shape, data).expect("sized"), true)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, NdArray::zeros(shape), false)
    }

    pub fn value(&self, id: ParamId) -> &NdArray<T> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut NdArray<T> {
        &mut self.params[id.0].value
    }

    pub fn accumulate(&mut self, id: ParamId, grad: &NdArray<T>) -> Result<()> {
        self.params[id.0].grad.add_assign(grad)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn element_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn scale_grads(&mut self, factor: T) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Adds another store's gradients (same layout) into this one.
    pub fn merge_grads(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.params.len() != self.params.len() {
            return Err(Error::shape("merge_grads", "parameter layouts differ"));
        }
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            a.grad.add_assign(&b.grad)?;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                    decay: p.decay,
                })
                .collect(),
        }
    }
}

/// Momentum SGD; weight decay adds `lambda * w` to decayed parameters' gradients.
#[derive(Clone, Debug)]
pub struct Sgd<T> {
    pub lr: T,
    pub momentum: T,
    pub weight_decay: T,
    velocity: Vec<NdArray<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: T, momentum: T, weight_decay: T) -> Result<Self> {
        if lr <= T::zero() || !lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {lr:?}")));
        }
        Ok(Sgd {
            lr,
            momentum,
            weight_decay,
            velocity: Vec::new(),
        })
    }

    pub fn velocity(&self) -> &[NdArray<T>] {
        &self.velocity
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        if let Some(bad) = store.params().iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::NonFinite(bad.name.clone()));
        }
        if self.velocity.len() != store.len() {
            self.velocity = store.params().iter().map(|p| NdArray::zeros(p.value.shape())).collect();
        }
        for (p, v) in store.params_mut().iter_mut().zip(&mut self.velocity) {
            let decay = if p.decay { self.weight_decay } else { T::zero() };
            let vals = p.value.data_mut();
            for ((w, &g), vel) in vals.iter_mut().zip(p.grad.data()).zip(v.data_mut()) {
                *vel = self.momentum * *vel + g + decay * *w;
                *w -= self.lr * *vel;
            }
        }
        Ok(())
    }
}
