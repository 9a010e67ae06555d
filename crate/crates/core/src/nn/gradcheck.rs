//! Central-difference verification of analytic gradients.
//!
//! The objective reports, besides its value, a signature of every
//! piecewise-linear branch it took (ReLU masks, pooling argmaxes). A
//! coordinate whose ±ε probes change that signature straddles a kink, and the
//! finite difference there says nothing about the derivative, so it is
//! skipped and another coordinate is drawn.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::param::ParamStore;

/// Result of evaluating the objective at one parameter setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub value: f64,
    pub branch_signature: u64,
}

impl Probe {
    /// For smooth objectives.
    pub fn smooth(value: f64) -> Self {
        Probe {
            value,
            branch_signature: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates checked per parameter tensor (all of them if it is smaller).
    pub samples_per_param: usize,
    /// Denominator floor of the relative error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 1e-3,
            samples_per_param: 100,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub skipped_kinks: usize,
    /// Coordinates checked per parameter, in store order.
    pub per_param: Vec<(String, usize)>,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares the gradients currently held in `store` against central
/// differences of `objective`. Parameter values are restored afterwards.
pub fn grad_check<F>(store: &mut ParamStore<f64>, mut objective: F, cfg: &GradCheckConfig) -> GradCheckReport
where
    F: FnMut(&ParamStore<f64>) -> Probe,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = objective(store).branch_signature;
    let mut report = GradCheckReport::default();
    for pi in 0..store.len() {
        let name = store.params()[pi].name.clone();
        let analytic = store.params()[pi].grad.clone();
        let mut order: Vec<usize> = (0..analytic.len()).collect();
        order.shuffle(&mut rng);
        let mut checked = 0;
        for &idx in &order {
            if checked >= cfg.samples_per_param {
                break;
            }
            let original = store.params()[pi].value.data()[idx];
            store.params_mut()[pi].value.data_mut()[idx] = original + cfg.eps;
            let plus = objective(store);
            store.params_mut()[pi].value.data_mut()[idx] = original - cfg.eps;
            let minus = objective(store);
            store.params_mut()[pi].value.data_mut()[idx] = original;
            if plus.branch_signature != base || minus.branch_signature != base {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus.value - minus.value) / (2.0 * cfg.eps);
            let err = relative_error(analytic.data()[idx], numeric, cfg.floor);
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), idx));
            }
            checked += 1;
        }
        report.checked += checked;
        report.per_param.push((name, checked));
    }
    report
}

/// FNV-1a over a stream of words, for building branch signatures.
#[derive(Clone, Copy, Debug)]
pub struct SignatureHasher(u64);

impl Default for SignatureHasher {
    fn default() -> Self {
        SignatureHasher(0xcbf2_9ce4_8422_2325)
    }
}

impl SignatureHasher {
    pub fn write(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    /// Hashes the sign pattern of a ReLU input.
    pub fn write_mask<T: PartialOrd + num_traits::Zero>(&mut self, values: &[T]) {
        let mut word = 0u64;
        for (i, v) in values.iter().enumerate() {
            word = (word << 1) | u64::from(*v > T::zero());
            if i % 64 == 63 {
                self.write(word);
                word = 0;
            }
        }
        self.write(word);
    }

    pub fn write_indices(&mut self, idx: &[usize]) {
        for &i in idx {
            self.write(i as u64);
        }
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}
