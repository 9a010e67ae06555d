//! Dense arrays and differentiable layers with hand-written backward passes.

pub mod array;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod param;

pub use array::{NdArray, Scalar};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, Probe, SignatureHasher};
pub use lstm::{lstm_step, lstm_step_backward, LstmCache, LstmGrads, LstmWeights};
pub use param::{Param, ParamId, ParamStore, Sgd};
