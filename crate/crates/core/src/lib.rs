//! Model-guided GUI exploration: UI state model, trace preprocessing,
//! rasterization, a small from-scratch neural network library, the
//! interaction model, an explorer, a synthetic app simulator and the
//! experiment harness.

pub mod error;
pub mod explore;
pub mod harness;
pub mod model;
pub mod nn;
pub mod raster;
pub mod sim;
pub mod trace;
pub mod ui;

pub use error::{Error, Result};
