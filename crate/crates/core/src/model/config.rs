use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Dims, LabelConfig};

pub const CONV_STAGES: usize = 5;
pub const LSTM_LEVELS: usize = 3;

/// Architecture and optimizer settings of the interaction model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub dims: Dims,
    pub conv_channels: [usize; CONV_STAGES],
    pub conv_kernel: usize,
    /// Output width of the 1x1 reduction in front of each LSTM; the LSTM
    /// hidden size equals it so the residual sum is well-formed.
    pub reduce_channels: [usize; LSTM_LEVELS],
    /// Output channels of the first four transposed convolutions, deepest
    /// first. The fifth produces the single heatmap channel.
    pub decoder_channels: [usize; 4],
    pub deconv_kernel: usize,
    pub deconv_stages: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub labels: LabelConfig,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dims: Dims::DESK,
            conv_channels: [8, 16, 16, 24, 24],
            conv_kernel: 3,
            reduce_channels: [8, 12, 12],
            decoder_channels: [12, 8, 8, 8],
            deconv_kernel: 4,
            deconv_stages: CONV_STAGES,
            learning_rate: 1e-3,
            momentum: 0.9,
            weight_decay: 1e-4,
            labels: LabelConfig::default(),
            batch_size: 16,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.w == 0 || self.dims.h == 0 {
            return Err(Error::Config("input dims must be positive".into()));
        }
        if self.conv_kernel % 2 == 0 {
            return Err(Error::Config(format!("conv kernel {} must be odd", self.conv_kernel)));
        }
        if self.deconv_kernel < 2 {
            return Err(Error::Config("deconv kernel must be at least 2".into()));
        }
        if self.deconv_stages != CONV_STAGES {
            return Err(Error::Config(format!(
                "{} deconv stages cannot undo {CONV_STAGES} pooling stages",
                self.deconv_stages
            )));
        }
        let widths = self
            .conv_channels
            .iter()
            .chain(&self.reduce_channels)
            .chain(&self.decoder_channels);
        if widths.into_iter().any(|&c| c == 0) {
            return Err(Error::Config("channel widths must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.labels.variance > 0.0) {
            return Err(Error::Config("label variance must be positive".into()));
        }
        Ok(())
    }

    /// Spatial size after the input and after each pooling stage.
    pub fn level_sizes(&self) -> [(usize, usize); CONV_STAGES + 1] {
        let mut out = [(self.dims.h, self.dims.w); CONV_STAGES + 1];
        for s in 1..=CONV_STAGES {
            let (h, w) = out[s - 1];
            out[s] = (h.div_ceil(2), w.div_ceil(2));
        }
        out
    }

    /// Canonical text form embedded in checkpoints.
    pub fn to_canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
