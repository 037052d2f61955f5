use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LafcWeights {
    pub hole: f64,
    pub valid: f64,
    pub smooth1: f64,
    pub smooth2: f64,
    pub warp: f64,
    pub edge: f64,
}

impl Default for LafcWeights {
    fn default() -> Self {
        Self {
            hole: 1.0,
            valid: 1.0,
            smooth1: 0.1,
            smooth2: 0.1,
            warp: 0.1,
            edge: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LafcConfig {
    /// Half window length; the network sees `2n + 1` flows.
    pub n: usize,
    /// Temporal spacing between window members, in frames.
    pub interval: usize,
    pub base_channels: usize,
    /// P3D encoder stages; each after the first halves the resolution.
    pub encoder_stages: usize,
    /// 3x3 convolutions after every decoder skip merge.
    pub decoder_depth: usize,
    pub edge_channels: usize,
    pub weights: LafcWeights,
    pub tau: f64,
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for LafcConfig {
    fn default() -> Self {
        Self {
            n: 1,
            interval: 3,
            base_channels: 32,
            encoder_stages: 3,
            decoder_depth: 1,
            edge_channels: 16,
            weights: LafcWeights::default(),
            tau: crate::flowcore::DEFAULT_TAU,
            canny_low: crate::flowcore::DEFAULT_LOW,
            canny_high: crate::flowcore::DEFAULT_HIGH,
        }
    }
}

impl LafcConfig {
    pub fn window_len(&self) -> usize {
        2 * self.n + 1
    }

    /// Total spatial downsampling of the encoder.
    pub fn downsampling(&self) -> usize {
        1 << (self.encoder_stages - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let bad = |m: &str| Err(Error::Config(format!("lafc: {m}")));
        if self.interval < 1 {
            return bad("interval must be >= 1");
        }
        if self.encoder_stages < 1 || self.encoder_stages > 6 {
            return bad("encoder_stages must be in 1..=6");
        }
        if self.base_channels == 0 || self.edge_channels == 0 {
            return bad("channel counts must be positive");
        }
        if [w.hole, w.valid, w.smooth1, w.smooth2, w.warp, w.edge].iter().any(|&v| !(v >= 0.0)) {
            return bad("loss weights must be >= 0");
        }
        if !(self.tau >= 0.0) || !(0.0 <= self.canny_low && self.canny_low <= self.canny_high) {
            return bad("thresholds out of range");
        }
        Ok(())
    }
}

/// Reference schedule: decay at 120K of 280K iterations.
pub fn lafc_milestone(iterations: usize) -> usize {
    iterations * 120 / 280
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSchedule {
    pub iterations: usize,
    pub lr: f64,
    /// Iteration of the ×0.1 decay; `None` keeps the 120/280 ratio.
    pub milestone: Option<usize>,
    pub log_every: usize,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr: 1e-4,
            milestone: None,
            log_every: 100,
            seed: 0,
        }
    }
}
