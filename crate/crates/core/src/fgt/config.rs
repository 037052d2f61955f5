use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Temporal,
    Spatial,
}

/// How flow tokens enter the spatial blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowGuidance {
    /// Gated flow tokens concatenated to the frame tokens.
    Reweight,
    /// Flow tokens concatenated without a gate.
    Concat,
    /// Frame tokens only.
    None,
}

impl FlowGuidance {
    /// Channel width of the fused tokens for token width `c`.
    pub fn fused_channels(self, c: usize) -> usize {
        match self {
            FlowGuidance::None => c,
            _ => 2 * c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FgtConfig {
    pub channels: usize,
    pub heads: usize,
    pub blocks: Vec<BlockKind>,
    /// Spatial attention window (h, w) in tokens; clamped to the grid.
    pub window: (usize, usize),
    /// Zone grid per side for temporal attention.
    pub zones: usize,
    /// Global-token stride `s`.
    pub global_stride: usize,
    /// Global-token kernel; `None` means `2s`.
    pub global_kernel: Option<usize>,
    pub global_tokens: bool,
    pub guidance: FlowGuidance,
    pub mlp_ratio: usize,
    /// Divisor applied to flows before embedding.
    pub flow_scale: f64,
}

/// Spatial downsampling of the patch embedding.
pub const EMBED_FACTOR: usize = 4;

impl Default for FgtConfig {
    fn default() -> Self {
        use BlockKind::*;
        Self {
            channels: 512,
            heads: 4,
            blocks: vec![Temporal, Spatial, Temporal, Spatial, Temporal, Spatial, Temporal, Spatial],
            window: (8, 8),
            zones: 2,
            global_stride: 4,
            global_kernel: None,
            global_tokens: true,
            guidance: FlowGuidance::Reweight,
            mlp_ratio: 2,
            flow_scale: 4.0,
        }
    }
}

impl FgtConfig {
    /// Narrow preset for CPU runs on 32–64 px clips.
    pub fn small() -> Self {
        Self {
            channels: 32,
            heads: 4,
            window: (4, 4),
            global_stride: 2,
            ..Self::default()
        }
    }

    pub fn kernel(&self) -> usize {
        self.global_kernel.unwrap_or(2 * self.global_stride)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("fgt: {m}")));
        if self.channels < 4 || self.channels % 4 != 0 {
            return bad(format!("channels must be a positive multiple of 4, got {}", self.channels));
        }
        if self.heads == 0 || self.channels % self.heads != 0 {
            return bad(format!("{} channels not divisible by {} heads", self.channels, self.heads));
        }
        if self.blocks.is_empty() {
            return bad("at least one block".into());
        }
        if self.window.0 == 0 || self.window.1 == 0 || self.zones == 0 || self.mlp_ratio == 0 {
            return bad("window, zones and mlp_ratio must be >= 1".into());
        }
        if self.global_stride == 0 {
            return bad("global_stride must be >= 1".into());
        }
        if self.kernel() < self.global_stride {
            return bad(format!("global kernel {} smaller than stride {}", self.kernel(), self.global_stride));
        }
        if !(self.flow_scale > 0.0) {
            return bad("flow_scale must be > 0".into());
        }
        Ok(())
    }

    /// Token grid of an `h×w` frame.
    pub fn grid(&self, h: usize, w: usize) -> (usize, usize) {
        (h.div_ceil(EMBED_FACTOR), w.div_ceil(EMBED_FACTOR))
    }

    /// Window actually used on a `gh×gw` grid.
    pub fn window_on(&self, gh: usize, gw: usize) -> (usize, usize) {
        (self.window.0.min(gh), self.window.1.min(gw))
    }
}
