//! Flow-guided transformer.

mod attention;
mod blocks;
mod config;
mod embed;
mod model;
mod tokens;

pub use attention::{key_bias, multi_head_attention, Mlp, Partition, MASKED};
pub use blocks::{FlowReweight, GateMode, GlobalTokens, Peg, SpatialBlock, TemporalBlock};
pub use config::{BlockKind, FgtConfig, FlowGuidance, EMBED_FACTOR};
pub use embed::{Decoder, PatchEmbed};
pub use model::{fgt_forward, fgt_forward_with, Block, FgtInputs, FgtModel, FgtNet, ForwardOptions};
pub use tokens::{closed_form_global_stride, min_global_stride, retrieval_count};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use fgt_tensor::Scalar;

pub const CHECKPOINT_KIND: &str = "fgt";

impl<T: Scalar> FgtModel<T> {
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let toml = toml::to_string(self.config()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Checkpoint::from_store(CHECKPOINT_KIND, toml, &[("fgt", &self.store)]))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CHECKPOINT_KIND)?;
        let config: FgtConfig = toml::from_str(&ck.config_toml).map_err(|e| Error::Format(e.to_string()))?;
        let mut model = Self::new(&config, 0)?;
        ck.load_into("fgt", &mut model.store)?;
        Ok(model)
    }
}
