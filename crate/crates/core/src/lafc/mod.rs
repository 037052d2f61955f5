//! Local aggregation flow completion.

mod config;
mod loss;
mod network;
mod p3d;
mod train;
mod window;

pub use config::{lafc_milestone, LafcConfig, LafcWeights, TrainSchedule};
pub use loss::{edge_loss, lafc_loss, LafcTargets, LossTerms};
pub use network::{composite_flow, EdgeHead, LafcModel, LafcNet};
pub use p3d::P3dBlock;
pub use train::{clip_samples, evaluate_epe, train_lafc, write_lafc_log, FlowDirection, LafcLogRow, LafcSample, TrainedLafc};
pub use window::{window_indices, FlowWindow};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use fgt_tensor::Scalar;

pub const CHECKPOINT_KIND: &str = "lafc";

impl<T: Scalar> LafcModel<T> {
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let toml = toml::to_string(self.config()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Checkpoint::from_store(CHECKPOINT_KIND, toml, &[("lafc", &self.store)]))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CHECKPOINT_KIND)?;
        let config: LafcConfig = toml::from_str(&ck.config_toml).map_err(|e| Error::Format(e.to_string()))?;
        let mut model = Self::new(&config, 0)?;
        ck.load_into("lafc", &mut model.store)?;
        Ok(model)
    }
}
