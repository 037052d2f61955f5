//! Transformer training objectives: masked reconstruction and the patch-GAN pair.

mod adversarial;
mod discriminator;
mod reconstruction;

pub use adversarial::{tpatchgan_d_loss, tpatchgan_g_loss};
pub use discriminator::{Discriminator, DiscriminatorConfig, DiscriminatorOutput, SnConv3d, MIN_FRAMES};
pub use reconstruction::{reconstruction_loss, ReconTerms};

/// Weight of the adversarial term relative to reconstruction.
pub const LAMBDA_ADV: f64 = 0.01;
