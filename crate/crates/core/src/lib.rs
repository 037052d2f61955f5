//! Two-stage flow-guided video inpainting: flow completion, propagation and a
//! flow-guided transformer.

pub mod checkpoint;
pub mod diffops;
pub mod error;
pub mod fgt;
pub mod flowcore;
pub mod harness;
pub mod lafc;
pub mod losses;
pub mod propagation;
pub mod video;

pub use error::{Error, Result};
pub use fgt_tensor::Scalar;

pub type FlowField32 = flowcore::FlowField<f32>;
pub type FlowField64 = flowcore::FlowField<f64>;
pub type Frame32 = flowcore::Frame<f32>;
pub type Frame64 = flowcore::Frame<f64>;
pub type Clip32 = video::Clip<f32>;
pub type Clip64 = video::Clip<f64>;
pub type LafcModel32 = lafc::LafcModel<f32>;
pub type LafcModel64 = lafc::LafcModel<f64>;
pub type FgtModel32 = fgt::FgtModel<f32>;
pub type FgtModel64 = fgt::FgtModel<f64>;
