//! A compact define-by-run autodiff engine over dense CPU tensors.
//!
//! Every kernel is generic over [`Scalar`] (`f32` for training, `f64` for
//! gradient verification). Matrix products go through `matrixmultiply`;
//! convolutions are lowered to im2col + gemm.

pub mod gradcheck;
mod graph;
pub mod nn;
pub mod ops;
pub mod optim;
mod params;
mod scalar;
mod tensor;

pub use graph::{BackwardCtx, BackwardFn, Gradients, Graph, Var};
pub use ops::{ConvSpec, PadMode};
pub use params::{Bound, Init, Param, ParamId, ParamStore};
pub use scalar::{DType, Scalar};
pub use tensor::{broadcast_shape, numel, strides, Tensor};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Graph32 = Graph<f32>;
pub type Graph64 = Graph<f64>;
