pub mod conv;
pub mod elementwise;
pub mod matmul;
pub mod norm;
pub mod reduce;
pub mod shape;

pub use conv::{conv3d_tensor, conv_transpose_extent, ConvSpec};
pub use elementwise::{sigmoid, softplus};
pub use matmul::bmm_tensor;
pub use norm::softmax_tensor;
pub use shape::{pad_index, PadMode, ZERO_INDEX};
