//! Flow fields and the geometric primitives built on them.

mod canny;
mod consistency;
mod epe;
mod field;
mod flo;
mod gradients;
mod laplace;
mod warp;

pub use canny::{canny_edges, DEFAULT_HIGH, DEFAULT_LOW};
pub use consistency::{fb_consistency_mask, round_trip_residual, DEFAULT_TAU};
pub use epe::epe;
pub(crate) use field::check_same;
pub use field::{BinaryMap, EdgeMap, FlowField, Frame, HasSize, Raster, RegionMask};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use gradients::{flow_gradients, Gradients};
pub use laplace::{laplacian_fill, laplacian_fill_with, max_laplace_residual, FillReport, LaplaceOptions};
pub use warp::{in_bounds, sample_flow, warp_backward, Bilinear};
