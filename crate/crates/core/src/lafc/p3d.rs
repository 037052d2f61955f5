use fgt_tensor::nn::Conv3d;
use fgt_tensor::{Bound, ConvSpec, PadMode, ParamStore, Scalar, Var};

use crate::error::{shape_err, Error, Result};

/// Pseudo-3D block: a per-frame spatial convolution followed by a per-site
/// temporal convolution, plus the input.
///
/// A reducing block uses a valid temporal convolution over the whole window,
/// collapsing `T` to 1, and has no residual term.
#[derive(Clone, Debug)]
pub struct P3dBlock {
    pub spatial: Conv3d,
    pub temporal: Conv3d,
    pub temporal_kernel: usize,
    pub reduce: bool,
}

impl P3dBlock {
    /// Shape-preserving block; the temporal kernel is odd and replicate padded.
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_ch: usize, out_ch: usize, temporal_kernel: usize) -> Result<Self> {
        if in_ch != out_ch {
            return Err(Error::Config(format!(
                "{name}: residual P3D block needs equal channels, got {in_ch} -> {out_ch}"
            )));
        }
        if temporal_kernel % 2 == 0 {
            return Err(Error::Config(format!("{name}: temporal kernel must be odd")));
        }
        Ok(Self::build(store, name, in_ch, out_ch, temporal_kernel, false))
    }

    /// Block that maps `T = temporal_kernel` frames to one.
    pub fn reducing<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_ch: usize, out_ch: usize, temporal_kernel: usize) -> Self {
        Self::build(store, name, in_ch, out_ch, temporal_kernel, true)
    }

    fn build<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_ch: usize, out_ch: usize, kt: usize, reduce: bool) -> Self {
        Self {
            spatial: Conv3d::new(store, &format!("{name}.sc"), in_ch, out_ch, [1, 3, 3], ConvSpec::new([1, 1, 1], [0, 1, 1])),
            temporal: Conv3d::new(store, &format!("{name}.tc"), out_ch, out_ch, [kt, 1, 1], ConvSpec::default()),
            temporal_kernel: kt,
            reduce,
        }
    }

    /// `x: [B, C, T, H, W]`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Result<Var<T>> {
        let s = x.shape();
        if s.len() != 5 {
            return Err(shape_err(format!("P3D expects [B, C, T, H, W], got {s:?}")));
        }
        let sc = self.spatial.forward(p, x);
        if self.reduce {
            if s[2] != self.temporal_kernel {
                return Err(shape_err(format!(
                    "reducing P3D block needs T = {}, got {}",
                    self.temporal_kernel, s[2]
                )));
            }
            return Ok(self.temporal.forward(p, &sc));
        }
        let half = self.temporal_kernel / 2;
        let padded = sc.pad(&[(0, 0), (0, 0), (half, half), (0, 0), (0, 0)], PadMode::Replicate);
        Ok(self.temporal.forward(p, &padded).add(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::{Graph, Tensor};

    fn zero_temporal(store: &mut ParamStore<f64>, b: &P3dBlock) {
        for id in [b.temporal.weight, b.temporal.bias.unwrap()] {
            let shape = store.get(id).shape().to_vec();
            store.set(id, Tensor::zeros(&shape));
        }
    }

    #[test]
    fn zero_temporal_branch_is_identity() {
        let mut store = ParamStore::<f64>::new(1);
        let b = P3dBlock::new(&mut store, "p", 4, 4, 3).unwrap();
        zero_temporal(&mut store, &b);
        let g = Graph::inference();
        let x = Tensor::from_fn(&[1, 4, 3, 5, 6], |i| (i as f64 * 0.37).sin());
        let y = b.forward(&store.bind(&g), &g.constant(x.clone())).unwrap().value();
        assert_eq!(*y, x);
    }

    #[test]
    fn identity_spatial_and_mean_temporal_doubles_constants() {
        let mut store = ParamStore::<f64>::new(1);
        let b = P3dBlock::new(&mut store, "p", 2, 2, 3).unwrap();
        let mut sc = Tensor::zeros(&[2, 2, 1, 3, 3]);
        let mut tc = Tensor::zeros(&[2, 2, 3, 1, 1]);
        for c in 0..2 {
            sc.data_mut()[(c * 2 + c) * 9 + 4] = 1.0;
            for k in 0..3 {
                tc.data_mut()[(c * 2 + c) * 3 + k] = 1.0 / 3.0;
            }
        }
        store.set(b.spatial.weight, sc);
        store.set(b.temporal.weight, tc);
        for id in [b.spatial.bias.unwrap(), b.temporal.bias.unwrap()] {
            store.set(id, Tensor::zeros(&[2]));
        }
        let g = Graph::inference();
        let y = b.forward(&store.bind(&g), &g.constant(Tensor::full(&[1, 2, 3, 4, 4], 0.7))).unwrap().value();
        assert!(y.data().iter().all(|v| (v - 1.4).abs() < 1e-12));
    }

    #[test]
    fn shapes_and_channel_check() {
        let mut store = ParamStore::<f32>::new(1);
        assert!(P3dBlock::new(&mut store, "bad", 4, 8, 3).is_err());
        let b = P3dBlock::new(&mut store, "p", 8, 8, 3).unwrap();
        let r = P3dBlock::reducing(&mut store, "r", 8, 16, 3);
        let g = Graph::inference();
        let bound = store.bind(&g);
        let x = g.constant(Tensor::zeros(&[1, 8, 3, 8, 8]));
        assert_eq!(b.forward(&bound, &x).unwrap().shape(), vec![1, 8, 3, 8, 8]);
        assert_eq!(r.forward(&bound, &x).unwrap().shape(), vec![1, 16, 1, 8, 8]);
    }
}
