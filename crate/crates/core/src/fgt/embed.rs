//! Strided convolutional encoders to and decoder from the 1/4-resolution token grid.

use fgt_tensor::nn::{Conv2d, ConvTranspose2d};
use fgt_tensor::{Bound, PadMode, ParamStore, Scalar, Var};

use super::config::EMBED_FACTOR;
use crate::error::{shape_err, Result};

fn act<T: Scalar>(x: &Var<T>) -> Var<T> {
    x.leaky_relu(T::of(0.2))
}

/// Two stride-2 3x3 convolutions: `[T, Cin, H, W] -> [T, ⌈H/4⌉, ⌈W/4⌉, C]`.
#[derive(Clone, Debug)]
pub struct PatchEmbed {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub in_channels: usize,
}

impl PatchEmbed {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_channels: usize, channels: usize) -> Self {
        Self {
            conv1: Conv2d::new(store, &format!("{name}.conv1"), in_channels, channels / 2, 3, 2, 1),
            conv2: Conv2d::new(store, &format!("{name}.conv2"), channels / 2, channels, 3, 2, 1),
            in_channels,
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Result<Var<T>> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.in_channels {
            return Err(shape_err(format!("embedding expects [T, {}, H, W], got {s:?}", self.in_channels)));
        }
        let f = EMBED_FACTOR;
        let (ph, pw) = (s[2].div_ceil(f) * f - s[2], s[3].div_ceil(f) * f - s[3]);
        let x = x.pad(&[(0, 0), (0, 0), (0, ph), (0, pw)], PadMode::Replicate);
        let y = self.conv2.forward(p, &act(&self.conv1.forward(p, &x)));
        Ok(y.permute(&[0, 2, 3, 1]))
    }
}

/// Two 4x4 stride-2 transposed convolutions and a 3x3 output convolution.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub up1: ConvTranspose2d,
    pub up2: ConvTranspose2d,
    pub out: Conv2d,
}

impl Decoder {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        let (c2, c4) = (channels / 2, channels / 4);
        Self {
            up1: ConvTranspose2d::new(store, &format!("{name}.up1"), channels, c2, 4, 2, 1, 0),
            up2: ConvTranspose2d::new(store, &format!("{name}.up2"), c2, c4, 4, 2, 1, 0),
            out: Conv2d::new(store, &format!("{name}.out"), c4, 3, 3, 1, 1),
        }
    }

    /// `[T, H′, W′, C] -> [T, 3, height, width]`, cropping the embedding pad.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, tokens: &Var<T>, height: usize, width: usize) -> Var<T> {
        let x = tokens.permute(&[0, 3, 1, 2]);
        let x = act(&self.up2.forward(p, &act(&self.up1.forward(p, &x))));
        self.out.forward(p, &x).narrow(2, 0, height).narrow(3, 0, width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::{Graph, Tensor};

    #[test]
    fn grid_sizes() {
        let mut store = ParamStore::<f32>::new(0);
        let e = PatchEmbed::new(&mut store, "e", 4, 8);
        let d = Decoder::new(&mut store, "d", 8);
        let g = Graph::inference();
        let p = store.bind(&g);
        for (h, w, gh, gw) in [(64, 64, 16, 16), (30, 17, 8, 5), (256, 432, 64, 108)] {
            let t = e.forward(&p, &g.constant(Tensor::zeros(&[1, 4, h, w]))).unwrap();
            assert_eq!(t.shape(), vec![1, gh, gw, 8]);
            assert_eq!(d.forward(&p, &t, h, w).shape(), vec![1, 3, h, w]);
        }
        assert!(e.forward(&p, &g.constant(Tensor::zeros(&[1, 3, 8, 8]))).is_err());
    }
}
