//! Spatio-temporal patch discriminator with spectrally normalized convolutions.

use fgt_tensor::nn::{Conv3d, Linear};
use fgt_tensor::{Bound, ConvSpec, ParamId, ParamStore, Scalar, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

pub const MIN_FRAMES: usize = 3;
const KERNEL: [usize; 3] = [3, 5, 5];
const SLOPE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    /// Widths of the first, second and remaining layers.
    pub channels: [usize; 3],
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self { channels: [64, 128, 256] }
    }
}

impl DiscriminatorConfig {
    pub fn small() -> Self {
        Self { channels: [8, 16, 32] }
    }

    /// `(in, out, spatial stride)` per layer.
    pub fn layers(&self) -> [(usize, usize, usize); 6] {
        let [a, b, c] = self.channels;
        [(3, a, 1), (a, b, 2), (b, c, 2), (c, c, 2), (c, c, 1), (c, c, 1)]
    }
}

/// A `Conv3d` whose weight is divided by an estimate of its largest singular value.
#[derive(Clone, Debug)]
pub struct SnConv3d {
    pub conv: Conv3d,
    /// Left singular vector estimate, `[out]`; a buffer carried across steps.
    pub u: ParamId,
}

impl SnConv3d {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, cin: usize, cout: usize, stride: usize) -> Self {
        let conv = Conv3d::new(store, name, cin, cout, KERNEL, ConvSpec::new([1, stride, stride], [1, 2, 2]));
        let u = store.add_buffer(&format!("{name}.u"), Tensor::full(&[cout], T::of(1.0 / (cout as f64).sqrt())));
        Self { conv, u }
    }

    /// One power iteration from the stored `u`; returns `(σ, v, u')` with `σ = u'ᵀ W v`.
    fn power_iteration<T: Scalar>(w: &Tensor<T>, u: &Tensor<T>) -> (Vec<f64>, Vec<f64>) {
        let rows = w.shape()[0];
        let cols = w.numel() / rows;
        let wd = w.data();
        let normalize = |x: &mut Vec<f64>| {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            x.iter_mut().for_each(|v| *v /= n);
        };
        let mut v = vec![0.0; cols];
        for (r, ur) in u.data().iter().enumerate() {
            let ur = ur.as_f64();
            for (c, vc) in v.iter_mut().enumerate() {
                *vc += wd[r * cols + c].as_f64() * ur;
            }
        }
        normalize(&mut v);
        let mut u2: Vec<f64> = (0..rows)
            .map(|r| (0..cols).map(|c| wd[r * cols + c].as_f64() * v[c]).sum())
            .collect();
        normalize(&mut u2);
        (v, u2)
    }

    /// Returns the activation and the updated `u`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> (Var<T>, Tensor<T>) {
        let w = p.get(self.conv.weight);
        let ws = w.shape();
        let rows = ws[0];
        let cols = w.value().numel() / rows;
        let (v, u) = Self::power_iteration(&w.value(), &p.get(self.u).value());
        let uc = p.constant(Tensor::new(&[1, rows], u.iter().map(|&x| T::of(x)).collect()));
        let vc = p.constant(Tensor::new(&[cols, 1], v.iter().map(|&x| T::of(x)).collect()));
        let sigma = uc.matmul(&w.reshape(&[rows, cols])).matmul(&vc).reshape(&[1]);
        let wn = w.div(&sigma);
        let y = x.conv3d(&wn, self.conv.bias.map(|b| p.get(b)), self.conv.spec);
        (y, Tensor::new(&[rows], u.into_iter().map(T::of).collect()))
    }
}

#[derive(Clone, Debug)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub layers: Vec<SnConv3d>,
    pub head: Linear,
}

/// Scores `[T, H/8, W/8]` (one per spatio-temporal patch) and the power-iteration
/// state to write back after a training step.
pub struct DiscriminatorOutput<T: Scalar> {
    pub scores: Var<T>,
    pub u: Vec<Tensor<T>>,
}

impl Discriminator {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, config: &DiscriminatorConfig) -> Result<Self> {
        if config.channels.iter().any(|&c| c == 0) {
            return Err(Error::Config("discriminator channels must be positive".into()));
        }
        let layers = config
            .layers()
            .iter()
            .enumerate()
            .map(|(i, &(a, b, s))| SnConv3d::new(store, &format!("disc.conv{i}"), a, b, s))
            .collect();
        let head = Linear::new(store, "disc.head", config.channels[2], 1);
        Ok(Self {
            config: config.clone(),
            layers,
            head,
        })
    }

    /// Spatial extent of the score volume for an `n`-pixel side.
    pub fn score_extent(&self, n: usize) -> usize {
        self.config.layers().iter().fold(n, |n, &(_, _, s)| (n + 4 - 5) / s + 1)
    }

    /// `clip: [T, 3, H, W]`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, clip: &Var<T>) -> Result<DiscriminatorOutput<T>> {
        let s = clip.shape();
        if s.len() != 4 || s[1] != 3 {
            return Err(shape_err(format!("discriminator expects [T, 3, H, W], got {s:?}")));
        }
        if s[0] < MIN_FRAMES {
            return Err(Error::Config(format!(
                "discriminator needs at least {MIN_FRAMES} frames, got {}",
                s[0]
            )));
        }
        let mut x = clip.permute(&[1, 0, 2, 3]).reshape(&[1, 3, s[0], s[2], s[3]]);
        let mut us = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, u) = layer.forward(p, &x);
            x = y.leaky_relu(T::of(SLOPE));
            us.push(u);
        }
        let xs = x.shape();
        let scores = self
            .head
            .forward(p, &x.permute(&[0, 2, 3, 4, 1]))
            .reshape(&[xs[2], xs[3], xs[4]]);
        Ok(DiscriminatorOutput { scores, u: us })
    }

    /// Store the power-iteration vectors of a training forward pass.
    pub fn update_u<T: Scalar>(&self, store: &mut ParamStore<T>, u: Vec<Tensor<T>>) {
        for (layer, u) in self.layers.iter().zip(u) {
            store.set(layer.u, u);
        }
    }
}
