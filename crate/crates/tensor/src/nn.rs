//! Parameterized layers. Each layer holds [`ParamId`]s and is evaluated against a
//! [`Bound`] store.

use crate::ops::ConvSpec;
use crate::{Bound, Init, ParamId, ParamStore, Scalar, Var};

#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_dim: usize, out_dim: usize) -> Self {
        let init = Init::fan_in(in_dim);
        Self {
            weight: store.add(&format!("{name}.weight"), &[in_dim, out_dim], init),
            bias: Some(store.add(&format!("{name}.bias"), &[out_dim], init)),
            in_dim,
            out_dim,
        }
    }

    /// `x: [..., in_dim] -> [..., out_dim]`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        let shape = x.shape();
        assert_eq!(*shape.last().unwrap(), self.in_dim, "linear input width");
        let rows = x.value().numel() / self.in_dim;
        let mut y = x.reshape(&[rows, self.in_dim]).matmul(p.get(self.weight));
        if let Some(b) = self.bias {
            y = y.add(p.get(b));
        }
        let mut out = shape;
        *out.last_mut().unwrap() = self.out_dim;
        y.reshape(&out)
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, dim: usize) -> Self {
        Self {
            gamma: store.add(&format!("{name}.gamma"), &[dim], Init::Const(1.0)),
            beta: store.add(&format!("{name}.beta"), &[dim], Init::Const(0.0)),
            eps: 1e-5,
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        x.layer_norm_last(T::of(self.eps))
            .mul(p.get(self.gamma))
            .add(p.get(self.beta))
    }
}

/// 3-D convolution on `[B, C, D, H, W]`.
#[derive(Clone, Debug)]
pub struct Conv3d {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub spec: ConvSpec,
}

impl Conv3d {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: [usize; 3],
        spec: ConvSpec,
    ) -> Self {
        let cig = in_ch / spec.groups;
        let init = Init::fan_in(cig * kernel.iter().product::<usize>());
        Self {
            weight: store.add(
                &format!("{name}.weight"),
                &[out_ch, cig, kernel[0], kernel[1], kernel[2]],
                init,
            ),
            bias: Some(store.add(&format!("{name}.bias"), &[out_ch], init)),
            spec,
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        x.conv3d(p.get(self.weight), self.bias.map(|b| p.get(b)), self.spec)
    }
}

/// 2-D convolution on `[N, C, H, W]`.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl Conv2d {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Self::grouped(store, name, in_ch, out_ch, kernel, stride, padding, 1)
    }

    /// Depth-wise when `groups == in_ch == out_ch`.
    #[allow(clippy::too_many_arguments)]
    pub fn grouped<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
    ) -> Self {
        let cig = in_ch / groups;
        let init = Init::fan_in(cig * kernel * kernel);
        Self {
            weight: store.add(&format!("{name}.weight"), &[out_ch, cig, kernel, kernel], init),
            bias: Some(store.add(&format!("{name}.bias"), &[out_ch], init)),
            stride,
            padding,
            groups,
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        x.conv2d(
            p.get(self.weight),
            self.bias.map(|b| p.get(b)),
            self.stride,
            self.padding,
            self.groups,
        )
    }
}

/// 2-D transposed convolution on `[N, C, H, W]`.
#[derive(Clone, Debug)]
pub struct ConvTranspose2d {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub stride: usize,
    pub padding: usize,
    pub output_padding: usize,
}

impl ConvTranspose2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        output_padding: usize,
    ) -> Self {
        let init = Init::fan_in(out_ch * kernel * kernel);
        Self {
            weight: store.add(&format!("{name}.weight"), &[in_ch, out_ch, kernel, kernel], init),
            bias: Some(store.add(&format!("{name}.bias"), &[out_ch], init)),
            stride,
            padding,
            output_padding,
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        x.conv_transpose2d(
            p.get(self.weight),
            self.bias.map(|b| p.get(b)),
            self.stride,
            self.padding,
            self.output_padding,
        )
    }
}
