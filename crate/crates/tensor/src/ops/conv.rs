//! 3-D convolution and its transpose over `[B, C, D, H, W]` via im2col + gemm.
//! 2-D and 1-D temporal convolutions are the `D = 1` and `kh = kw = 1` cases.

use crate::ops::matmul::{matmul_into, MatView};
use crate::{Scalar, Tensor, Var};

/// Convolution hyper-parameters, ordered (depth, height, width).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: [usize; 3],
    pub padding: [usize; 3],
    pub groups: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        Self {
            stride: [1; 3],
            padding: [0; 3],
            groups: 1,
        }
    }
}

impl ConvSpec {
    pub fn new(stride: [usize; 3], padding: [usize; 3]) -> Self {
        Self {
            stride,
            padding,
            groups: 1,
        }
    }

    pub fn groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    /// Spatial-only spec for a `D = 1` volume.
    pub fn spatial(stride: usize, padding: usize) -> Self {
        Self::new([1, stride, stride], [0, padding, padding])
    }
}

/// Geometry of the "image" side (`inp`) and the "column" side (`out`) of an im2col.
#[derive(Clone, Copy, Debug)]
struct Geom {
    inp: [usize; 3],
    kernel: [usize; 3],
    stride: [usize; 3],
    padding: [usize; 3],
    out: [usize; 3],
}

impl Geom {
    fn conv(inp: [usize; 3], kernel: [usize; 3], spec: &ConvSpec) -> Self {
        let mut out = [0; 3];
        for a in 0..3 {
            let span = inp[a] + 2 * spec.padding[a];
            assert!(
                span >= kernel[a],
                "kernel {kernel:?} larger than padded input {inp:?}"
            );
            out[a] = (span - kernel[a]) / spec.stride[a] + 1;
        }
        Self {
            inp,
            kernel,
            stride: spec.stride,
            padding: spec.padding,
            out,
        }
    }

    fn k(&self) -> usize {
        self.kernel.iter().product()
    }

    fn p_in(&self) -> usize {
        self.inp.iter().product()
    }

    fn p_out(&self) -> usize {
        self.out.iter().product()
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == [1; 3] && self.stride == [1; 3] && self.padding == [0; 3]
    }
}

/// Shared offsets of one kernel tap along one axis: for every output coordinate
/// the input coordinate, or None if it falls in padding.
fn tap_map(g: &Geom, axis: usize, k: usize) -> Vec<Option<usize>> {
    (0..g.out[axis])
        .map(|o| {
            let i = (o * g.stride[axis] + k) as isize - g.padding[axis] as isize;
            (i >= 0 && (i as usize) < g.inp[axis]).then_some(i as usize)
        })
        .collect()
}

/// `img` is `[c, inp...]`, `cols` is `[c * k, out...]`.
fn im2col<T: Scalar>(img: &[T], c: usize, g: &Geom, cols: &mut [T]) {
    let [id, ih, iw] = g.inp;
    let [kd, kh, kw] = g.kernel;
    let [od, oh, ow] = g.out;
    let po = od * oh * ow;
    for kz in 0..kd {
        let mz = tap_map(g, 0, kz);
        for ky in 0..kh {
            let my = tap_map(g, 1, ky);
            for kx in 0..kw {
                let mx = tap_map(g, 2, kx);
                for ch in 0..c {
                    let row = ((ch * kd + kz) * kh + ky) * kw + kx;
                    let dst = &mut cols[row * po..(row + 1) * po];
                    let src = &img[ch * id * ih * iw..(ch + 1) * id * ih * iw];
                    let mut p = 0;
                    for z in &mz {
                        for y in &my {
                            match (z, y) {
                                (Some(z), Some(y)) => {
                                    let base = (z * ih + y) * iw;
                                    for x in &mx {
                                        dst[p] = match x {
                                            Some(x) => src[base + x],
                                            None => T::zero(),
                                        };
                                        p += 1;
                                    }
                                }
                                _ => {
                                    for v in &mut dst[p..p + ow] {
                                        *v = T::zero();
                                    }
                                    p += ow;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulate columns back into `img`.
fn col2im<T: Scalar>(cols: &[T], c: usize, g: &Geom, img: &mut [T]) {
    let [id, ih, iw] = g.inp;
    let [kd, kh, kw] = g.kernel;
    let [od, oh, ow] = g.out;
    let po = od * oh * ow;
    for kz in 0..kd {
        let mz = tap_map(g, 0, kz);
        for ky in 0..kh {
            let my = tap_map(g, 1, ky);
            for kx in 0..kw {
                let mx = tap_map(g, 2, kx);
                for ch in 0..c {
                    let row = ((ch * kd + kz) * kh + ky) * kw + kx;
                    let src = &cols[row * po..(row + 1) * po];
                    let dst = &mut img[ch * id * ih * iw..(ch + 1) * id * ih * iw];
                    let mut p = 0;
                    for z in &mz {
                        for y in &my {
                            if let (Some(z), Some(y)) = (z, y) {
                                let base = (z * ih + y) * iw;
                                for x in &mx {
                                    if let Some(x) = x {
                                        dst[base + x] = dst[base + x] + src[p];
                                    }
                                    p += 1;
                                }
                            } else {
                                p += ow;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn dims5(shape: &[usize]) -> [usize; 5] {
    assert_eq!(shape.len(), 5, "expected [B, C, D, H, W], got {shape:?}");
    [shape[0], shape[1], shape[2], shape[3], shape[4]]
}

fn conv3d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: &ConvSpec,
) -> Tensor<T> {
    let [b, ci, d, h, wd] = dims5(x.shape());
    let [co, cig, kd, kh, kw] = dims5(w.shape());
    let groups = spec.groups;
    assert!(ci % groups == 0 && co % groups == 0, "channels not divisible by groups");
    assert_eq!(cig, ci / groups, "conv weight input channels {cig} vs {ci}/{groups}");
    let g = Geom::conv([d, h, wd], [kd, kh, kw], spec);
    let cog = co / groups;
    let (k, pi, po) = (cig * g.k(), g.p_in(), g.p_out());
    let mut out = vec![T::zero(); b * co * po];
    let mut cols = if g.is_pointwise() { Vec::new() } else { vec![T::zero(); k * po] };
    for bi in 0..b {
        for gi in 0..groups {
            let img = &x.data()[(bi * ci + gi * cig) * pi..(bi * ci + (gi + 1) * cig) * pi];
            let colv = if g.is_pointwise() {
                MatView::row_major(img, k, po)
            } else {
                im2col(img, cig, &g, &mut cols);
                MatView::row_major(&cols, k, po)
            };
            let wv = MatView::row_major(&w.data()[gi * cog * k..(gi + 1) * cog * k], cog, k);
            let o = &mut out[(bi * co + gi * cog) * po..(bi * co + (gi + 1) * cog) * po];
            matmul_into(wv, colv, o, T::zero());
        }
        if let Some(bias) = bias {
            for c in 0..co {
                let bv = bias.data()[c];
                for v in &mut out[(bi * co + c) * po..(bi * co + c + 1) * po] {
                    *v = *v + bv;
                }
            }
        }
    }
    Tensor::new(&[b, co, g.out[0], g.out[1], g.out[2]], out)
}

fn bias_grad<T: Scalar>(grad: &Tensor<T>) -> Tensor<T> {
    let [b, c, d, h, w] = dims5(grad.shape());
    let p = d * h * w;
    let mut out = vec![T::zero(); c];
    for bi in 0..b {
        for (ch, o) in out.iter_mut().enumerate() {
            *o = *o + grad.data()[(bi * c + ch) * p..(bi * c + ch + 1) * p].iter().copied().sum();
        }
    }
    Tensor::new(&[c], out)
}

fn conv3d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad: &Tensor<T>,
    spec: &ConvSpec,
) -> (Tensor<T>, Tensor<T>) {
    let [b, ci, d, h, wd] = dims5(x.shape());
    let [co, cig, kd, kh, kw] = dims5(w.shape());
    let groups = spec.groups;
    let g = Geom::conv([d, h, wd], [kd, kh, kw], spec);
    let cog = co / groups;
    let (k, pi, po) = (cig * g.k(), g.p_in(), g.p_out());
    let mut gx = Tensor::zeros(x.shape());
    let mut gw = Tensor::zeros(w.shape());
    let mut cols = vec![T::zero(); k * po];
    let mut gcols = vec![T::zero(); k * po];
    for bi in 0..b {
        for gi in 0..groups {
            let img = &x.data()[(bi * ci + gi * cig) * pi..(bi * ci + (gi + 1) * cig) * pi];
            let gv = MatView::row_major(
                &grad.data()[(bi * co + gi * cog) * po..(bi * co + (gi + 1) * cog) * po],
                cog,
                po,
            );
            let wv = MatView::row_major(&w.data()[gi * cog * k..(gi + 1) * cog * k], cog, k);
            let gwg = &mut gw.data_mut()[gi * cog * k..(gi + 1) * cog * k];
            let gxi = &mut gx.data_mut()[(bi * ci + gi * cig) * pi..(bi * ci + (gi + 1) * cig) * pi];
            if g.is_pointwise() {
                matmul_into(gv, MatView::row_major(img, k, po).t(), gwg, T::one());
                matmul_into(wv.t(), gv, gxi, T::one());
            } else {
                im2col(img, cig, &g, &mut cols);
                matmul_into(gv, MatView::row_major(&cols, k, po).t(), gwg, T::one());
                matmul_into(wv.t(), gv, &mut gcols, T::zero());
                col2im(&gcols, cig, &g, gxi);
            }
        }
    }
    (gx, gw)
}

/// Output extent of a transposed convolution along one axis.
pub fn conv_transpose_extent(n: usize, kernel: usize, stride: usize, padding: usize, output_padding: usize) -> usize {
    (n - 1) * stride + kernel + output_padding - 2 * padding
}

fn convt_geom(x: &[usize; 5], w: &[usize; 5], spec: &ConvSpec, output_padding: [usize; 3]) -> Geom {
    let [_, _, d, h, wd] = *x;
    let [_, _, kd, kh, kw] = *w;
    let k = [kd, kh, kw];
    let inp = [d, h, wd];
    let mut full = [0; 3];
    for a in 0..3 {
        full[a] = conv_transpose_extent(inp[a], k[a], spec.stride[a], spec.padding[a], output_padding[a]);
    }
    // im2col "image" side is the transposed conv's output.
    let g = Geom::conv(full, k, spec);
    assert_eq!(g.out, inp, "inconsistent transposed-conv geometry");
    g
}

fn conv_transpose3d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: &ConvSpec,
    output_padding: [usize; 3],
) -> Tensor<T> {
    let xs = dims5(x.shape());
    let ws = dims5(w.shape());
    let [b, ci, ..] = xs;
    let [wci, cog, ..] = ws;
    assert_eq!(wci, ci, "transposed conv weight must be [C_in, C_out/groups, k...]");
    let groups = spec.groups;
    let cig = ci / groups;
    let co = cog * groups;
    let g = convt_geom(&xs, &ws, spec, output_padding);
    let k = cog * g.k();
    // image side = output, column side = input
    let (pimg, pcol) = (g.p_in(), g.p_out());
    let mut out = vec![T::zero(); b * co * pimg];
    let mut cols = vec![T::zero(); k * pcol];
    for bi in 0..b {
        for gi in 0..groups {
            let xv = MatView::row_major(
                &x.data()[(bi * ci + gi * cig) * pcol..(bi * ci + (gi + 1) * cig) * pcol],
                cig,
                pcol,
            );
            let wv = MatView::row_major(&w.data()[gi * cig * k..(gi + 1) * cig * k], cig, k);
            matmul_into(wv.t(), xv, &mut cols, T::zero());
            col2im(
                &cols,
                cog,
                &g,
                &mut out[(bi * co + gi * cog) * pimg..(bi * co + (gi + 1) * cog) * pimg],
            );
        }
        if let Some(bias) = bias {
            for c in 0..co {
                let bv = bias.data()[c];
                for v in &mut out[(bi * co + c) * pimg..(bi * co + c + 1) * pimg] {
                    *v = *v + bv;
                }
            }
        }
    }
    Tensor::new(&[b, co, g.inp[0], g.inp[1], g.inp[2]], out)
}

fn conv_transpose3d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad: &Tensor<T>,
    spec: &ConvSpec,
    output_padding: [usize; 3],
) -> (Tensor<T>, Tensor<T>) {
    let xs = dims5(x.shape());
    let ws = dims5(w.shape());
    let [b, ci, ..] = xs;
    let [_, cog, ..] = ws;
    let groups = spec.groups;
    let cig = ci / groups;
    let co = cog * groups;
    let g = convt_geom(&xs, &ws, spec, output_padding);
    let k = cog * g.k();
    let (pimg, pcol) = (g.p_in(), g.p_out());
    let mut gx = Tensor::zeros(x.shape());
    let mut gw = Tensor::zeros(w.shape());
    let mut gcols = vec![T::zero(); k * pcol];
    for bi in 0..b {
        for gi in 0..groups {
            let gimg = &grad.data()[(bi * co + gi * cog) * pimg..(bi * co + (gi + 1) * cog) * pimg];
            im2col(gimg, cog, &g, &mut gcols);
            let gc = MatView::row_major(&gcols, k, pcol);
            let xv = MatView::row_major(
                &x.data()[(bi * ci + gi * cig) * pcol..(bi * ci + (gi + 1) * cig) * pcol],
                cig,
                pcol,
            );
            let wv = MatView::row_major(&w.data()[gi * cig * k..(gi + 1) * cig * k], cig, k);
            matmul_into(
                wv,
                gc,
                &mut gx.data_mut()[(bi * ci + gi * cig) * pcol..(bi * ci + (gi + 1) * cig) * pcol],
                T::zero(),
            );
            matmul_into(xv, gc.t(), &mut gw.data_mut()[gi * cig * k..(gi + 1) * cig * k], T::one());
        }
    }
    (gx, gw)
}

impl<T: Scalar> Var<T> {
    /// `self: [B, C_in, D, H, W]`, `weight: [C_out, C_in/groups, kd, kh, kw]`.
    pub fn conv3d(&self, weight: &Var<T>, bias: Option<&Var<T>>, spec: ConvSpec) -> Var<T> {
        let (xv, wv) = (self.value(), weight.value());
        let bv = bias.map(|b| b.value());
        let out = conv3d_forward(&xv, &wv, bv.as_deref(), &spec);
        let mut parents = vec![self, weight];
        parents.extend(bias);
        let has_bias = bias.is_some();
        self.graph().record(
            out,
            &parents,
            Box::new(move |ctx| {
                let (gx, gw) = conv3d_backward(ctx.input(0), ctx.input(1), ctx.grad, &spec);
                let mut v = vec![Some(gx), Some(gw)];
                if has_bias {
                    v.push(Some(bias_grad(ctx.grad)));
                }
                v
            }),
        )
    }

    /// `self: [B, C_in, D, H, W]`, `weight: [C_in, C_out/groups, kd, kh, kw]`.
    pub fn conv_transpose3d(
        &self,
        weight: &Var<T>,
        bias: Option<&Var<T>>,
        spec: ConvSpec,
        output_padding: [usize; 3],
    ) -> Var<T> {
        let (xv, wv) = (self.value(), weight.value());
        let bv = bias.map(|b| b.value());
        let out = conv_transpose3d_forward(&xv, &wv, bv.as_deref(), &spec, output_padding);
        let mut parents = vec![self, weight];
        parents.extend(bias);
        let has_bias = bias.is_some();
        self.graph().record(
            out,
            &parents,
            Box::new(move |ctx| {
                let (gx, gw) = conv_transpose3d_backward(
                    ctx.input(0),
                    ctx.input(1),
                    ctx.grad,
                    &spec,
                    output_padding,
                );
                let mut v = vec![Some(gx), Some(gw)];
                if has_bias {
                    v.push(Some(bias_grad(ctx.grad)));
                }
                v
            }),
        )
    }

    /// 2-D convolution on `[N, C, H, W]` (weight `[C_out, C_in/groups, kh, kw]`).
    pub fn conv2d(&self, weight: &Var<T>, bias: Option<&Var<T>>, stride: usize, padding: usize, groups: usize) -> Var<T> {
        let xs = self.shape();
        let ws = weight.shape();
        assert_eq!(xs.len(), 4, "conv2d expects [N, C, H, W]");
        let x5 = self.reshape(&[xs[0], xs[1], 1, xs[2], xs[3]]);
        let w5 = weight.reshape(&[ws[0], ws[1], 1, ws[2], ws[3]]);
        let y = x5.conv3d(&w5, bias, ConvSpec::spatial(stride, padding).groups(groups));
        let ys = y.shape();
        y.reshape(&[ys[0], ys[1], ys[3], ys[4]])
    }

    /// 2-D transposed convolution on `[N, C, H, W]` (weight `[C_in, C_out/groups, kh, kw]`).
    pub fn conv_transpose2d(
        &self,
        weight: &Var<T>,
        bias: Option<&Var<T>>,
        stride: usize,
        padding: usize,
        output_padding: usize,
    ) -> Var<T> {
        let xs = self.shape();
        let ws = weight.shape();
        assert_eq!(xs.len(), 4, "conv_transpose2d expects [N, C, H, W]");
        let x5 = self.reshape(&[xs[0], xs[1], 1, xs[2], xs[3]]);
        let w5 = weight.reshape(&[ws[0], ws[1], 1, ws[2], ws[3]]);
        let y = x5.conv_transpose3d(
            &w5,
            bias,
            ConvSpec::spatial(stride, padding),
            [0, output_padding, output_padding],
        );
        let ys = y.shape();
        y.reshape(&[ys[0], ys[1], ys[3], ys[4]])
    }
}

/// Plain (tape-free) 3-D convolution, used by tests and inference helpers.
pub fn conv3d_tensor<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: ConvSpec,
) -> Tensor<T> {
    conv3d_forward(x, w, bias, &spec)
}
