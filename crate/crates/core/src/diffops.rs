//! Differentiable building blocks shared by the trainable models.

use std::rc::Rc;

use fgt_tensor::{PadMode, Scalar, Tensor, Var};

use crate::flowcore::{Bilinear, RegionMask};

/// Forward difference along the last axis (`dir = 0`) or the one before it
/// (`dir = 1`), with the missing final difference set to zero.
pub fn forward_diff<T: Scalar>(x: &Var<T>, dir: usize) -> Var<T> {
    let s = x.shape();
    let axis = s.len() - 1 - dir;
    let n = s[axis];
    let d = x.narrow(axis, 1, n - 1).sub(&x.narrow(axis, 0, n - 1));
    let mut pads = vec![(0, 0); s.len()];
    pads[axis] = (0, 1);
    d.pad(&pads, PadMode::Zeros)
}

/// x- and y-differences stacked on a new leading-component axis: `[..., H, W]`
/// becomes `[2, ..., H, W]`.
pub fn gradients<T: Scalar>(x: &Var<T>) -> Var<T> {
    let s = x.shape();
    let mut one = vec![1];
    one.extend_from_slice(&s);
    Var::concat(&[&forward_diff(x, 0).reshape(&one), &forward_diff(x, 1).reshape(&one)], 0)
}

/// Mean of `|a − b|` over the pixels where `region` is set and every channel.
///
/// `a`, `b`: `[C, H, W]`; `region` `H×W`. Returns `None` for an empty region.
pub fn masked_l1<T: Scalar>(a: &Var<T>, b: &Var<T>, region: &RegionMask) -> Option<Var<T>> {
    let n = region.count();
    if n == 0 {
        return None;
    }
    let c = a.shape()[0];
    let w = a.graph().constant(region.to_tensor());
    let s = a.sub(b).abs().mul(&w).sum();
    Some(s.scale(T::of(1.0 / (n * c) as f64)))
}

/// Bilinear backward warp of a constant image `[C, H, W]` by a differentiable flow
/// `[2, H, W]`, edge clamped. Gradients flow only into `flow`.
pub fn warp_image<T: Scalar>(image: &Tensor<T>, flow: &Var<T>) -> Var<T> {
    let s = image.shape().to_vec();
    let (c, h, w) = (s[0], s[1], s[2]);
    assert_eq!(flow.shape(), vec![2, h, w], "warp_image flow shape");
    let fv = flow.value();
    let plane = h * w;
    let mut out = vec![T::zero(); c * plane];
    // d out / d (dx, dy) per pixel and channel
    let mut dfx = vec![T::zero(); c * plane];
    let mut dfy = vec![T::zero(); c * plane];
    let img = image.data();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let px = x as f64 + fv.data()[i].as_f64();
            let py = y as f64 + fv.data()[plane + i].as_f64();
            let b = Bilinear::at(px, py, w, h);
            // clamped coordinates do not move with the flow
            let gx_live = px > 0.0 && px < (w - 1) as f64;
            let gy_live = py > 0.0 && py < (h - 1) as f64;
            for ch in 0..c {
                let at = |xx: usize, yy: usize| img[ch * plane + yy * w + xx].as_f64();
                let (v00, v10, v01, v11) = (at(b.x0, b.y0), at(b.x1, b.y0), at(b.x0, b.y1), at(b.x1, b.y1));
                let top = v00 * (1.0 - b.wx) + v10 * b.wx;
                let bot = v01 * (1.0 - b.wx) + v11 * b.wx;
                out[ch * plane + i] = T::of(top * (1.0 - b.wy) + bot * b.wy);
                if gx_live {
                    dfx[ch * plane + i] = T::of((v10 - v00) * (1.0 - b.wy) + (v11 - v01) * b.wy);
                }
                if gy_live {
                    dfy[ch * plane + i] = T::of(bot - top);
                }
            }
        }
    }
    let (dfx, dfy) = (Rc::new(dfx), Rc::new(dfy));
    flow.graph().custom(Tensor::new(&s, out), &[flow], move |ctx| {
        let g = ctx.grad.data();
        let mut gf = vec![T::zero(); 2 * plane];
        for ch in 0..c {
            for i in 0..plane {
                let k = ch * plane + i;
                gf[i] = gf[i] + g[k] * dfx[k];
                gf[plane + i] = gf[plane + i] + g[k] * dfy[k];
            }
        }
        vec![Some(Tensor::new(&[2, h, w], gf))]
    })
}

/// Mean binary cross-entropy of `sigmoid(logits)` against binary `target`, stable form.
pub fn bce_with_logits<T: Scalar>(logits: &Var<T>, target: &Tensor<T>) -> Var<T> {
    // softplus(z) - y z
    let y = logits.graph().constant(target.clone());
    logits.softplus().sub(&logits.mul(&y)).mean()
}
