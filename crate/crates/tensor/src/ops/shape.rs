use std::rc::Rc;

use crate::tensor::{numel, strides};
use crate::{Scalar, Tensor, Var};

/// Sentinel in a gather index meaning "write zero".
pub const ZERO_INDEX: usize = usize::MAX;

/// Border handling for [`Var::pad`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadMode {
    Zeros,
    Replicate,
}

impl<T: Scalar> Var<T> {
    pub fn reshape(&self, shape: &[usize]) -> Var<T> {
        let v = self.value();
        assert_eq!(numel(shape), v.numel(), "reshape {:?} -> {shape:?}", v.shape());
        let out = (*v).clone().reshape(shape);
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| vec![Some(ctx.grad.clone().reshape(ctx.input(0).shape()))]),
        )
    }

    pub fn permute(&self, perm: &[usize]) -> Var<T> {
        let out = self.value().permute(perm);
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| vec![Some(ctx.grad.permute(&inv))]),
        )
    }

    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Var<T> {
        let out = self.value().narrow(axis, start, len);
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| {
                let shape = ctx.input(0).shape();
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let n = shape[axis];
                let mut g = Tensor::zeros(shape);
                let src = ctx.grad.data();
                let dst = g.data_mut();
                for o in 0..outer {
                    let a = (o * n + start) * inner;
                    let b = o * len * inner;
                    dst[a..a + len * inner].copy_from_slice(&src[b..b + len * inner]);
                }
                vec![Some(g)]
            }),
        )
    }

    pub fn concat(parts: &[&Var<T>], axis: usize) -> Var<T> {
        assert!(!parts.is_empty(), "concat of nothing");
        let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
        let refs: Vec<&Tensor<T>> = values.iter().map(|v| &**v).collect();
        let out = Tensor::concat(&refs, axis);
        let lens: Vec<usize> = values.iter().map(|v| v.dim(axis)).collect();
        parts[0].graph().record(
            out,
            parts,
            Box::new(move |ctx| {
                let mut start = 0;
                lens.iter()
                    .map(|&l| {
                        let g = ctx.grad.narrow(axis, start, l);
                        start += l;
                        Some(g)
                    })
                    .collect()
            }),
        )
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Var<T> {
        let out = self.value().broadcast_to(shape);
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| vec![Some(ctx.grad.reduce_to(ctx.input(0).shape()))]),
        )
    }

    /// `out[i] = self[index[i]]` (or zero for [`ZERO_INDEX`]); backward scatter-adds.
    pub fn gather(&self, out_shape: &[usize], index: Rc<Vec<usize>>) -> Var<T> {
        assert_eq!(numel(out_shape), index.len(), "gather index length");
        let v = self.value();
        let src = v.data();
        let data = index
            .iter()
            .map(|&i| if i == ZERO_INDEX { T::zero() } else { src[i] })
            .collect();
        let out = Tensor::new(out_shape, data);
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| {
                let mut g = Tensor::zeros(ctx.input(0).shape());
                let dst = g.data_mut();
                for (&i, &gv) in index.iter().zip(ctx.grad.data()) {
                    if i != ZERO_INDEX {
                        dst[i] = dst[i] + gv;
                    }
                }
                vec![Some(g)]
            }),
        )
    }

    /// Pad every axis by `(before, after)`.
    pub fn pad(&self, pads: &[(usize, usize)], mode: PadMode) -> Var<T> {
        let shape = self.shape();
        assert_eq!(pads.len(), shape.len(), "pad rank mismatch");
        if pads.iter().all(|&(a, b)| a == 0 && b == 0) {
            return self.clone();
        }
        let (out_shape, index) = pad_index(&shape, pads, mode);
        self.gather(&out_shape, Rc::new(index))
    }
}

/// Gather index implementing a pad.
pub fn pad_index(shape: &[usize], pads: &[(usize, usize)], mode: PadMode) -> (Vec<usize>, Vec<usize>) {
    let out_shape: Vec<usize> = shape
        .iter()
        .zip(pads)
        .map(|(&n, &(a, b))| n + a + b)
        .collect();
    let st = strides(shape);
    let total = numel(&out_shape);
    let nd = shape.len();
    let mut index = Vec::with_capacity(total);
    let mut idx = vec![0usize; nd];
    for _ in 0..total {
        let mut off = 0usize;
        let mut zero = false;
        for d in 0..nd {
            let p = idx[d] as isize - pads[d].0 as isize;
            let n = shape[d] as isize;
            let q = if p < 0 || p >= n {
                match mode {
                    PadMode::Zeros => {
                        zero = true;
                        break;
                    }
                    PadMode::Replicate => p.clamp(0, n - 1),
                }
            } else {
                p
            };
            off += q as usize * st[d];
        }
        index.push(if zero { ZERO_INDEX } else { off });
        for d in (0..nd).rev() {
            idx[d] += 1;
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    (out_shape, index)
}
