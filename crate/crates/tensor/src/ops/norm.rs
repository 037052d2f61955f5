use crate::{Scalar, Tensor, Var};

fn rows<T: Scalar>(t: &Tensor<T>) -> (usize, usize) {
    let n = *t.shape().last().expect("rank >= 1");
    (t.numel() / n.max(1), n)
}

/// Row-wise softmax over the last axis.
pub fn softmax_tensor<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (r, n) = rows(x);
    let mut out = x.clone();
    for i in 0..r {
        let row = &mut out.data_mut()[i * n..(i + 1) * n];
        let m = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s = s + *v;
        }
        for v in row.iter_mut() {
            *v = *v / s;
        }
    }
    out
}

impl<T: Scalar> Var<T> {
    pub fn softmax_last(&self) -> Var<T> {
        let out = softmax_tensor(&self.value());
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| {
                let y = ctx.output;
                let (r, n) = rows(y);
                let mut g = ctx.grad.clone();
                for i in 0..r {
                    let yr = &y.data()[i * n..(i + 1) * n];
                    let gr = &mut g.data_mut()[i * n..(i + 1) * n];
                    let dot: T = yr.iter().zip(gr.iter()).map(|(&a, &b)| a * b).sum();
                    for (gv, &yv) in gr.iter_mut().zip(yr) {
                        *gv = yv * (*gv - dot);
                    }
                }
                vec![Some(g)]
            }),
        )
    }

    /// Normalize the last axis to zero mean / unit variance (no affine).
    pub fn layer_norm_last(&self, eps: T) -> Var<T> {
        let x = self.value();
        let (r, n) = rows(&x);
        let nf = T::of(n as f64);
        let mut out = (*x).clone();
        let mut inv_std = vec![T::zero(); r];
        for i in 0..r {
            let row = &mut out.data_mut()[i * n..(i + 1) * n];
            let mean = row.iter().copied().sum::<T>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let is = (var + eps).sqrt().recip();
            inv_std[i] = is;
            for v in row.iter_mut() {
                *v = (*v - mean) * is;
            }
        }
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| {
                let y = ctx.output;
                let mut g = ctx.grad.clone();
                for i in 0..r {
                    let yr = &y.data()[i * n..(i + 1) * n];
                    let gr = &mut g.data_mut()[i * n..(i + 1) * n];
                    let mg = gr.iter().copied().sum::<T>() / nf;
                    let mgy = gr.iter().zip(yr).map(|(&a, &b)| a * b).sum::<T>() / nf;
                    for (gv, &yv) in gr.iter_mut().zip(yr) {
                        *gv = inv_std[i] * (*gv - mg - yv * mgy);
                    }
                }
                vec![Some(g)]
            }),
        )
    }
}
