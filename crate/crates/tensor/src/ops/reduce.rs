use crate::{Scalar, Tensor, Var};

fn axis_sum<T: Scalar>(t: &Tensor<T>, axis: usize) -> Tensor<T> {
    let shape = t.shape();
    let outer: usize = shape[..axis].iter().product();
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![T::zero(); outer * inner];
    let d = t.data();
    for o in 0..outer {
        for k in 0..n {
            let src = &d[(o * n + k) * inner..(o * n + k + 1) * inner];
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (a, &b) in dst.iter_mut().zip(src) {
                *a = *a + b;
            }
        }
    }
    let mut s = shape.to_vec();
    s[axis] = 1;
    Tensor::new(&s, out)
}

impl<T: Scalar> Var<T> {
    pub fn sum(&self) -> Var<T> {
        let v = self.value();
        let out = Tensor::scalar(v.sum());
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| vec![Some(Tensor::full(ctx.input(0).shape(), ctx.grad.item()))]),
        )
    }

    pub fn mean(&self) -> Var<T> {
        let n = T::of(self.value().numel().max(1) as f64);
        self.sum().scale(T::one() / n)
    }

    /// Sum over `axis`, keeping it with extent 1.
    pub fn sum_axis(&self, axis: usize) -> Var<T> {
        let out = axis_sum(&self.value(), axis);
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| vec![Some(ctx.grad.broadcast_to(ctx.input(0).shape()))]),
        )
    }

    pub fn mean_axis(&self, axis: usize) -> Var<T> {
        let n = T::of(self.value().dim(axis) as f64);
        self.sum_axis(axis).scale(T::one() / n)
    }
}
