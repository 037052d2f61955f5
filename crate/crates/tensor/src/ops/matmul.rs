use crate::{Scalar, Tensor, Var};

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
pub struct MatView<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a, T> MatView<'a, T> {
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn maybe_t(self, flag: bool) -> Self {
        if flag {
            self.t()
        } else {
            self
        }
    }
}

/// `out = x · y + beta * out`, `out` row-major.
pub fn matmul_into<T: Scalar>(x: MatView<'_, T>, y: MatView<'_, T>, out: &mut [T], beta: T) {
    assert_eq!(x.cols, y.rows, "matmul inner dimension mismatch");
    T::gemm(
        x.rows,
        x.cols,
        y.cols,
        T::one(),
        x.data,
        x.rs,
        x.cs,
        y.data,
        y.rs,
        y.cs,
        beta,
        out,
        y.cols,
        1,
    );
}

struct Dims {
    batch: usize,
    m: usize,
    n: usize,
    ar: usize,
    ac: usize,
    br: usize,
    bc: usize,
    shared_b: bool,
}

fn dims(a: &[usize], b: &[usize], ta: bool, tb: bool) -> (Dims, Vec<usize>) {
    assert!(a.len() >= 2 && b.len() >= 2, "matmul needs rank >= 2");
    let (ar, ac) = (a[a.len() - 2], a[a.len() - 1]);
    let (br, bc) = (b[b.len() - 2], b[b.len() - 1]);
    let (m, k) = if ta { (ac, ar) } else { (ar, ac) };
    let (k2, n) = if tb { (bc, br) } else { (br, bc) };
    assert_eq!(k, k2, "matmul inner dims: {a:?} x {b:?} (ta={ta}, tb={tb})");
    let abatch = &a[..a.len() - 2];
    let shared_b = b.len() == 2;
    if !shared_b {
        assert_eq!(abatch, &b[..b.len() - 2], "matmul batch dims: {a:?} x {b:?}");
    }
    let mut out = abatch.to_vec();
    out.push(m);
    out.push(n);
    (
        Dims {
            batch: abatch.iter().product(),
            m,
            n,
            ar,
            ac,
            br,
            bc,
            shared_b,
        },
        out,
    )
}

/// Batched `op(a) · op(b)` on plain tensors.
pub fn bmm_tensor<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, ta: bool, tb: bool) -> Tensor<T> {
    let (d, out_shape) = dims(a.shape(), b.shape(), ta, tb);
    let mut out = vec![T::zero(); d.batch * d.m * d.n];
    let (sa, sb) = (d.ar * d.ac, d.br * d.bc);
    for i in 0..d.batch {
        let av = MatView::row_major(&a.data()[i * sa..(i + 1) * sa], d.ar, d.ac).maybe_t(ta);
        let boff = if d.shared_b { 0 } else { i * sb };
        let bv = MatView::row_major(&b.data()[boff..boff + sb], d.br, d.bc).maybe_t(tb);
        matmul_into(av, bv, &mut out[i * d.m * d.n..(i + 1) * d.m * d.n], T::zero());
    }
    Tensor::new(&out_shape, out)
}

impl<T: Scalar> Var<T> {
    /// Batched matrix product `op(self) · op(other)` where `op` optionally transposes
    /// the last two axes. `other` may be rank 2 and is then shared across the batch.
    pub fn bmm(&self, other: &Var<T>, ta: bool, tb: bool) -> Var<T> {
        let out = bmm_tensor(&self.value(), &other.value(), ta, tb);
        self.graph().record(
            out,
            &[self, other],
            Box::new(move |ctx| {
                let (a, b) = (ctx.input(0), ctx.input(1));
                let (d, _) = dims(a.shape(), b.shape(), ta, tb);
                let (sa, sb) = (d.ar * d.ac, d.br * d.bc);
                let sg = d.m * d.n;
                let mut ga = Tensor::zeros(a.shape());
                let mut gb = Tensor::zeros(b.shape());
                for i in 0..d.batch {
                    let g = MatView::row_major(&ctx.grad.data()[i * sg..(i + 1) * sg], d.m, d.n);
                    let av = MatView::row_major(&a.data()[i * sa..(i + 1) * sa], d.ar, d.ac)
                        .maybe_t(ta);
                    let boff = if d.shared_b { 0 } else { i * sb };
                    let bv = MatView::row_major(&b.data()[boff..boff + sb], d.br, d.bc)
                        .maybe_t(tb);
                    let ga_i = &mut ga.data_mut()[i * sa..(i + 1) * sa];
                    if ta {
                        matmul_into(bv, g.t(), ga_i, T::zero());
                    } else {
                        matmul_into(g, bv.t(), ga_i, T::zero());
                    }
                    let beta = if d.shared_b { T::one() } else { T::zero() };
                    let gb_i = &mut gb.data_mut()[boff..boff + sb];
                    if tb {
                        matmul_into(g.t(), av, gb_i, beta);
                    } else {
                        matmul_into(av.t(), g, gb_i, beta);
                    }
                }
                vec![Some(ga), Some(gb)]
            }),
        )
    }

    pub fn matmul(&self, other: &Var<T>) -> Var<T> {
        self.bmm(other, false, false)
    }
}
