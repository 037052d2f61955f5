//! Multi-head attention and the window/zone partitions it runs on.

use fgt_tensor::nn::Linear;
use fgt_tensor::{Bound, PadMode, ParamStore, Scalar, Tensor, Var};

/// Additive score bias for padded keys.
pub const MASKED: f64 = -1e9;

/// Scaled dot-product attention over `heads` heads.
///
/// `q: [B, N, C]`, `k, v: [B, M, C]`, `key_bias: [B, M]` (0 or [`MASKED`]).
/// Returns the output `[B, N, C]` and the probabilities `[B·heads, N, M]`.
pub fn multi_head_attention<T: Scalar>(
    q: &Var<T>,
    k: &Var<T>,
    v: &Var<T>,
    heads: usize,
    key_bias: Option<&Tensor<T>>,
) -> (Var<T>, Var<T>) {
    let (qs, ks) = (q.shape(), k.shape());
    let (b, n, c) = (qs[0], qs[1], qs[2]);
    let m = ks[1];
    assert_eq!(c % heads, 0, "channels {c} not divisible by {heads} heads");
    let d = c / heads;
    let split = |x: &Var<T>, len: usize| x.reshape(&[b, len, heads, d]).permute(&[0, 2, 1, 3]).reshape(&[b * heads, len, d]);
    let (qh, kh, vh) = (split(q, n), split(k, m), split(v, m));
    let mut scores = qh.bmm(&kh, false, true).scale(T::of(1.0 / (d as f64).sqrt()));
    if let Some(bias) = key_bias {
        assert_eq!(bias.shape(), &[b, m], "key bias shape");
        let bias = q.graph().constant(bias.clone().reshape(&[b, 1, 1, m]));
        scores = scores.reshape(&[b, heads, n, m]).add(&bias).reshape(&[b * heads, n, m]);
    }
    let probs = scores.softmax_last();
    let out = probs
        .bmm(&vh, false, false)
        .reshape(&[b, heads, n, d])
        .permute(&[0, 2, 1, 3])
        .reshape(&[b, n, c]);
    (out, probs)
}

/// Rectangular partition of `[T, H, W, C]` maps into `ph×pw` patches, zero padded
/// to a multiple of the patch size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub ph: usize,
    pub pw: usize,
}

impl Partition {
    pub fn new(frames: usize, height: usize, width: usize, ph: usize, pw: usize) -> Self {
        assert!(ph >= 1 && pw >= 1);
        Self { frames, height, width, ph, pw }
    }

    pub fn rows(&self) -> usize {
        self.height.div_ceil(self.ph)
    }

    pub fn cols(&self) -> usize {
        self.width.div_ceil(self.pw)
    }

    pub fn padded(&self) -> (usize, usize) {
        (self.rows() * self.ph, self.cols() * self.pw)
    }

    /// `[T, H, W, C]` → `[T·rows·cols, ph·pw, C]`.
    pub fn split<T: Scalar>(&self, x: &Var<T>) -> Var<T> {
        let c = x.shape()[3];
        let (hp, wp) = self.padded();
        let x = x.pad(&[(0, 0), (0, hp - self.height), (0, wp - self.width), (0, 0)], PadMode::Zeros);
        x.reshape(&[self.frames, self.rows(), self.ph, self.cols(), self.pw, c])
            .permute(&[0, 1, 3, 2, 4, 5])
            .reshape(&[self.frames * self.rows() * self.cols(), self.ph * self.pw, c])
    }

    /// Inverse of [`Partition::split`], cropping the padding.
    pub fn merge<T: Scalar>(&self, x: &Var<T>) -> Var<T> {
        let c = x.shape()[2];
        let (hp, wp) = self.padded();
        x.reshape(&[self.frames, self.rows(), self.cols(), self.ph, self.pw, c])
            .permute(&[0, 1, 3, 2, 4, 5])
            .reshape(&[self.frames, hp, wp, c])
            .narrow(1, 0, self.height)
            .narrow(2, 0, self.width)
    }

    /// 1 where a patch slot holds a real (unpadded) token, per patch: `[T·rows·cols, ph·pw]`.
    pub fn valid(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.frames * self.rows() * self.cols() * self.ph * self.pw);
        for _ in 0..self.frames {
            for r in 0..self.rows() {
                for c in 0..self.cols() {
                    for y in 0..self.ph {
                        for x in 0..self.pw {
                            out.push(r * self.ph + y < self.height && c * self.pw + x < self.width);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Score bias that hides keys flagged false.
pub fn key_bias<T: Scalar>(rows: usize, valid: &[bool]) -> Option<Tensor<T>> {
    if valid.iter().all(|&v| v) {
        return None;
    }
    let m = valid.len() / rows;
    Some(Tensor::new(
        &[rows, m],
        valid.iter().map(|&v| if v { T::zero() } else { T::of(MASKED) }).collect(),
    ))
}

/// `Linear → GELU → Linear`.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

impl Mlp {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, input: usize, hidden: usize, output: usize) -> Self {
        Self {
            fc1: Linear::new(store, &format!("{name}.fc1"), input, hidden),
            fc2: Linear::new(store, &format!("{name}.fc2"), hidden, output),
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        self.fc2.forward(p, &self.fc1.forward(p, x).gelu())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::Graph;

    #[test]
    fn split_merge_round_trip_is_exact() {
        for (h, w, ph, pw) in [(8, 8, 4, 4), (7, 10, 4, 3), (5, 5, 5, 5), (3, 9, 2, 8)] {
            let g = Graph::<f32>::inference();
            let x = Tensor::from_fn(&[2, h, w, 3], |i| i as f32 * 0.25 - 7.0);
            let part = Partition::new(2, h, w, ph, pw);
            let back = part.merge(&part.split(&g.constant(x.clone()))).value();
            assert_eq!(*back, x);
        }
    }

    #[test]
    fn masked_keys_get_no_weight() {
        let g = Graph::<f64>::inference();
        let q = g.constant(Tensor::from_fn(&[1, 3, 4], |i| (i as f64).sin()));
        let k = g.constant(Tensor::from_fn(&[1, 5, 4], |i| (i as f64 * 0.3).cos()));
        let bias = key_bias::<f64>(1, &[true, true, false, true, false]).unwrap();
        let (_, p) = multi_head_attention(&q, &k, &k, 2, Some(&bias));
        for row in p.value().data().chunks(5) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row[2] < 1e-300 && row[4] < 1e-300);
        }
    }
}
