use fgt_tensor::{Scalar, Tensor, Var};
use serde::Serialize;

/// Per-region L1 terms and their weighted total.
#[derive(Clone, Debug, Serialize)]
pub struct ReconTerms<V> {
    pub hole: V,
    pub valid: V,
    pub total: V,
}

impl<T: Scalar> ReconTerms<Var<T>> {
    pub fn values(&self) -> ReconTerms<f64> {
        ReconTerms {
            hole: self.hole.value().item().as_f64(),
            valid: self.valid.value().item().as_f64(),
            total: self.total.value().item().as_f64(),
        }
    }
}

/// Mean absolute error over the samples where `weight` is 1; zero (as a constant)
/// for an empty region.
fn region_l1<T: Scalar>(diff: &Var<T>, weight: &Tensor<T>, channels: usize) -> Var<T> {
    let n: f64 = weight.data().iter().map(|v| v.as_f64()).sum::<f64>() * channels as f64;
    if n == 0.0 {
        return diff.graph().constant(Tensor::scalar(T::zero()));
    }
    let w = diff.graph().constant(weight.clone());
    diff.mul(&w).sum().scale(T::of(1.0 / n))
}

/// `λ_hole·L1(pred, gt | M) + λ_valid·L1(pred, gt | 1 − M)`.
///
/// `pred, gt: [T, C, H, W]`, `mask: [T, 1, H, W]` with 1 on holes.
pub fn reconstruction_loss<T: Scalar>(
    pred: &Var<T>,
    gt: &Var<T>,
    mask: &Tensor<T>,
    lambda_hole: f64,
    lambda_valid: f64,
) -> ReconTerms<Var<T>> {
    let s = pred.shape();
    assert_eq!(s, gt.shape(), "reconstruction_loss shapes");
    assert_eq!(mask.shape(), &[s[0], 1, s[2], s[3]], "reconstruction_loss mask shape");
    let diff = pred.sub(gt).abs();
    let hole = region_l1(&diff, mask, s[1]);
    let valid = region_l1(&diff, &mask.map(|v| T::one() - v), s[1]);
    let total = hole.scale(T::of(lambda_hole)).add(&valid.scale(T::of(lambda_valid)));
    ReconTerms { hole, valid, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::Graph;

    #[test]
    fn reference_points() {
        let g = Graph::<f64>::inference();
        let gt = Tensor::from_fn(&[2, 3, 4, 5], |i| (i as f64 * 0.1).sin().abs());
        let mask = Tensor::from_fn(&[2, 1, 4, 5], |i| if i % 3 == 0 { 1.0 } else { 0.0 });
        let y = g.constant(gt.clone());
        assert_eq!(reconstruction_loss(&y, &y, &mask, 1.0, 1.0).values().total, 0.0);
        let shifted = g.constant(gt.map(|v| v + 0.1));
        let t = reconstruction_loss(&shifted, &y, &mask, 1.0, 1.0).values();
        assert!((t.total - 0.2).abs() < 1e-12 && (t.hole - 0.1).abs() < 1e-12);
        let none = Tensor::zeros(&[2, 1, 4, 5]);
        let t = reconstruction_loss(&shifted, &y, &none, 1.0, 1.0).values();
        assert_eq!(t.hole, 0.0);
        assert!((t.total - 0.1).abs() < 1e-12);
    }
}
