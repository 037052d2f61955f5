use fgt_tensor::Scalar;

use super::field::{check_same, FlowField, RegionMask};
use crate::error::{Error, Result};

/// Mean end-point error over `region`.
pub fn epe<T: Scalar>(pred: &FlowField<T>, gt: &FlowField<T>, region: &RegionMask) -> Result<f64> {
    check_same("epe", pred, gt)?;
    check_same("epe region", pred, region)?;
    let n = region.count();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    let mut acc = 0.0;
    for (i, _) in region.data().iter().enumerate().filter(|(_, &m)| m) {
        let dx = pred.data()[2 * i].as_f64() - gt.data()[2 * i].as_f64();
        let dy = pred.data()[2 * i + 1].as_f64() - gt.data()[2 * i + 1].as_f64();
        acc += dx.hypot(dy);
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_offset() {
        let gt = FlowField::<f32>::from_fn(4, 4, |x, y| (x as f32, -(y as f32)));
        let mut pred = gt.clone();
        for v in pred.data_mut().chunks_exact_mut(2) {
            v[0] += 3.0;
            v[1] += 4.0;
        }
        let all = RegionMask::full(4, 4);
        assert!((epe(&pred, &gt, &all).unwrap() - 5.0).abs() < 1e-6);
        assert_eq!(epe(&gt, &gt, &all).unwrap(), 0.0);
        assert!(matches!(epe(&gt, &gt, &RegionMask::empty(4, 4)), Err(Error::EmptyRegion)));
    }
}
