use fgt_tensor::Scalar;

use super::field::{FlowField, RegionMask};
use super::warp::{check_flow_pair, in_bounds, sample_flow};
use crate::error::{Error, Result};

/// Absolute round-trip threshold in pixels.
pub const DEFAULT_TAU: f64 = 0.5;

/// Forward-backward round-trip residual at `(x, y)`, or None when the forward
/// target leaves the image.
pub fn round_trip_residual<T: Scalar>(fwd: &FlowField<T>, bwd: &FlowField<T>, x: usize, y: usize) -> Option<f64> {
    let (dx, dy) = fwd.get(x, y);
    let (dx, dy) = (dx.as_f64(), dy.as_f64());
    let (px, py) = (x as f64 + dx, y as f64 + dy);
    if !in_bounds(px, py, fwd.width(), fwd.height()) {
        return None;
    }
    let (bx, by) = sample_flow(bwd, px, py);
    Some((dx + bx).hypot(dy + by))
}

/// `true` where the forward flow is not undone by the backward flow within `tau`
/// pixels, or where the round trip leaves the image.
pub fn fb_consistency_mask<T: Scalar>(fwd: &FlowField<T>, bwd: &FlowField<T>, tau: f64) -> Result<RegionMask> {
    check_flow_pair(fwd, bwd)?;
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("consistency threshold must be >= 0, got {tau}")));
    }
    Ok(RegionMask::from_fn(fwd.width(), fwd.height(), |x, y| {
        match round_trip_residual(fwd, bwd, x, y) {
            Some(r) => r > tau,
            None => true,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_is_consistent() {
        let f = FlowField::<f64>::constant(8, 6, 0.7, -0.3);
        for tau in [1e-9, 0.1, 2.0] {
            let occ = fb_consistency_mask(&f, &f.negated(), tau).unwrap();
            // only pixels whose target leaves the frame remain flagged
            for y in 0..6 {
                for x in 0..8 {
                    let inside = in_bounds(x as f64 + 0.7, y as f64 - 0.3, 8, 6);
                    assert_eq!(occ.get(x, y), !inside);
                }
            }
        }
    }

    #[test]
    fn zero_tau_flags_any_residual() {
        let f = FlowField::<f32>::constant(5, 5, 1.0, 0.0);
        let occ = fb_consistency_mask(&f, &FlowField::zeros(5, 5), 0.0).unwrap();
        assert_eq!(occ.count(), 25);
    }

    #[test]
    fn negative_tau_rejected() {
        let f = FlowField::<f32>::zeros(3, 3);
        assert!(fb_consistency_mask(&f, &f, -1.0).is_err());
    }
}
