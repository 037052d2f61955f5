use fgt_tensor::Scalar;

use super::field::{check_same, FlowField, Raster, RegionMask};
use crate::error::Result;

/// True when `(px, py)` lies inside the closed pixel-centre rectangle.
#[inline]
pub fn in_bounds(px: f64, py: f64, width: usize, height: usize) -> bool {
    px >= 0.0 && py >= 0.0 && px <= (width - 1) as f64 && py <= (height - 1) as f64
}

/// Bilinear corner indices and weights at an edge-clamped position.
#[derive(Clone, Copy, Debug)]
pub struct Bilinear {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub wx: f64,
    pub wy: f64,
}

impl Bilinear {
    pub fn at(px: f64, py: f64, width: usize, height: usize) -> Self {
        let cx = px.clamp(0.0, (width - 1) as f64);
        let cy = py.clamp(0.0, (height - 1) as f64);
        let x0 = (cx.floor() as usize).min(width - 1);
        let y0 = (cy.floor() as usize).min(height - 1);
        let x1 = (x0 + 1).min(width - 1);
        let y1 = (y0 + 1).min(height - 1);
        Self {
            x0,
            y0,
            x1,
            y1,
            wx: cx - x0 as f64,
            wy: cy - y0 as f64,
        }
    }

    /// Corners with their weights: (x, y, weight).
    pub fn taps(&self) -> [(usize, usize, f64); 4] {
        [
            (self.x0, self.y0, (1.0 - self.wx) * (1.0 - self.wy)),
            (self.x1, self.y0, self.wx * (1.0 - self.wy)),
            (self.x0, self.y1, (1.0 - self.wx) * self.wy),
            (self.x1, self.y1, self.wx * self.wy),
        ]
    }

    /// Interpolate channel `c` of an interleaved raster.
    #[inline]
    pub fn sample<T: Scalar>(&self, data: &[T], width: usize, channels: usize, c: usize) -> f64 {
        let at = |x: usize, y: usize| data[(y * width + x) * channels + c].as_f64();
        let top = at(self.x0, self.y0) * (1.0 - self.wx) + at(self.x1, self.y0) * self.wx;
        let bot = at(self.x0, self.y1) * (1.0 - self.wx) + at(self.x1, self.y1) * self.wx;
        top * (1.0 - self.wy) + bot * self.wy
    }
}

/// Bilinear sample of a flow at a real position (edge clamped).
pub fn sample_flow<T: Scalar>(flow: &FlowField<T>, px: f64, py: f64) -> (f64, f64) {
    let b = Bilinear::at(px, py, flow.width(), flow.height());
    (
        b.sample(flow.data(), flow.width(), 2, 0),
        b.sample(flow.data(), flow.width(), 2, 1),
    )
}

/// Backward warp: `out(x) = input(x + flow(x))`, bilinear with edge clamping.
///
/// The returned mask is `true` where the sample point left the image rectangle.
pub fn warp_backward<T: Scalar, R: Raster<T>>(input: &R, flow: &FlowField<T>) -> Result<(R, RegionMask)> {
    let (w, h) = (input.width(), input.height());
    if (w, h) != (flow.width(), flow.height()) {
        return Err(crate::error::shape_err(format!(
            "warp_backward: input {w}x{h} vs flow {}x{}",
            flow.width(),
            flow.height()
        )));
    }
    let c = R::CHANNELS;
    let src = input.samples();
    let mut out = Vec::with_capacity(w * h * c);
    let mut invalid = RegionMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = flow.get(x, y);
            let (px, py) = (x as f64 + dx.as_f64(), y as f64 + dy.as_f64());
            if !in_bounds(px, py, w, h) {
                invalid.set(x, y, true);
            }
            let b = Bilinear::at(px, py, w, h);
            for ch in 0..c {
                out.push(T::of(b.sample(src, w, c, ch)));
            }
        }
    }
    Ok((R::from_samples(w, h, out), invalid))
}

pub(crate) fn check_flow_pair<T: Scalar>(a: &FlowField<T>, b: &FlowField<T>) -> Result<()> {
    check_same("flow pair", a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowcore::field::Frame;

    #[test]
    fn zero_flow_is_identity() {
        let f = Frame::<f64>::from_fn(5, 4, |x, y| [x as f64 * 0.1, y as f64 * 0.2, 0.5]);
        let (out, invalid) = warp_backward(&f, &FlowField::zeros(5, 4)).unwrap();
        assert_eq!(out, f);
        assert!(invalid.is_empty());
    }

    #[test]
    fn unit_shift_matches_closed_form() {
        let w = 8;
        let f = Frame::<f64>::from_fn(w, 3, |x, _| {
            let v = x as f64 / w as f64;
            [v, v, v]
        });
        let (out, invalid) = warp_backward(&f, &FlowField::constant(w, 3, 1.0, 0.0)).unwrap();
        for y in 0..3 {
            for x in 0..w - 1 {
                assert!((out.get(x, y)[0] - (x + 1) as f64 / w as f64).abs() < 1e-12);
                assert!(!invalid.get(x, y));
            }
            assert!(invalid.get(w - 1, y));
        }
    }

    #[test]
    fn fractional_shift_is_bilinear() {
        let f = Frame::<f64>::from_fn(4, 4, |x, y| [(x * x + 3 * y) as f64, 0.0, 0.0]);
        let (out, _) = warp_backward(&f, &FlowField::constant(4, 4, 0.25, 0.5)).unwrap();
        // at (1,1): sample (1.25, 1.5)
        let v = |x: f64, y: f64| x * x + 3.0 * y;
        let expect = 0.5 * (0.75 * v(1.0, 1.0) + 0.25 * v(2.0, 1.0)) + 0.5 * (0.75 * v(1.0, 2.0) + 0.25 * v(2.0, 2.0));
        assert!((out.get(1, 1)[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn full_width_shift_invalidates_everything() {
        let f = Frame::<f32>::filled(6, 5, 0.3);
        let (_, invalid) = warp_backward(&f, &FlowField::constant(6, 5, 6.0, 0.0)).unwrap();
        assert_eq!(invalid.count(), 30);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let f = Frame::<f32>::filled(6, 5, 0.3);
        assert!(warp_backward(&f, &FlowField::zeros(5, 5)).is_err());
    }
}
