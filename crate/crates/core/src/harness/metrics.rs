//! PSNR and SSIM for frames in `[0, 1]`.

use fgt_tensor::Scalar;
use serde::Serialize;

use crate::error::{shape_err, Error, Result};
use crate::flowcore::{check_same, Frame, RegionMask};

pub const PSNR_CAP: f64 = 99.0;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Sum of squared error and sample count over `region`.
fn sse<T: Scalar>(pred: &Frame<T>, gt: &Frame<T>, region: &RegionMask) -> (f64, usize) {
    let mut acc = 0.0;
    let mut n = 0;
    for (i, &m) in region.data().iter().enumerate() {
        if m {
            for c in 0..3 {
                let d = pred.data()[3 * i + c].as_f64() - gt.data()[3 * i + c].as_f64();
                acc += d * d;
            }
            n += 3;
        }
    }
    (acc, n)
}

pub fn mse_to_psnr(mse: f64) -> f64 {
    if mse < 1e-10 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

pub fn psnr<T: Scalar>(pred: &Frame<T>, gt: &Frame<T>, region: &RegionMask) -> Result<f64> {
    check_same("psnr", pred, gt)?;
    check_same("psnr region", pred, region)?;
    let (s, n) = sse(pred, gt, region);
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(mse_to_psnr(s / n as f64))
}

/// PSNR of the pooled squared error over a whole sequence.
pub fn sequence_psnr<T: Scalar>(pred: &[Frame<T>], gt: &[Frame<T>], regions: &[RegionMask]) -> Result<f64> {
    if pred.len() != gt.len() || pred.len() != regions.len() {
        return Err(shape_err("sequence lengths differ"));
    }
    let (mut s, mut n) = (0.0, 0);
    for ((p, g), r) in pred.iter().zip(gt).zip(regions) {
        check_same("psnr", p, g)?;
        check_same("psnr region", p, r)?;
        let (a, b) = sse(p, g, r);
        s += a;
        n += b;
    }
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(mse_to_psnr(s / n as f64))
}

fn gaussian_taps() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let k: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable valid-mode filter of a `w×h` plane.
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|j| k[j] * img[y * w + x + j]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|j| k[j] * tmp[(y + j) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM over all valid 11x11 Gaussian windows, averaged over channels.
pub fn ssim<T: Scalar>(pred: &Frame<T>, gt: &Frame<T>) -> Result<f64> {
    check_same("ssim", pred, gt)?;
    let (w, h) = (pred.width(), pred.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(shape_err(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} frames, got {w}x{h}")));
    }
    let k = gaussian_taps();
    let mut total = 0.0;
    for c in 0..3 {
        let a: Vec<f64> = pred.data().iter().skip(c).step_by(3).map(|v| v.as_f64()).collect();
        let b: Vec<f64> = gt.data().iter().skip(c).step_by(3).map(|v| v.as_f64()).collect();
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
        let (ma, ow, oh) = filter_valid(&a, w, h, &k);
        let (mb, _, _) = filter_valid(&b, w, h, &k);
        let (saa, _, _) = filter_valid(&prod(&a, &a), w, h, &k);
        let (sbb, _, _) = filter_valid(&prod(&b, &b), w, h, &k);
        let (sab, _, _) = filter_valid(&prod(&a, &b), w, h, &k);
        let mut acc = 0.0;
        for i in 0..ow * oh {
            let (mx, my) = (ma[i], mb[i]);
            let vx = saa[i] - mx * mx;
            let vy = sbb[i] - my * my;
            let cxy = sab[i] - mx * my;
            acc += ((2.0 * mx * my + C1) * (2.0 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
        }
        total += acc / (ow * oh) as f64;
    }
    Ok(total / 3.0)
}

/// Hole-region and full-frame scores of a restored sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub psnr_hole: Option<f64>,
    pub psnr_full: f64,
    pub ssim_full: Option<f64>,
}

pub fn evaluate_sequence<T: Scalar>(pred: &[Frame<T>], gt: &[Frame<T>], masks: &[RegionMask]) -> Result<QualityReport> {
    let full: Vec<RegionMask> = masks.iter().map(|m| RegionMask::full(m.width(), m.height())).collect();
    let psnr_hole = match sequence_psnr(pred, gt, masks) {
        Ok(v) => Some(v),
        Err(Error::EmptyRegion) => None,
        Err(e) => return Err(e),
    };
    let psnr_full = sequence_psnr(pred, gt, &full)?;
    let ssim_full = if pred[0].width() >= SSIM_WINDOW && pred[0].height() >= SSIM_WINDOW {
        let mut s = 0.0;
        for (p, g) in pred.iter().zip(gt) {
            s += ssim(p, g)?;
        }
        Some(s / pred.len() as f64)
    } else {
        None
    };
    Ok(QualityReport {
        psnr_hole,
        psnr_full,
        ssim_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        let a = Frame::<f64>::from_fn(16, 12, |x, y| [x as f64 / 16.0, y as f64 / 12.0, 0.5]);
        let all = RegionMask::full(16, 12);
        assert_eq!(psnr(&a, &a, &all).unwrap(), PSNR_CAP);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let mut b = a.clone();
        for v in b.data_mut() {
            *v += 0.1;
        }
        assert!((psnr(&b, &a, &all).unwrap() - 20.0).abs() < 1e-9);
        assert!(matches!(psnr(&a, &b, &RegionMask::empty(16, 12)), Err(Error::EmptyRegion)));
    }
}
