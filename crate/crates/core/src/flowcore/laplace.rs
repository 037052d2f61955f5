use fgt_tensor::Scalar;

use super::field::{check_same, FlowField, RegionMask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LaplaceOptions {
    /// Stop once every masked pixel's 4-neighbour residual is at or below this.
    pub tolerance: f64,
    /// Sweep cap; `None` means `10 * (H + W)`.
    pub max_sweeps: Option<usize>,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_sweeps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillReport {
    pub sweeps: usize,
    pub max_residual: f64,
}

/// Harmonic interpolation of the masked pixels from the unmasked ones.
pub fn laplacian_fill<T: Scalar>(flow: &FlowField<T>, mask: &RegionMask) -> Result<FlowField<T>> {
    laplacian_fill_with(flow, mask, LaplaceOptions::default()).map(|(f, _)| f)
}

pub fn laplacian_fill_with<T: Scalar>(
    flow: &FlowField<T>,
    mask: &RegionMask,
    opts: LaplaceOptions,
) -> Result<(FlowField<T>, FillReport)> {
    check_same("laplacian_fill", flow, mask)?;
    let (w, h) = (flow.width(), flow.height());
    if mask.is_empty() {
        return Ok((flow.clone(), FillReport { sweeps: 0, max_residual: 0.0 }));
    }
    if mask.count() == w * h {
        return Err(Error::NoBoundary);
    }
    let holes: Vec<usize> = (0..w * h).filter(|&i| mask.data()[i]).collect();
    let cap = opts.max_sweeps.unwrap_or(10 * (w + h));
    // Optimal SOR factor for a square grid with the larger side.
    let n = w.max(h) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n + 1.0)).sin());

    let mut out = flow.clone();
    let mut report = FillReport { sweeps: 0, max_residual: 0.0 };
    for c in 0..2 {
        let mut u: Vec<f64> = flow.data().iter().skip(c).step_by(2).map(|v| v.as_f64()).collect();
        let valid: Vec<f64> = (0..w * h).filter(|&i| !mask.data()[i]).map(|i| u[i]).collect();
        let mean = valid.iter().sum::<f64>() / valid.len() as f64;
        for &i in &holes {
            u[i] = mean;
        }
        let mut sweeps = 0;
        let mut res = residual(&u, &holes, w, h);
        while res > opts.tolerance && sweeps < cap {
            for &i in &holes {
                let (s, k) = neighbour_sum(&u, i, w, h);
                u[i] += omega * (s / k as f64 - u[i]);
            }
            sweeps += 1;
            res = residual(&u, &holes, w, h);
        }
        if res > opts.tolerance {
            log::warn!("laplacian fill stopped at {sweeps} sweeps with residual {res:e}");
        }
        report.sweeps = report.sweeps.max(sweeps);
        report.max_residual = report.max_residual.max(res);
        let data = out.data_mut();
        for &i in &holes {
            data[2 * i + c] = T::of(u[i]);
        }
    }
    Ok((out, report))
}

#[inline]
fn neighbour_sum(u: &[f64], i: usize, w: usize, h: usize) -> (f64, usize) {
    let (x, y) = (i % w, i / w);
    let mut s = 0.0;
    let mut k = 0;
    if x > 0 {
        s += u[i - 1];
        k += 1;
    }
    if x + 1 < w {
        s += u[i + 1];
        k += 1;
    }
    if y > 0 {
        s += u[i - w];
        k += 1;
    }
    if y + 1 < h {
        s += u[i + w];
        k += 1;
    }
    (s, k)
}

fn residual(u: &[f64], holes: &[usize], w: usize, h: usize) -> f64 {
    holes
        .iter()
        .map(|&i| {
            let (s, k) = neighbour_sum(u, i, w, h);
            (s - k as f64 * u[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest per-pixel discrete Laplacian residual over the masked pixels.
pub fn max_laplace_residual<T: Scalar>(flow: &FlowField<T>, mask: &RegionMask) -> f64 {
    let (w, h) = (flow.width(), flow.height());
    let holes: Vec<usize> = (0..w * h).filter(|&i| mask.data()[i]).collect();
    (0..2)
        .map(|c| {
            let u: Vec<f64> = flow.data().iter().skip(c).step_by(2).map(|v| v.as_f64()).collect();
            residual(&u, &holes, w, h)
        })
        .fold(0.0, f64::max)
}
