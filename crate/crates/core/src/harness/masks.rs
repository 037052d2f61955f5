//! Moving corruption masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowcore::RegionMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskKind {
    /// An axis-aligned square on a random walk.
    SquareTrace,
    /// A wobbling ellipse on a random walk.
    ObjectLike,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSpec {
    pub kind: MaskKind,
    /// Target fraction of each frame covered.
    pub coverage: f64,
    /// Largest per-frame displacement, as a fraction of the mask side.
    pub max_step: f64,
    pub seed: u64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            kind: MaskKind::SquareTrace,
            coverage: 1.0 / 16.0,
            max_step: 0.25,
            seed: 0,
        }
    }
}

pub fn generate_masks(spec: &MaskSpec, width: usize, height: usize, frames: usize) -> Result<Vec<RegionMask>> {
    if !(spec.coverage > 0.0 && spec.coverage < 1.0) {
        return Err(Error::Config(format!("mask coverage must be in (0, 1), got {}", spec.coverage)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let area = spec.coverage * (width * height) as f64;
    // the footprint is kept inside the frame, so its size is fixed
    let (half_w, half_h) = match spec.kind {
        MaskKind::SquareTrace => {
            let side = area.sqrt().round().clamp(1.0, width.min(height) as f64);
            (side / 2.0, side / 2.0)
        }
        MaskKind::ObjectLike => {
            let r = (area / std::f64::consts::PI).sqrt();
            (r.min(width as f64 / 2.0), r.min(height as f64 / 2.0))
        }
    };
    let step = (spec.max_step * 2.0 * half_w.min(half_h)).max(0.5);
    let (lo_x, hi_x) = (half_w, width as f64 - half_w);
    let (lo_y, hi_y) = (half_h, height as f64 - half_h);
    let mut cx = rng.gen_range(lo_x..=hi_x);
    let mut cy = rng.gen_range(lo_y..=hi_y);
    let mut vx = rng.gen_range(-step..=step);
    let mut vy = rng.gen_range(-step..=step);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        out.push(match spec.kind {
            MaskKind::SquareTrace => {
                let x0 = (cx - half_w).round() as isize;
                let y0 = (cy - half_h).round() as isize;
                let side = (2.0 * half_w).round() as isize;
                RegionMask::from_fn(width, height, |x, y| {
                    let (x, y) = (x as isize, y as isize);
                    x >= x0 && x < x0 + side && y >= y0 && y < y0 + side
                })
            }
            MaskKind::ObjectLike => {
                // area-preserving wobble of the aspect ratio
                let s = 1.0 + 0.25 * (0.7 * t as f64 + phase).sin();
                let (a, b) = ((half_w * s).min(width as f64 / 2.0), (half_h / s).min(height as f64 / 2.0));
                RegionMask::from_fn(width, height, |x, y| {
                    let dx = (x as f64 + 0.5 - cx) / a;
                    let dy = (y as f64 + 0.5 - cy) / b;
                    dx * dx + dy * dy < 1.0
                })
            }
        });
        // momentum random walk reflected at the borders
        vx = (0.7 * vx + 0.3 * rng.gen_range(-step..=step)).clamp(-step, step);
        vy = (0.7 * vy + 0.3 * rng.gen_range(-step..=step)).clamp(-step, step);
        cx += vx;
        cy += vy;
        if cx < lo_x || cx > hi_x {
            vx = -vx;
            cx = cx.clamp(lo_x, hi_x);
        }
        if cy < lo_y || cy > hi_y {
            vy = -vy;
            cy = cy.clamp(lo_y, hi_y);
        }
    }
    Ok(out)
}
