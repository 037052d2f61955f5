use fgt_tensor::Scalar;

use super::field::{EdgeMap, FlowField};
use crate::error::{Error, Result};

pub const DEFAULT_LOW: f64 = 0.1;
pub const DEFAULT_HIGH: f64 = 0.2;

/// Canny edges of the flow-magnitude image (min-max normalised before smoothing).
pub fn canny_edges<T: Scalar>(flow: &FlowField<T>, low: f64, high: f64) -> Result<EdgeMap> {
    if !(0.0 <= low && low <= high) {
        return Err(Error::Config(format!("canny thresholds need 0 <= low <= high, got {low}, {high}")));
    }
    let (w, h) = (flow.width(), flow.height());
    let mut img = flow.magnitude();
    let (lo, hi) = img.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-12) {
        return Ok(EdgeMap::empty(w, h));
    }
    for v in &mut img {
        *v = (*v - lo) / (hi - lo);
    }
    let g = gaussian5(&img, w, h);
    let (mag, dir) = sobel(&g, w, h);
    let thin = non_max_suppression(&mag, &dir, w, h);
    Ok(hysteresis(&thin, w, h, low, high))
}

fn clamp_at(img: &[f64], w: usize, h: usize, x: isize, y: isize) -> f64 {
    let x = x.clamp(0, w as isize - 1) as usize;
    let y = y.clamp(0, h as isize - 1) as usize;
    img[y * w + x]
}

fn gaussian5(img: &[f64], w: usize, h: usize) -> Vec<f64> {
    let k: Vec<f64> = (-2..=2).map(|i: i32| (-(i * i) as f64 / 2.0).exp()).collect();
    let norm: f64 = k.iter().sum();
    let k: Vec<f64> = k.iter().map(|v| v / norm).collect();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..5)
                .map(|j| k[j] * clamp_at(img, w, h, x as isize + j as isize - 2, y as isize))
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..5)
                .map(|j| k[j] * clamp_at(&tmp, w, h, x as isize, y as isize + j as isize - 2))
                .sum();
        }
    }
    out
}

/// Quantised gradient direction: 0 = horizontal gradient, 1 = 45°, 2 = vertical, 3 = 135°.
fn sobel(img: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<u8>) {
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| clamp_at(img, w, h, x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1) - p(-1, -1) - 2.0 * p(-1, 0) - p(-1, 1)) / 8.0;
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1) - p(-1, -1) - 2.0 * p(0, -1) - p(1, -1)) / 8.0;
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let mut a = gy.atan2(gx).to_degrees();
            if a < 0.0 {
                a += 180.0;
            }
            dir[i] = if !(22.5..157.5).contains(&a) {
                0
            } else if a < 67.5 {
                1
            } else if a < 112.5 {
                2
            } else {
                3
            };
        }
    }
    (mag, dir)
}

fn non_max_suppression(mag: &[f64], dir: &[u8], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = match dir[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let at = |sx: isize, sy: isize| {
                let (nx, ny) = (x as isize + sx, y as isize + sy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    0.0
                } else {
                    mag[ny as usize * w + nx as usize]
                }
            };
            // asymmetric comparison keeps exactly one pixel of a symmetric ridge
            if m >= at(-dx, -dy) && m > at(dx, dy) {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thin: &[f64], w: usize, h: usize, low: f64, high: f64) -> EdgeMap {
    let mut edges = EdgeMap::empty(w, h);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let m = thin[y * w + x];
            if m > 0.0 && m >= high && !edges.get(x, y) {
                edges.set(x, y, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                            let v = thin[ny * w + nx];
                            if v > 0.0 && v >= low && !edges.get(nx, ny) {
                                edges.set(nx, ny, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_flow_has_no_edges() {
        let f = FlowField::<f32>::constant(16, 16, 3.0, 1.0);
        assert!(canny_edges(&f, DEFAULT_LOW, DEFAULT_HIGH).unwrap().is_empty());
    }

    #[test]
    fn half_planes_give_one_vertical_line() {
        let (w, h, b) = (24, 16, 11);
        let f = FlowField::<f64>::from_fn(w, h, |x, _| (if x < b { 0.0 } else { 10.0 }, 0.0));
        let e = canny_edges(&f, DEFAULT_LOW, DEFAULT_HIGH).unwrap();
        for y in 0..h {
            let cols: Vec<usize> = (0..w).filter(|&x| e.get(x, y)).collect();
            assert_eq!(cols.len(), 1, "row {y}: {cols:?}");
            assert!(cols[0] + 1 >= b - 1 && cols[0] <= b + 1);
        }
    }

    #[test]
    fn threshold_above_max_gives_nothing() {
        let f = FlowField::<f64>::from_fn(16, 16, |x, _| (if x < 8 { 0.0 } else { 10.0 }, 0.0));
        assert!(canny_edges(&f, 0.5, 2.0).unwrap().is_empty());
        assert!(canny_edges(&f, 0.3, 0.1).is_err());
    }
}
