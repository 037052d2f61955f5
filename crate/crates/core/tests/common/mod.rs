//! Reference implementations for the integration tests, written without the
//! library's own helpers.
#![allow(dead_code)]

use fgt_core::flowcore::{FlowField, Frame, RegionMask};
use fgt_tensor::{Bound, Graph, ParamStore, Tensor, Var};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Harmonic fill by a direct solve of the 4-neighbour Laplace system; image
/// borders are natural (only in-image neighbours count).
pub fn dense_harmonic(flow: &FlowField<f64>, mask: &RegionMask) -> FlowField<f64> {
    let (w, h) = (flow.width(), flow.height());
    let unknown: Vec<usize> = (0..w * h).filter(|&i| mask.data()[i]).collect();
    let mut index = vec![usize::MAX; w * h];
    for (k, &i) in unknown.iter().enumerate() {
        index[i] = k;
    }
    let n = unknown.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, 2);
    for (k, &i) in unknown.iter().enumerate() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            a[(k, k)] += 1.0;
            if mask.data()[j] {
                a[(k, index[j])] -= 1.0;
            } else {
                let (u, v) = flow.get(nx as usize, ny as usize);
                b[(k, 0)] += u;
                b[(k, 1)] += v;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("Laplace system is singular");
    let mut out = flow.clone();
    for (k, &i) in unknown.iter().enumerate() {
        out.set(i % w, i / w, (sol[(k, 0)], sol[(k, 1)]));
    }
    out
}

/// A random mask of a few rectangles that never covers the whole image.
pub fn random_mask(r: &mut impl Rng, w: usize, h: usize) -> RegionMask {
    let rects: Vec<(usize, usize, usize, usize)> = (0..r.gen_range(1..4))
        .map(|_| {
            let (x0, y0) = (r.gen_range(0..w), r.gen_range(0..h));
            (x0, y0, x0 + r.gen_range(1..=w / 2 + 1), y0 + r.gen_range(1..=h / 2 + 1))
        })
        .collect();
    let mut m = RegionMask::from_fn(w, h, |x, y| rects.iter().any(|&(a, b, c, d)| x >= a && x < c && y >= b && y < d));
    if m.count() == w * h {
        m.set(0, 0, false);
    }
    m
}

pub fn random_flow(r: &mut impl Rng, w: usize, h: usize, scale: f64) -> FlowField<f64> {
    FlowField::from_fn(w, h, |_, _| (r.gen_range(-scale..scale), r.gen_range(-scale..scale)))
}

/// Smooth colour pattern used wherever a test needs content with an exact
/// value at every position.
pub fn pattern(x: f64, y: f64) -> [f64; 3] {
    [
        0.5 + 0.3 * (0.41 * x + 0.13 * y).sin(),
        0.5 + 0.3 * (0.17 * x - 0.37 * y).cos(),
        0.5 + 0.2 * (0.29 * (x + y)).sin(),
    ]
}

/// Bilinear sample with clamping at the border, one channel of an
/// interleaved plane.
pub fn bilinear(data: &[f64], w: usize, h: usize, channels: usize, c: usize, px: f64, py: f64) -> f64 {
    let px = px.clamp(0.0, (w - 1) as f64);
    let py = py.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (px.floor() as usize, py.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (px - x0 as f64, py - y0 as f64);
    let at = |x: usize, y: usize| data[(y * w + x) * channels + c];
    (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1))
}

/// Pixel-by-pixel SSIM over every 11×11 window with a σ = 1.5 Gaussian.
pub fn naive_ssim(a: &Frame<f64>, b: &Frame<f64>) -> f64 {
    let (w, h) = (a.width(), a.height());
    let taps: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let norm: f64 = taps.iter().sum::<f64>().powi(2);
    let (c1, c2) = (1e-4, 9e-4);
    let mut total = 0.0;
    for c in 0..3 {
        let mut acc = 0.0;
        for oy in 0..=h - 11 {
            for ox in 0..=w - 11 {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let wt = taps[i] * taps[j] / norm;
                        let x = a.get(ox + i, oy + j)[c];
                        let y = b.get(ox + i, oy + j)[c];
                        mx += wt * x;
                        my += wt * y;
                        sxx += wt * x * x;
                        syy += wt * y * y;
                        sxy += wt * x * y;
                    }
                }
                let (vx, vy, cxy) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                acc += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += acc / ((w - 10) * (h - 10)) as f64;
    }
    total / 3.0
}

/// Central-difference check of `f` with respect to `inputs` and every trainable
/// parameter in `store`, joint relative error. Buffers stay constant.
pub fn grad_error(
    store: &ParamStore<f64>,
    inputs: &[Tensor<f64>],
    f: impl Fn(&Bound<f64>, &[Var<f64>]) -> Var<f64>,
) -> f64 {
    let n = inputs.len();
    let mut all = inputs.to_vec();
    all.extend(store.params().iter().filter(|p| p.trainable).map(|p| p.value.clone()));
    let report = fgt_tensor::gradcheck::check_gradients(&all, 1e-6, |g: &Graph<f64>, vars: &[Var<f64>]| {
        let mut trainable = vars[n..].iter();
        let bound = store
            .params()
            .iter()
            .map(|p| if p.trainable { trainable.next().unwrap().clone() } else { g.constant(p.value.clone()) })
            .collect();
        f(&Bound::from_vars(g, bound), &vars[..n])
    });
    report.joint_rel_error()
}

pub fn random_tensor(r: &mut impl Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| r.gen_range(-scale..scale))
}

/// Frames of a scene translating by a whole number of pixels per frame, with a
/// per-frame brightness offset, plus the exact flows.
pub fn translating_scene(
    w: usize,
    h: usize,
    t: usize,
    v: (isize, isize),
    brightness_step: f64,
) -> (Vec<Frame<f64>>, Vec<FlowField<f64>>, Vec<FlowField<f64>>) {
    let frames = (0..t)
        .map(|k| {
            Frame::from_fn(w, h, |x, y| {
                let p = pattern(x as f64 - (v.0 * k as isize) as f64, y as f64 - (v.1 * k as isize) as f64);
                p.map(|c| c + brightness_step * k as f64)
            })
        })
        .collect();
    let fwd = vec![FlowField::constant(w, h, v.0 as f64, v.1 as f64); t - 1];
    let bwd = vec![FlowField::constant(w, h, -v.0 as f64, -v.1 as f64); t - 1];
    (frames, fwd, bwd)
}

/// Expected propagation result for whole-pixel constant motion `v`: each hole
/// takes the nearest valid pixel along its trajectory in each direction, the
/// mean when both exist, and stays a hole when neither does.
pub fn trajectory_oracle(frames: &[Frame<f64>], masks: &[RegionMask], v: (isize, isize)) -> Vec<Vec<Option<[f64; 3]>>> {
    let (w, h) = (frames[0].width() as isize, frames[0].height() as isize);
    let n = frames.len() as isize;
    let find = |t: isize, x: isize, y: isize, dir: isize| -> Option<[f64; 3]> {
        let mut k = t + dir;
        while (0..n).contains(&k) {
            let px = x + v.0 * (k - t);
            let py = y + v.1 * (k - t);
            if px < 0 || py < 0 || px >= w || py >= h {
                return None;
            }
            if !masks[k as usize].get(px as usize, py as usize) {
                return Some(frames[k as usize].get(px as usize, py as usize));
            }
            k += dir;
        }
        None
    };
    (0..n)
        .map(|t| {
            (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    if !masks[t as usize].get(x as usize, y as usize) {
                        return Some(frames[t as usize].get(x as usize, y as usize));
                    }
                    match (find(t, x, y, -1), find(t, x, y, 1)) {
                        (Some(a), Some(b)) => Some([0, 1, 2].map(|c| (a[c] + b[c]) / 2.0)),
                        (Some(a), None) | (None, Some(a)) => Some(a),
                        (None, None) => None,
                    }
                })
                .collect()
        })
        .collect()
}

/// Largest deviation of a propagation result from [`trajectory_oracle`], or an
/// error naming the first pixel whose hole status disagrees.
pub fn compare_to_oracle(
    oracle: &[Vec<Option<[f64; 3]>>],
    frames: &[Frame<f64>],
    holes: &[RegionMask],
) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (t, per) in oracle.iter().enumerate() {
        let w = frames[t].width();
        for (i, want) in per.iter().enumerate() {
            let (x, y) = (i % w, i / w);
            match (want, holes[t].get(x, y)) {
                (Some(p), false) => {
                    let got = frames[t].get(x, y);
                    worst = (0..3).map(|c| (got[c] - p[c]).abs()).fold(worst, f64::max);
                }
                (None, true) => {}
                (Some(_), true) => return Err(format!("frame {t} ({x}, {y}) reachable but left as a hole")),
                (None, false) => return Err(format!("frame {t} ({x}, {y}) unreachable but filled")),
            }
        }
    }
    Ok(worst)
}
