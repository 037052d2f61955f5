//! Flow-guided content propagation in the pixel domain.

use fgt_tensor::Scalar;

use crate::error::{shape_err, Error, Result};
use crate::flowcore::{in_bounds, sample_flow, Bilinear, FlowField, Frame, HasSize, RegionMask};
use crate::video::{FrameSequence, MaskSequence};

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationState<T> {
    pub frames: FrameSequence<T>,
    /// Remaining holes.
    pub masks: MaskSequence,
    /// Pixels filled per frame in the last pass.
    pub fill_count: Vec<usize>,
    /// `fill_count` of every pass, in order.
    pub history: Vec<Vec<usize>>,
}

impl<T> PropagationState<T> {
    pub fn holes(&self) -> usize {
        self.masks.iter().map(|m| m.count()).sum()
    }

    pub fn passes(&self) -> usize {
        self.history.len()
    }
}

/// Try to pull pixel `(x, y)` of the current frame from `src` along `flow`
/// (current → src), checking the round trip with `reverse` (src → current).
fn pull<T: Scalar>(
    x: usize,
    y: usize,
    flow: &FlowField<T>,
    reverse: &FlowField<T>,
    src: &Frame<T>,
    src_holes: &RegionMask,
    tau: f64,
) -> Option<[f64; 3]> {
    let (w, h) = src.size();
    let (dx, dy) = flow.get(x, y);
    let (dx, dy) = (dx.as_f64(), dy.as_f64());
    let (px, py) = (x as f64 + dx, y as f64 + dy);
    if !in_bounds(px, py, w, h) {
        return None;
    }
    let (rx, ry) = sample_flow(reverse, px, py);
    if (dx + rx).hypot(dy + ry) > tau {
        return None;
    }
    let b = Bilinear::at(px, py, w, h);
    if b.taps().iter().any(|&(tx, ty, wt)| wt > 0.0 && src_holes.get(tx, ty)) {
        return None;
    }
    let mut v = [0.0; 3];
    for &(tx, ty, wt) in b.taps().iter().filter(|t| t.2 > 0.0) {
        let s = src.get(tx, ty);
        for c in 0..3 {
            v[c] += wt * s[c].as_f64();
        }
    }
    Some(v)
}

type Fills = Vec<Vec<Option<[f64; 3]>>>;

/// One chained sweep. `forward` walks t = 1..T pulling from t−1.
fn sweep<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    fwd: &[FlowField<T>],
    bwd: &[FlowField<T>],
    tau: f64,
    forward: bool,
) -> Fills {
    let n = frames.len();
    let mut frames = frames.to_vec();
    let mut masks = masks.to_vec();
    let mut fills: Fills = masks.iter().map(|m| vec![None; m.data().len()]).collect();
    let order: Vec<usize> = if forward { (1..n).collect() } else { (0..n.saturating_sub(1)).rev().collect() };
    for t in order {
        let (s, flow, reverse) = if forward { (t - 1, &bwd[t - 1], &fwd[t - 1]) } else { (t + 1, &fwd[t], &bwd[t]) };
        let (w, h) = frames[t].size();
        let mut filled = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if masks[t].get(x, y) {
                    if let Some(v) = pull(x, y, flow, reverse, &frames[s], &masks[s], tau) {
                        filled.push((x, y, v));
                    }
                }
            }
        }
        for (x, y, v) in filled {
            frames[t].set(x, y, v.map(T::of));
            masks[t].set(x, y, false);
            fills[t][y * w + x] = Some(v);
        }
    }
    fills
}

/// Fill holes by chaining flows through neighbouring frames.
///
/// `flows_fwd[k]` maps frame k to k+1 and `flows_bwd[k]` maps k+1 to k. Every pass
/// runs a forward and a backward sweep from the same starting state; a pixel that
/// both sweeps reach gets the mean of the two values.
pub fn propagate<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    flows_fwd: &[FlowField<T>],
    flows_bwd: &[FlowField<T>],
    tau: f64,
    max_passes: usize,
) -> Result<PropagationState<T>> {
    crate::video::validate_sequence(frames, masks, flows_fwd, flows_bwd)?;
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("tau must be >= 0, got {tau}")));
    }
    if frames.is_empty() {
        return Err(shape_err("no frames"));
    }
    let mut state = PropagationState {
        frames: frames.to_vec(),
        masks: masks.to_vec(),
        fill_count: vec![0; frames.len()],
        history: Vec::new(),
    };
    for _ in 0..max_passes {
        let a = sweep(&state.frames, &state.masks, flows_fwd, flows_bwd, tau, true);
        let b = sweep(&state.frames, &state.masks, flows_fwd, flows_bwd, tau, false);
        let mut counts = vec![0; frames.len()];
        for t in 0..frames.len() {
            let w = state.frames[t].width();
            for (i, (fa, fb)) in a[t].iter().zip(&b[t]).enumerate() {
                let v = match (fa, fb) {
                    (Some(p), Some(q)) => [0, 1, 2].map(|c| (p[c] + q[c]) / 2.0),
                    (Some(p), None) | (None, Some(p)) => *p,
                    (None, None) => continue,
                };
                state.frames[t].set(i % w, i / w, v.map(T::of));
                state.masks[t].set(i % w, i / w, false);
                counts[t] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        state.fill_count = counts.clone();
        state.history.push(counts);
        if total == 0 {
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, shift: f64) -> Frame<f64> {
        Frame::from_fn(w, h, |x, y| {
            let u = x as f64 - shift;
            [0.5 + 0.3 * (0.4 * u).sin(), 0.5 + 0.2 * (0.3 * y as f64 + 0.2 * u).cos(), (u * 0.05).rem_euclid(1.0)]
        })
    }

    #[test]
    fn static_scene_copies_from_neighbours() {
        let (w, h, n) = (10, 8, 4);
        let frames: Vec<_> = (0..n).map(|_| textured(w, h, 0.0)).collect();
        let mut masks = vec![RegionMask::empty(w, h); n];
        masks[2] = RegionMask::from_fn(w, h, |x, y| (3..6).contains(&x) && (2..5).contains(&y));
        // pixel (5, 6) masked everywhere: unreachable
        for m in &mut masks {
            m.set(5, 6, true);
        }
        let zero = vec![FlowField::zeros(w, h); n - 1];
        let mut corrupted = frames.clone();
        for (f, m) in corrupted.iter_mut().zip(&masks) {
            for y in 0..h {
                for x in 0..w {
                    if m.get(x, y) {
                        f.set(x, y, [0.0; 3]);
                    }
                }
            }
        }
        let s = propagate(&corrupted, &masks, &zero, &zero, 0.5, n).unwrap();
        assert_eq!(s.frames[2], {
            let mut e = frames[2].clone();
            e.set(5, 6, [0.0; 3]);
            e
        });
        assert_eq!(s.holes(), n);
        assert!(s.masks.iter().all(|m| m.get(5, 6)));
        let again = propagate(&s.frames, &s.masks, &zero, &zero, 0.5, n).unwrap();
        assert_eq!(again.fill_count.iter().sum::<usize>(), 0);
    }
}
