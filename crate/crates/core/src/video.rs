//! Frame, mask and flow sequences for one clip.

use fgt_tensor::{Scalar, Tensor};

use crate::error::{shape_err, Result};
use crate::flowcore::{FlowField, Frame, HasSize, RegionMask};

pub type FrameSequence<T> = Vec<Frame<T>>;
pub type MaskSequence = Vec<RegionMask>;

/// A clip with ground truth.
///
/// `flows_fwd[k]` maps frame `k` to `k + 1`; `flows_bwd[k]` maps frame `k + 1`
/// back to `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip<T> {
    pub frames: FrameSequence<T>,
    pub masks: MaskSequence,
    pub flows_fwd: Vec<FlowField<T>>,
    pub flows_bwd: Vec<FlowField<T>>,
}

impl<T: Scalar> Clip<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn size(&self) -> (usize, usize) {
        self.frames[0].size()
    }

    pub fn validate(&self) -> Result<()> {
        validate_sequence(&self.frames, &self.masks, &self.flows_fwd, &self.flows_bwd)
    }

    /// Ground truth with the masked pixels zeroed (the corrupted input `X`).
    pub fn corrupted(&self) -> FrameSequence<T> {
        corrupt(&self.frames, &self.masks)
    }
}

pub fn validate_sequence<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    fwd: &[FlowField<T>],
    bwd: &[FlowField<T>],
) -> Result<()> {
    let t = frames.len();
    if t == 0 {
        return Err(shape_err("empty frame sequence"));
    }
    if masks.len() != t {
        return Err(shape_err(format!("{t} frames but {} masks", masks.len())));
    }
    if fwd.len() + 1 != t || bwd.len() + 1 != t {
        return Err(shape_err(format!(
            "{t} frames need {} flows per direction, got {} forward and {} backward",
            t - 1,
            fwd.len(),
            bwd.len()
        )));
    }
    let size = frames[0].size();
    let bad = frames.iter().map(|f| f.size()).chain(masks.iter().map(|m| m.size()))
        .chain(fwd.iter().chain(bwd).map(|f| f.size()))
        .find(|&s| s != size);
    if let Some(s) = bad {
        return Err(shape_err(format!("sequence member of size {s:?}, expected {size:?}")));
    }
    Ok(())
}

pub fn corrupt<T: Scalar>(frames: &[Frame<T>], masks: &[RegionMask]) -> FrameSequence<T> {
    frames
        .iter()
        .zip(masks)
        .map(|(f, m)| {
            let mut out = f.clone();
            for y in 0..f.height() {
                for x in 0..f.width() {
                    if m.get(x, y) {
                        out.set(x, y, [T::zero(); 3]);
                    }
                }
            }
            out
        })
        .collect()
}

/// `out = keep ⊙ (1 − M) + fill ⊙ M`, copying `keep` bit-exactly outside the mask.
pub fn composite<T: Scalar>(keep: &Frame<T>, fill: &Frame<T>, mask: &RegionMask) -> Frame<T> {
    let mut out = keep.clone();
    for y in 0..keep.height() {
        for x in 0..keep.width() {
            if mask.get(x, y) {
                out.set(x, y, fill.get(x, y));
            }
        }
    }
    out
}

/// `[T, 3, H, W]` stack of frames.
pub fn frames_to_tensor<T: Scalar>(frames: &[Frame<T>]) -> Tensor<T> {
    let parts: Vec<Tensor<T>> = frames.iter().map(|f| f.to_tensor()).collect();
    let (h, w) = (frames[0].height(), frames[0].width());
    let mut data = Vec::with_capacity(parts.len() * 3 * h * w);
    for p in parts {
        data.extend_from_slice(p.data());
    }
    Tensor::new(&[frames.len(), 3, h, w], data)
}

/// `[T, 1, H, W]` stack of masks (1 = corrupted).
pub fn masks_to_tensor<T: Scalar>(masks: &[RegionMask]) -> Tensor<T> {
    let (h, w) = (masks[0].height(), masks[0].width());
    let mut data = Vec::with_capacity(masks.len() * h * w);
    for m in masks {
        data.extend(m.data().iter().map(|&b| if b { T::one() } else { T::zero() }));
    }
    Tensor::new(&[masks.len(), 1, h, w], data)
}

/// Inverse of [`frames_to_tensor`].
pub fn tensor_to_frames<T: Scalar>(t: &Tensor<T>) -> Result<FrameSequence<T>> {
    let s = t.shape();
    if s.len() != 4 || s[1] != 3 {
        return Err(shape_err(format!("expected [T, 3, H, W], got {s:?}")));
    }
    (0..s[0])
        .map(|i| Frame::from_tensor(&t.narrow(0, i, 1).reshape(&[3, s[2], s[3]])))
        .collect()
}
