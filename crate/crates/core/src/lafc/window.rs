use fgt_tensor::{Scalar, Tensor};

use crate::error::{shape_err, Result};
use crate::flowcore::{laplacian_fill, FlowField, HasSize, RegionMask};

/// Indices `t + j·interval` for `j ∈ [−n, n]`, clamped to `[0, len)`.
pub fn window_indices(t: usize, n: usize, interval: usize, len: usize) -> Vec<usize> {
    assert!(len > 0 && t < len);
    (-(n as isize)..=n as isize)
        .map(|j| (t as isize + j * interval as isize).clamp(0, len as isize - 1) as usize)
        .collect()
}

/// `2n + 1` Laplacian-initialised flows centred on the completion target.
#[derive(Clone, Debug)]
pub struct FlowWindow<T> {
    pub flows: Vec<FlowField<T>>,
    pub masks: Vec<RegionMask>,
    pub n: usize,
    pub interval: usize,
}

impl<T: Scalar> FlowWindow<T> {
    pub fn new(flows: Vec<FlowField<T>>, masks: Vec<RegionMask>, n: usize, interval: usize) -> Result<Self> {
        if flows.len() != 2 * n + 1 || masks.len() != flows.len() {
            return Err(shape_err(format!(
                "window with n={n} needs {} flows and masks, got {} and {}",
                2 * n + 1,
                flows.len(),
                masks.len()
            )));
        }
        let size = flows[0].size();
        if flows.iter().any(|f| f.size() != size) || masks.iter().any(|m| m.size() != size) {
            return Err(shape_err("window members differ in size"));
        }
        Ok(Self { flows, masks, n, interval })
    }

    /// Gather and Laplacian-fill the window around `t` from raw (masked) flows.
    pub fn gather(flows: &[FlowField<T>], masks: &[RegionMask], t: usize, n: usize, interval: usize) -> Result<Self> {
        if flows.len() != masks.len() || flows.is_empty() {
            return Err(shape_err("flow and mask sequences differ in length"));
        }
        let idx = window_indices(t, n, interval, flows.len());
        let mut fs = Vec::with_capacity(idx.len());
        let mut ms = Vec::with_capacity(idx.len());
        for &k in &idx {
            fs.push(laplacian_fill(&flows[k], &masks[k])?);
            ms.push(masks[k].clone());
        }
        Self::new(fs, ms, n, interval)
    }

    pub fn target(&self) -> &FlowField<T> {
        &self.flows[self.n]
    }

    pub fn target_mask(&self) -> &RegionMask {
        &self.masks[self.n]
    }

    /// `[1, 3, 2n+1, H, W]`: dx, dy and the mask per window member.
    pub fn to_tensor(&self) -> Tensor<T> {
        let (w, h) = self.flows[0].size();
        let len = self.flows.len();
        let plane = w * h;
        let mut data = vec![T::zero(); 3 * len * plane];
        for (t, (f, m)) in self.flows.iter().zip(&self.masks).enumerate() {
            for i in 0..plane {
                data[t * plane + i] = f.data()[2 * i];
                data[(len + t) * plane + i] = f.data()[2 * i + 1];
                data[(2 * len + t) * plane + i] = if m.data()[i] { T::one() } else { T::zero() };
            }
        }
        Tensor::new(&[1, 3, len, h, w], data)
    }
}
