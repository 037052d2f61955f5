use fgt_tensor::{Scalar, Var};
use serde::Serialize;

use super::config::{LafcConfig, LafcWeights};
use crate::diffops::{bce_with_logits, gradients, masked_l1, warp_image};
use crate::error::{Result};
use crate::flowcore::{canny_edges, check_same, fb_consistency_mask, EdgeMap, FlowField, Frame, RegionMask};

/// Everything the loss compares a completed flow against.
#[derive(Clone, Debug)]
pub struct LafcTargets<T> {
    pub gt: FlowField<T>,
    pub mask: RegionMask,
    /// Frame the flow starts from.
    pub frame: Frame<T>,
    /// Frame the flow points into.
    pub neighbor: Frame<T>,
    /// Pixels where the ground-truth round trip is consistent and in range.
    pub reliable: RegionMask,
    pub edges: EdgeMap,
}

impl<T: Scalar> LafcTargets<T> {
    /// `gt` maps `frame` to `neighbor`; `gt_reverse` maps back.
    pub fn new(
        gt: FlowField<T>,
        gt_reverse: &FlowField<T>,
        mask: RegionMask,
        frame: Frame<T>,
        neighbor: Frame<T>,
        config: &LafcConfig,
    ) -> Result<Self> {
        check_same("lafc targets", &gt, &mask)?;
        check_same("lafc targets", &gt, &frame)?;
        check_same("lafc targets", &gt, &neighbor)?;
        let reliable = fb_consistency_mask(&gt, gt_reverse, config.tau)?.inverted();
        let edges = canny_edges(&gt, config.canny_low, config.canny_high)?;
        Ok(Self {
            gt,
            mask,
            frame,
            neighbor,
            reliable,
            edges,
        })
    }
}

/// Loss terms, each unweighted, plus the weighted total.
#[derive(Clone, Debug, Serialize)]
pub struct LossTerms<V> {
    pub hole: V,
    pub valid: V,
    pub smooth1: V,
    pub smooth2: V,
    pub warp: V,
    pub edge: V,
    pub total: V,
}

impl<T: Scalar> LossTerms<Var<T>> {
    pub fn values(&self) -> LossTerms<f64> {
        let v = |x: &Var<T>| x.value().item().as_f64();
        LossTerms {
            hole: v(&self.hole),
            valid: v(&self.valid),
            smooth1: v(&self.smooth1),
            smooth2: v(&self.smooth2),
            warp: v(&self.warp),
            edge: v(&self.edge),
            total: v(&self.total),
        }
    }
}

impl LossTerms<f64> {
    pub fn weighted_sum(&self, w: &LafcWeights) -> f64 {
        w.hole * self.hole
            + w.valid * self.valid
            + w.smooth1 * self.smooth1
            + w.smooth2 * self.smooth2
            + w.warp * self.warp
            + w.edge * self.edge
    }
}

/// Mean BCE between `sigmoid(logits)` (`[1, H, W]`) and the edge map.
pub fn edge_loss<T: Scalar>(logits: &Var<T>, gt_edges: &EdgeMap) -> Var<T> {
    bce_with_logits(logits, &gt_edges.to_tensor())
}

/// `pred: [2, H, W]` raw completed flow, `edge_logits: [1, H, W]`.
pub fn lafc_loss<T: Scalar>(
    pred: &Var<T>,
    edge_logits: &Var<T>,
    targets: &LafcTargets<T>,
    weights: &LafcWeights,
) -> LossTerms<Var<T>> {
    let g = pred.graph();
    let zero = || g.constant(fgt_tensor::Tensor::scalar(T::zero()));
    let gt = g.constant(targets.gt.to_tensor());
    let hole = masked_l1(pred, &gt, &targets.mask).unwrap_or_else(zero);
    let valid = masked_l1(pred, &gt, &targets.mask.inverted()).unwrap_or_else(zero);
    let d1 = gradients(pred);
    let smooth1 = d1.abs().mean();
    let smooth2 = gradients(&d1).abs().mean();
    let warped = warp_image(&targets.neighbor.to_tensor(), pred);
    let frame = g.constant(targets.frame.to_tensor());
    let warp = masked_l1(&warped, &frame, &targets.reliable).unwrap_or_else(|| {
        log::warn!("warp loss: every pixel is occluded, term set to 0");
        zero()
    });
    let edge = edge_loss(edge_logits, &targets.edges);
    let w = |x: &Var<T>, k: f64| x.scale(T::of(k));
    let total = w(&hole, weights.hole)
        .add(&w(&valid, weights.valid))
        .add(&w(&smooth1, weights.smooth1))
        .add(&w(&smooth2, weights.smooth2))
        .add(&w(&warp, weights.warp))
        .add(&w(&edge, weights.edge));
    LossTerms {
        hole,
        valid,
        smooth1,
        smooth2,
        warp,
        edge,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::{Graph, Tensor};

    #[test]
    fn edge_loss_reference_values() {
        let g = Graph::<f64>::inference();
        let edges = EdgeMap::from_fn(2, 2, |x, y| x == y);
        let sat = Tensor::new(&[1, 2, 2], vec![40.0, -40.0, -40.0, 40.0]);
        assert!(edge_loss(&g.constant(sat), &edges).value().item() < 1e-10);
        let zero = edge_loss(&g.constant(Tensor::zeros(&[1, 2, 2])), &edges).value().item();
        assert!((zero - std::f64::consts::LN_2).abs() < 1e-12);
        // one logit right (+2 on an edge), one wrong (+2 off an edge), on a 2-pixel toy
        let two = EdgeMap::new(2, 1, vec![true, false]).unwrap();
        let v = edge_loss(&g.constant(Tensor::new(&[1, 1, 2], vec![2.0, 2.0])), &two).value().item();
        let s = 1.0 / (1.0 + (-2.0f64).exp());
        let expect = -(s.ln() + (1.0 - s).ln()) / 2.0;
        assert!((v - expect).abs() < 1e-12);
    }
}
