//! Two-stage inference: flow completion, propagation, then transformer synthesis.

use std::path::PathBuf;

use fgt_tensor::Scalar;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::fgt::{fgt_forward, FgtModel};
use crate::flowcore::{read_flo, FlowField, Frame, RegionMask, DEFAULT_TAU};
use crate::lafc::{FlowWindow, LafcModel};
use crate::propagation::propagate;
use crate::video::{composite, corrupt, FrameSequence};

/// Supplies forward (`k → k+1`) and backward (`k+1 → k`) flows for a clip.
pub trait FlowProvider<T> {
    fn flows(&self, frames: &[Frame<T>]) -> Result<(Vec<FlowField<T>>, Vec<FlowField<T>>)>;
}

/// Flows known up front, e.g. the analytic flows of a synthetic clip.
#[derive(Clone, Debug)]
pub struct GivenFlows<T> {
    pub fwd: Vec<FlowField<T>>,
    pub bwd: Vec<FlowField<T>>,
}

impl<T: Scalar> FlowProvider<T> for GivenFlows<T> {
    fn flows(&self, _frames: &[Frame<T>]) -> Result<(Vec<FlowField<T>>, Vec<FlowField<T>>)> {
        Ok((self.fwd.clone(), self.bwd.clone()))
    }
}

/// Zero motion everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFlows;

impl<T: Scalar> FlowProvider<T> for ZeroFlows {
    fn flows(&self, frames: &[Frame<T>]) -> Result<(Vec<FlowField<T>>, Vec<FlowField<T>>)> {
        let (w, h) = frames.first().map(|f| (f.width(), f.height())).ok_or_else(|| shape_err("no frames"))?;
        let z = vec![FlowField::zeros(w, h); frames.len().saturating_sub(1)];
        Ok((z.clone(), z))
    }
}

/// `.flo` files `flows_fwd/%05d.flo` and `flows_bwd/%05d.flo` under `root`.
#[derive(Clone, Debug)]
pub struct FloDirectory {
    pub root: PathBuf,
}

impl<T: Scalar> FlowProvider<T> for FloDirectory {
    fn flows(&self, frames: &[Frame<T>]) -> Result<(Vec<FlowField<T>>, Vec<FlowField<T>>)> {
        let n = frames.len().saturating_sub(1);
        let read = |dir: &str| -> Result<Vec<FlowField<T>>> {
            (0..n)
                .map(|k| Ok(read_flo::<f32>(self.root.join(dir).join(format!("{k:05}.flo")))?.cast()))
                .collect()
        };
        Ok((read("flows_fwd")?, read("flows_bwd")?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Forward-backward tolerance for propagation, in pixels.
    pub tau: f64,
    pub max_passes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            max_passes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    /// Hole pixels (frames) or masked flow pixels (flow completion) left after the stage.
    pub holes_after: usize,
    pub skipped: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<T> {
    pub frames: FrameSequence<T>,
    pub flows_fwd: Vec<FlowField<T>>,
    pub flows_bwd: Vec<FlowField<T>>,
    /// Holes left for the transformer after propagation.
    pub residual_masks: Vec<RegionMask>,
    pub stages: Vec<StageReport>,
}

/// Laplacian-fill (and optionally LAFC-complete) every flow of one direction.
/// `masks[k]` is the hole of the frame flow `k` starts from.
fn complete_direction<T: Scalar>(flows: &[FlowField<T>], masks: &[RegionMask], lafc: Option<&LafcModel<T>>) -> Result<Vec<FlowField<T>>> {
    let (n, interval) = lafc.map(|m| (m.config().n, m.config().interval)).unwrap_or((0, 1));
    (0..flows.len())
        .map(|k| {
            if masks[k].is_empty() {
                return Ok(flows[k].clone());
            }
            let window = FlowWindow::gather(flows, masks, k, n, interval)?;
            match lafc {
                Some(model) => model.complete_flow(&window),
                None => Ok(window.target().clone()),
            }
        })
        .collect()
}

/// Restore the holes of `frames` marked by `masks`.
///
/// Pixels outside the masks are returned bit-identical. Without an LAFC model the
/// flows are only Laplacian filled. The transformer runs only if propagation left
/// holes.
pub fn inpaint_pipeline<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    provider: &dyn FlowProvider<T>,
    config: &PipelineConfig,
    lafc: Option<&LafcModel<T>>,
    fgt: &FgtModel<T>,
) -> Result<PipelineOutput<T>> {
    if frames.len() < 2 || masks.len() != frames.len() {
        return Err(shape_err(format!("need >= 2 frames and one mask per frame, got {} and {}", frames.len(), masks.len())).at("input"));
    }
    let (fwd, bwd) = provider.flows(frames).map_err(|e| e.at("flow"))?;
    crate::video::validate_sequence(frames, masks, &fwd, &bwd).map_err(|e| e.at("flow"))?;
    let mut stages = Vec::new();
    let holes: usize = masks.iter().map(|m| m.count()).sum();

    let last = masks.len() - 1;
    let flows_fwd = complete_direction(&fwd, &masks[..last], lafc).map_err(|e| e.at("flow-completion"))?;
    let flows_bwd = complete_direction(&bwd, &masks[1..], lafc).map_err(|e| e.at("flow-completion"))?;
    stages.push(StageReport {
        stage: "flow-completion",
        holes_after: 0,
        skipped: holes == 0,
    });

    let state = propagate(&corrupt(frames, masks), masks, &flows_fwd, &flows_bwd, config.tau, config.max_passes)
        .map_err(|e| e.at("propagation"))?;
    let remaining = state.holes();
    stages.push(StageReport {
        stage: "propagation",
        holes_after: remaining,
        skipped: holes == 0,
    });

    let synthesized = if remaining > 0 {
        fgt_forward(&state.frames, &state.masks, &flows_fwd, fgt).map_err(|e| e.at("fgt"))?
    } else {
        state.frames.clone()
    };
    stages.push(StageReport {
        stage: "fgt",
        holes_after: 0,
        skipped: remaining == 0,
    });

    let out: FrameSequence<T> = frames
        .iter()
        .zip(&synthesized)
        .zip(masks)
        .map(|((x, y), m)| composite(x, y, m))
        .collect();
    if out.iter().any(|f| f.data().iter().any(|v| !v.as_f64().is_finite())) {
        return Err(Error::NonFinite("restored frames".into()).at("composite"));
    }
    Ok(PipelineOutput {
        frames: out,
        flows_fwd,
        flows_bwd,
        residual_masks: state.masks,
        stages,
    })
}
