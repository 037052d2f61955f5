use fgt_tensor::{Bound, Graph, ParamStore, Scalar, Tensor, Var};

use super::blocks::{GateMode, Peg, SpatialBlock, TemporalBlock};
use super::config::{BlockKind, FgtConfig, FlowGuidance};
use super::embed::{Decoder, PatchEmbed};
use crate::error::{shape_err, Error, Result};
use crate::flowcore::{FlowField, Frame, RegionMask};
use crate::video::{composite, corrupt, frames_to_tensor, masks_to_tensor, tensor_to_frames, FrameSequence};

#[derive(Clone, Debug)]
pub enum Block {
    Temporal(TemporalBlock),
    Spatial(SpatialBlock),
}

/// Switches used by tests and ablations; the defaults are the trained behaviour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForwardOptions {
    pub gate: GateMode,
    pub peg: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            gate: GateMode::Free,
            peg: true,
        }
    }
}

/// Network inputs as tensors: holes zeroed `[T, 3, H, W]`, masks `[T, 1, H, W]`,
/// scaled forward flows `[T, 2, H, W]` (zero for the last frame).
#[derive(Clone, Debug, PartialEq)]
pub struct FgtInputs<T> {
    pub frames: Tensor<T>,
    pub masks: Tensor<T>,
    pub flows: Tensor<T>,
}

impl<T: Scalar> FgtInputs<T> {
    pub fn new(frames: &[Frame<T>], masks: &[RegionMask], flows_fwd: &[FlowField<T>], flow_scale: f64) -> Result<Self> {
        let n = frames.len();
        if n == 0 || masks.len() != n || flows_fwd.len() + 1 != n {
            return Err(shape_err(format!(
                "fgt needs T frames, T masks and T-1 forward flows, got {n}, {}, {}",
                masks.len(),
                flows_fwd.len()
            )));
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        for (i, f) in frames.iter().enumerate() {
            if (f.width(), f.height()) != (w, h) || (masks[i].width(), masks[i].height()) != (w, h) {
                return Err(shape_err(format!("frame or mask {i} is not {w}x{h}")));
            }
        }
        let mut flows = Tensor::zeros(&[n, 2, h, w]);
        let inv = T::of(1.0 / flow_scale);
        for (t, f) in flows_fwd.iter().enumerate() {
            if (f.width(), f.height()) != (w, h) {
                return Err(shape_err(format!("flow {t} is not {w}x{h}")));
            }
            let out = &mut flows.data_mut()[t * 2 * h * w..(t + 1) * 2 * h * w];
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = f.get(x, y);
                    out[y * w + x] = dx * inv;
                    out[h * w + y * w + x] = dy * inv;
                }
            }
        }
        Ok(Self {
            frames: frames_to_tensor(&corrupt(frames, masks)),
            masks: masks_to_tensor(masks),
            flows,
        })
    }
}

#[derive(Clone, Debug)]
pub struct FgtNet {
    pub config: FgtConfig,
    pub embed: PatchEmbed,
    pub flow_embed: Option<PatchEmbed>,
    pub peg: Peg,
    pub blocks: Vec<Block>,
    pub decoder: Decoder,
}

impl FgtNet {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, config: &FgtConfig) -> Result<Self> {
        config.validate()?;
        let c = config.channels;
        let blocks = config
            .blocks
            .iter()
            .enumerate()
            .map(|(i, kind)| match kind {
                BlockKind::Temporal => Block::Temporal(TemporalBlock::new(store, &format!("block{i}"), config)),
                BlockKind::Spatial => Block::Spatial(SpatialBlock::new(store, &format!("block{i}"), config)),
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            embed: PatchEmbed::new(store, "embed", 4, c),
            flow_embed: (config.guidance != FlowGuidance::None).then(|| PatchEmbed::new(store, "flow_embed", 2, c)),
            peg: Peg::new(store, "peg", c),
            blocks,
            decoder: Decoder::new(store, "decoder", c),
        })
    }

    /// Raw output `[T, 3, H, W]` before compositing. `frames` holds intensities in
    /// `[0, 1]`; hole pixels are ignored.
    pub fn forward<T: Scalar>(
        &self,
        p: &Bound<T>,
        frames: &Var<T>,
        masks: &Var<T>,
        flows: &Var<T>,
        opts: ForwardOptions,
    ) -> Result<Var<T>> {
        let s = frames.shape();
        if s.len() != 4 || s[1] != 3 || masks.shape() != [s[0], 1, s[2], s[3]] || flows.shape() != [s[0], 2, s[2], s[3]] {
            return Err(shape_err(format!(
                "fgt inputs: frames {s:?}, masks {:?}, flows {:?}",
                masks.shape(),
                flows.shape()
            )));
        }
        let (h, w) = (s[2], s[3]);
        // centre intensities so holes (zero) read as mid-grey
        let centred = frames.add_scalar(T::of(-0.5)).mul(&masks.one_minus());
        let mut x = self.embed.forward(p, &Var::concat(&[&centred, masks], 1))?;
        let tf = match &self.flow_embed {
            Some(e) => e.forward(p, flows)?,
            None => x.clone(),
        };
        for (i, block) in self.blocks.iter().enumerate() {
            x = match block {
                Block::Temporal(b) => b.forward(p, &x),
                Block::Spatial(b) => b.forward(p, &x, &tf, opts.gate)?,
            };
            if i == 0 && opts.peg {
                x = self.peg.forward(p, &x);
            }
            if !x.value().all_finite() {
                return Err(Error::NonFinite(format!("fgt block {i}")));
            }
        }
        Ok(self.decoder.forward(p, &x, h, w).add_scalar(T::of(0.5)))
    }

    pub fn forward_inputs<T: Scalar>(&self, p: &Bound<T>, inputs: &FgtInputs<T>, opts: ForwardOptions) -> Result<Var<T>> {
        let g = p.graph();
        self.forward(
            p,
            &g.constant(inputs.frames.clone()),
            &g.constant(inputs.masks.clone()),
            &g.constant(inputs.flows.clone()),
            opts,
        )
    }
}

/// Parameters plus layout.
#[derive(Clone, Debug)]
pub struct FgtModel<T> {
    pub net: FgtNet,
    pub store: ParamStore<T>,
}

impl<T: Scalar> FgtModel<T> {
    pub fn new(config: &FgtConfig, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new(seed);
        let net = FgtNet::new(&mut store, config)?;
        Ok(Self { net, store })
    }

    pub fn config(&self) -> &FgtConfig {
        &self.net.config
    }
}

/// Synthesize the hole pixels and composite them into the input frames.
///
/// Valid pixels are copied from `frames` untouched; hole pixels are the decoder
/// output clamped to `[0, 1]`.
pub fn fgt_forward<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    flows_fwd: &[FlowField<T>],
    model: &FgtModel<T>,
) -> Result<FrameSequence<T>> {
    fgt_forward_with(frames, masks, flows_fwd, model, ForwardOptions::default())
}

pub fn fgt_forward_with<T: Scalar>(
    frames: &[Frame<T>],
    masks: &[RegionMask],
    flows_fwd: &[FlowField<T>],
    model: &FgtModel<T>,
    opts: ForwardOptions,
) -> Result<FrameSequence<T>> {
    let inputs = FgtInputs::new(frames, masks, flows_fwd, model.config().flow_scale)?;
    let g = Graph::inference();
    let p = model.store.bind(&g);
    let raw = model.net.forward_inputs(&p, &inputs, opts)?.clamp(T::zero(), T::one());
    let out = tensor_to_frames(&raw.value())?;
    Ok(frames.iter().zip(&out).zip(masks).map(|((x, y), m)| composite(x, y, m)).collect())
}
