use fgt_tensor::nn::{Conv2d, Conv3d, ConvTranspose2d};
use fgt_tensor::{Bound, ConvSpec, Graph, PadMode, ParamStore, Scalar, Tensor, Var};

use super::config::LafcConfig;
use super::p3d::P3dBlock;
use super::window::FlowWindow;
use crate::error::{shape_err, Error, Result};
use crate::flowcore::FlowField;

const SLOPE: f64 = 0.2;

fn act<T: Scalar>(x: &Var<T>) -> Var<T> {
    x.leaky_relu(T::of(SLOPE))
}

/// Four 3x3 convolutions with a residual around the middle pair; one logit per pixel.
#[derive(Clone, Debug)]
pub struct EdgeHead {
    pub convs: [Conv2d; 4],
}

impl EdgeHead {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        let c = channels;
        Self {
            convs: [
                Conv2d::new(store, &format!("{name}.0"), 2, c, 3, 1, 1),
                Conv2d::new(store, &format!("{name}.1"), c, c, 3, 1, 1),
                Conv2d::new(store, &format!("{name}.2"), c, c, 3, 1, 1),
                Conv2d::new(store, &format!("{name}.3"), c, 1, 3, 1, 1),
            ],
        }
    }

    /// `flow: [2, H, W]` → logits `[1, H, W]`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, flow: &Var<T>) -> Var<T> {
        let s = flow.shape();
        let x = flow.reshape(&[1, 2, s[1], s[2]]);
        let a = act(&self.convs[0].forward(p, &x));
        let b = act(&self.convs[1].forward(p, &a));
        let c = act(&self.convs[2].forward(p, &b).add(&a));
        self.convs[3].forward(p, &c).reshape(&[1, s[1], s[2]])
    }
}

/// Layer layout of the flow completion network.
#[derive(Clone, Debug)]
pub struct LafcNet {
    pub config: LafcConfig,
    stem: Conv3d,
    stages: Vec<P3dBlock>,
    skips: Vec<P3dBlock>,
    downs: Vec<Conv3d>,
    bottleneck: P3dBlock,
    ups: Vec<ConvTranspose2d>,
    merges: Vec<Vec<Conv2d>>,
    out: Conv2d,
    pub edge: EdgeHead,
}

impl LafcNet {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, config: &LafcConfig) -> Result<Self> {
        config.validate()?;
        let len = config.window_len();
        let levels = config.encoder_stages;
        let ch = |l: usize| config.base_channels << l;
        let stem = Conv3d::new(store, "stem", 3, ch(0), [1, 3, 3], ConvSpec::new([1, 1, 1], [0, 1, 1]));
        let mut stages = Vec::new();
        let mut skips = Vec::new();
        let mut downs = Vec::new();
        for l in 0..levels {
            if l > 0 {
                downs.push(Conv3d::new(
                    store,
                    &format!("down{l}"),
                    ch(l - 1),
                    ch(l),
                    [1, 3, 3],
                    ConvSpec::new([1, 2, 2], [0, 1, 1]),
                ));
            }
            if l + 1 < levels {
                stages.push(P3dBlock::new(store, &format!("stage{l}"), ch(l), ch(l), 3)?);
                skips.push(P3dBlock::reducing(store, &format!("skip{l}"), ch(l), ch(l), len));
            }
        }
        let bottleneck = P3dBlock::reducing(store, "bottleneck", ch(levels - 1), ch(levels - 1), len);
        let mut ups = Vec::new();
        let mut merges = Vec::new();
        for l in 0..levels - 1 {
            ups.push(ConvTranspose2d::new(store, &format!("up{l}"), ch(l + 1), ch(l), 4, 2, 1, 0));
            let mut m = Vec::new();
            for d in 0..config.decoder_depth.max(1) {
                let cin = if d == 0 { 2 * ch(l) } else { ch(l) };
                m.push(Conv2d::new(store, &format!("merge{l}.{d}"), cin, ch(l), 3, 1, 1));
            }
            merges.push(m);
        }
        let out = Conv2d::new(store, "out", ch(0), 2, 3, 1, 1);
        let edge = EdgeHead::new(store, "edge", config.edge_channels);
        Ok(Self {
            config: config.clone(),
            stem,
            stages,
            skips,
            downs,
            bottleneck,
            ups,
            merges,
            out,
            edge,
        })
    }

    /// `input: [1, 3, 2n+1, H, W]` (dx, dy, mask) → completed centre flow `[2, H, W]`
    /// before compositing. Sizes not divisible by the downsampling factor are
    /// replicate padded and cropped back.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, input: &Var<T>) -> Result<Var<T>> {
        let s = input.shape();
        let len = self.config.window_len();
        if s.len() != 5 || s[0] != 1 || s[1] != 3 || s[2] != len {
            return Err(shape_err(format!("LAFC input must be [1, 3, {len}, H, W], got {s:?}")));
        }
        let (h, w) = (s[3], s[4]);
        let f = self.config.downsampling();
        let (ph, pw) = (h.div_ceil(f) * f - h, w.div_ceil(f) * f - w);
        let x0 = input.pad(&[(0, 0), (0, 0), (0, 0), (0, ph), (0, pw)], PadMode::Replicate);
        let centre = x0.narrow(2, self.config.n, 1).narrow(1, 0, 2).reshape(&[1, 2, h + ph, w + pw]);

        let mut x = act(&self.stem.forward(p, &x0));
        let mut skips = Vec::new();
        for l in 0..self.config.encoder_stages {
            if l > 0 {
                x = act(&self.downs[l - 1].forward(p, &x));
            }
            if l < self.stages.len() {
                x = act(&self.stages[l].forward(p, &x)?);
                let sk = act(&self.skips[l].forward(p, &x)?);
                let ss = sk.shape();
                skips.push(sk.reshape(&[1, ss[1], ss[3], ss[4]]));
            }
        }
        let b = act(&self.bottleneck.forward(p, &x)?);
        let bs = b.shape();
        let mut y = b.reshape(&[1, bs[1], bs[3], bs[4]]);
        for l in (0..self.ups.len()).rev() {
            y = act(&self.ups[l].forward(p, &y));
            y = Var::concat(&[&y, &skips[l]], 1);
            for conv in &self.merges[l] {
                y = act(&conv.forward(p, &y));
            }
        }
        let out = self.out.forward(p, &y).add(&centre);
        Ok(out.narrow(2, 0, h).narrow(3, 0, w).reshape(&[2, h, w]))
    }
}

/// Parameters plus layout.
#[derive(Clone, Debug)]
pub struct LafcModel<T> {
    pub net: LafcNet,
    pub store: ParamStore<T>,
}

impl<T: Scalar> LafcModel<T> {
    pub fn new(config: &LafcConfig, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new(seed);
        let net = LafcNet::new(&mut store, config)?;
        Ok(Self { net, store })
    }

    pub fn config(&self) -> &LafcConfig {
        &self.net.config
    }

    /// Complete the centre flow of `window` and composite it into the valid pixels.
    pub fn complete_flow(&self, window: &FlowWindow<T>) -> Result<FlowField<T>> {
        if window.n != self.net.config.n {
            return Err(Error::Config(format!(
                "window n={} but model expects n={}",
                window.n, self.net.config.n
            )));
        }
        let g = Graph::inference();
        let p = self.store.bind(&g);
        let raw = self.net.forward(&p, &g.constant(window.to_tensor()))?.value();
        composite_flow(window.target(), &raw, window.target_mask())
    }
}

/// `F̃ ⊙ (1 − M) + out ⊙ M`, leaving valid pixels bit-identical.
pub fn composite_flow<T: Scalar>(
    initial: &FlowField<T>,
    raw: &Tensor<T>,
    mask: &crate::flowcore::RegionMask,
) -> Result<FlowField<T>> {
    if !raw.all_finite() {
        return Err(Error::NonFinite("LAFC output".into()));
    }
    let (w, h) = (initial.width(), initial.height());
    let mut out = initial.clone();
    let plane = w * h;
    for i in 0..plane {
        if mask.data()[i] {
            out.data_mut()[2 * i] = raw.data()[i];
            out.data_mut()[2 * i + 1] = raw.data()[plane + i];
        }
    }
    Ok(out)
}
