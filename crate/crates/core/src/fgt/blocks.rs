//! Transformer blocks over token maps `[T, H′, W′, C]`.

use fgt_tensor::nn::{Conv2d, LayerNorm, Linear};
use fgt_tensor::{Bound, PadMode, ParamStore, Scalar, Var};

use super::attention::{key_bias, multi_head_attention, Mlp, Partition};
use super::config::{FgtConfig, FlowGuidance};
use crate::error::{shape_err, Result};

fn grid<T: Scalar>(x: &Var<T>) -> (usize, usize, usize, usize) {
    let s = x.shape();
    assert_eq!(s.len(), 4, "token map must be [T, H, W, C], got {s:?}");
    (s[0], s[1], s[2], s[3])
}

/// Depth-wise `k×k` convolution over a token map, `[T, H, W, C] -> [T, H/s, W/s, C]`,
/// replicate padded so the output grid is `⌈H/s⌉×⌈W/s⌉`.
fn depthwise<T: Scalar>(x: &Var<T>, conv: &Conv2d, p: &Bound<T>, k: usize, s: usize) -> Var<T> {
    let (_, h, w, c) = grid(x);
    let pad = |n: usize| {
        let total = (n.div_ceil(s) - 1) * s + k - n;
        (total / 2, total - total / 2)
    };
    let x = x
        .permute(&[0, 3, 1, 2])
        .pad(&[(0, 0), (0, 0), pad(h), pad(w)], PadMode::Replicate);
    let y = x.conv2d(p.get(conv.weight), conv.bias.map(|b| p.get(b)), s, 0, c);
    y.permute(&[0, 2, 3, 1])
}

/// Positional embedding generator: `x + DWConv3x3(x)` per frame.
#[derive(Clone, Debug)]
pub struct Peg {
    pub conv: Conv2d,
}

impl Peg {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        Self {
            conv: Conv2d::grouped(store, name, channels, channels, 3, 1, 0, channels),
        }
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        x.add(&depthwise(x, &self.conv, p, 3, 1))
    }
}

/// Pre-norm block: joint-zone attention across all frames, then an MLP.
#[derive(Clone, Debug)]
pub struct TemporalBlock {
    pub norm1: LayerNorm,
    pub qkv: Linear,
    pub proj: Linear,
    pub norm2: LayerNorm,
    pub mlp: Mlp,
    pub heads: usize,
    pub zones: usize,
}

impl TemporalBlock {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, config: &FgtConfig) -> Self {
        let c = config.channels;
        Self {
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), c),
            qkv: Linear::new(store, &format!("{name}.qkv"), c, 3 * c),
            proj: Linear::new(store, &format!("{name}.proj"), c, c),
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), c),
            mlp: Mlp::new(store, &format!("{name}.mlp"), c, config.mlp_ratio * c, c),
            heads: config.heads,
            zones: config.zones,
        }
    }

    /// Attention inside every zone cube. Returns the update (before the residual)
    /// and the attention probabilities `[zones·heads, T·n, T·n]`.
    pub fn temporal_mhsa<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> (Var<T>, Var<T>) {
        let (t, h, w, c) = grid(x);
        let part = Partition::new(t, h, w, h.div_ceil(self.zones), w.div_ceil(self.zones));
        let z = part.rows() * part.cols();
        let n = part.ph * part.pw;
        let qkv = self.qkv.forward(p, x);
        let cube = |i: usize| {
            part.split(&qkv.narrow(3, i * c, c))
                .reshape(&[t, z, n, c])
                .permute(&[1, 0, 2, 3])
                .reshape(&[z, t * n, c])
        };
        let one = Partition { frames: 1, ..part }.valid();
        let valid: Vec<bool> = (0..z).flat_map(|zi| (0..t).flat_map(move |_| zi * n..(zi + 1) * n)).map(|i| one[i]).collect();
        let bias = key_bias::<T>(z, &valid);
        let (out, probs) = multi_head_attention(&cube(0), &cube(1), &cube(2), self.heads, bias.as_ref());
        let out = part.merge(&out.reshape(&[z, t, n, c]).permute(&[1, 0, 2, 3]).reshape(&[t * z, n, c]));
        (self.proj.forward(p, &out), probs)
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, x: &Var<T>) -> Var<T> {
        let normed = self.norm1.forward(p, x);
        let x = x.add(&self.temporal_mhsa(p, &normed).0);
        x.add(&self.mlp.forward(p, &self.norm2.forward(p, &x)))
    }
}

/// Forces the flow gate, for ablations and sensitivity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GateMode {
    #[default]
    Free,
    Zero,
    One,
}

/// `T̂F = TF ⊙ σ(MLP(Concat(TI, TF)))`, `TK = Concat(TI, T̂F)`.
#[derive(Clone, Debug)]
pub struct FlowReweight {
    pub mlp: Mlp,
}

impl FlowReweight {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        Self {
            mlp: Mlp::new(store, name, 2 * channels, channels, channels),
        }
    }

    /// Returns `(TK, gate)`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, ti: &Var<T>, tf: &Var<T>, mode: GateMode) -> Result<(Var<T>, Var<T>)> {
        if ti.shape() != tf.shape() {
            return Err(shape_err(format!("frame tokens {:?} vs flow tokens {:?}", ti.shape(), tf.shape())));
        }
        let gate = match mode {
            GateMode::Free => self.mlp.forward(p, &Var::concat(&[ti, tf], 3)).sigmoid(),
            GateMode::Zero => p.constant(fgt_tensor::Tensor::zeros(&ti.shape())),
            GateMode::One => p.constant(fgt_tensor::Tensor::ones(&ti.shape())),
        };
        let weighted = tf.mul(&gate);
        Ok((Var::concat(&[ti, &weighted], 3), gate))
    }
}

/// Condensed tokens `TG = DWConv(TK, k, s)`.
#[derive(Clone, Debug)]
pub struct GlobalTokens {
    pub conv: Conv2d,
    pub kernel: usize,
    pub stride: usize,
}

impl GlobalTokens {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            conv: Conv2d::grouped(store, name, channels, channels, kernel, stride, 0, channels),
            kernel,
            stride,
        }
    }

    /// `[T, H′, W′, C] -> [T, ⌈H′/s⌉, ⌈W′/s⌉, C]`.
    pub fn forward<T: Scalar>(&self, p: &Bound<T>, tk: &Var<T>) -> Var<T> {
        depthwise(tk, &self.conv, p, self.kernel, self.stride)
    }
}

/// Pre-norm block: window attention with global keys, guided by flow tokens.
#[derive(Clone, Debug)]
pub struct SpatialBlock {
    pub reweight: Option<FlowReweight>,
    pub global: Option<GlobalTokens>,
    pub norm_k: LayerNorm,
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub proj: Linear,
    pub norm2: LayerNorm,
    pub mlp: Mlp,
    pub heads: usize,
    pub window: (usize, usize),
    pub guidance: FlowGuidance,
}

impl SpatialBlock {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, config: &FgtConfig) -> Self {
        let c = config.channels;
        let ck = config.guidance.fused_channels(c);
        let n = |s: &str| format!("{name}.{s}");
        Self {
            reweight: (config.guidance == FlowGuidance::Reweight).then(|| FlowReweight::new(store, &n("reweight"), c)),
            global: config
                .global_tokens
                .then(|| GlobalTokens::new(store, &n("global"), ck, config.kernel(), config.global_stride)),
            norm_k: LayerNorm::new(store, &n("norm_k"), ck),
            q: Linear::new(store, &n("q"), ck, c),
            k: Linear::new(store, &n("k"), ck, c),
            v: Linear::new(store, &n("v"), ck, c),
            proj: Linear::new(store, &n("proj"), c, c),
            norm2: LayerNorm::new(store, &n("norm2"), c),
            mlp: Mlp::new(store, &n("mlp"), c, config.mlp_ratio * c, c),
            heads: config.heads,
            window: config.window,
            guidance: config.guidance,
        }
    }

    /// Fused tokens `TK` from frame tokens and flow tokens.
    pub fn fuse<T: Scalar>(&self, p: &Bound<T>, ti: &Var<T>, tf: &Var<T>, mode: GateMode) -> Result<Var<T>> {
        match (self.guidance, &self.reweight) {
            (FlowGuidance::Reweight, Some(r)) => Ok(r.forward(p, ti, tf, mode)?.0),
            (FlowGuidance::Concat, _) => {
                if ti.shape() != tf.shape() {
                    return Err(shape_err(format!("frame tokens {:?} vs flow tokens {:?}", ti.shape(), tf.shape())));
                }
                Ok(Var::concat(&[ti, tf], 3))
            }
            _ => Ok(ti.clone()),
        }
    }

    /// Window attention of `tk`; keys and values also see the global tokens.
    /// Returns the update for the frame tokens and the probabilities
    /// `[T·windows·heads, h·w, h·w + G]`.
    pub fn spatial_mhsa<T: Scalar>(&self, p: &Bound<T>, tk: &Var<T>) -> (Var<T>, Var<T>) {
        let (t, gh, gw, _) = grid(tk);
        let c = self.q.out_dim;
        let (wh, ww) = (self.window.0.min(gh), self.window.1.min(gw));
        let part = Partition::new(t, gh, gw, wh, ww);
        let nw = part.rows() * part.cols();
        let n = wh * ww;
        let local = self.norm_k.forward(p, tk);
        let q = part.split(&self.q.forward(p, &local));
        let mut k = part.split(&self.k.forward(p, &local));
        let mut v = part.split(&self.v.forward(p, &local));
        let mut valid = part.valid();
        if let Some(g) = &self.global {
            let tg = self.norm_k.forward(p, &g.forward(p, tk));
            let (_, hg, wg, _) = grid(&tg);
            let m = hg * wg;
            let spread = |x: Var<T>| x.reshape(&[t, 1, m, c]).broadcast_to(&[t, nw, m, c]).reshape(&[t * nw, m, c]);
            k = Var::concat(&[&k, &spread(self.k.forward(p, &tg))], 1);
            v = Var::concat(&[&v, &spread(self.v.forward(p, &tg))], 1);
            valid = valid.chunks(n).flat_map(|w| w.iter().copied().chain(std::iter::repeat(true).take(m))).collect();
        }
        let bias = key_bias::<T>(t * nw, &valid);
        let (out, probs) = multi_head_attention(&q, &k, &v, self.heads, bias.as_ref());
        (self.proj.forward(p, &part.merge(&out)), probs)
    }

    pub fn forward<T: Scalar>(&self, p: &Bound<T>, ti: &Var<T>, tf: &Var<T>, mode: GateMode) -> Result<Var<T>> {
        let tk = self.fuse(p, ti, tf, mode)?;
        let x = ti.add(&self.spatial_mhsa(p, &tk).0);
        Ok(x.add(&self.mlp.forward(p, &self.norm2.forward(p, &x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::{Graph, Tensor};

    #[test]
    fn peg_reference_points() {
        let mut store = ParamStore::<f64>::new(0);
        let peg = Peg::new(&mut store, "peg", 3);
        store.set(peg.conv.weight, Tensor::zeros(&[3, 1, 3, 3]));
        store.set(peg.conv.bias.unwrap(), Tensor::zeros(&[3]));
        let g = Graph::inference();
        let p = store.bind(&g);
        let x = Tensor::from_fn(&[2, 5, 7, 3], |i| (i as f64 * 0.37).sin());
        assert_eq!(*peg.forward(&p, &g.constant(x.clone())).value(), x);
        // another resolution through the same weights
        let y = Tensor::from_fn(&[1, 3, 4, 3], |i| i as f64);
        assert_eq!(*peg.forward(&p, &g.constant(y.clone())).value(), y);

        store.set(peg.conv.weight, Tensor::full(&[3, 1, 3, 3], 1.0 / 9.0));
        let p = store.bind(&g);
        let out = peg.forward(&p, &g.constant(Tensor::full(&[1, 4, 4, 3], 0.7))).value();
        assert!(out.data().iter().all(|v| (v - 1.4).abs() < 1e-12));
    }

    #[test]
    fn global_grid_and_averaging() {
        let mut store = ParamStore::<f64>::new(0);
        let gt = GlobalTokens::new(&mut store, "g", 2, 8, 4);
        store.set(gt.conv.weight, Tensor::full(&[2, 1, 8, 8], 1.0 / 64.0));
        store.set(gt.conv.bias.unwrap(), Tensor::zeros(&[2]));
        let g = Graph::inference();
        let out = gt.forward(&store.bind(&g), &g.constant(Tensor::full(&[1, 64, 108, 2], -0.3))).value();
        assert_eq!(out.shape(), &[1, 16, 27, 2]);
        assert!(out.data().iter().all(|v| (v + 0.3).abs() < 1e-12));
    }

    #[test]
    fn gate_modes() {
        let mut store = ParamStore::<f64>::new(1);
        let r = FlowReweight::new(&mut store, "r", 4);
        let g = Graph::inference();
        let p = store.bind(&g);
        let ti = g.constant(Tensor::from_fn(&[1, 2, 2, 4], |i| i as f64 * 0.1));
        let tf = g.constant(Tensor::from_fn(&[1, 2, 2, 4], |i| 1.0 - i as f64 * 0.05));
        let (tk, _) = r.forward(&p, &ti, &tf, GateMode::Zero).unwrap();
        assert_eq!(tk.shape(), vec![1, 2, 2, 8]);
        assert!(tk.narrow(3, 4, 4).value().data().iter().all(|&v| v == 0.0));
        let (tk, _) = r.forward(&p, &ti, &tf, GateMode::One).unwrap();
        assert_eq!(*tk.narrow(3, 4, 4).value(), *tf.value());
        let (_, gate) = r.forward(&p, &ti, &tf, GateMode::Free).unwrap();
        assert!(gate.value().data().iter().all(|&v| v > 0.0 && v < 1.0));
        let bad = g.constant(Tensor::zeros(&[1, 2, 3, 4]));
        assert!(r.forward(&p, &ti, &bad, GateMode::Free).is_err());
    }
}
