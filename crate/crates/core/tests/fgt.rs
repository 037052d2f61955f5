mod common;

use fgt_core::fgt::*;
use fgt_core::flowcore::{FlowField, Frame, RegionMask};
use fgt_tensor::{Graph, ParamStore, Tensor};
use proptest::prelude::*;
use rand::Rng;

fn toy_config() -> FgtConfig {
    FgtConfig {
        channels: 8,
        heads: 2,
        blocks: vec![BlockKind::Temporal, BlockKind::Spatial],
        window: (1, 1),
        zones: 1,
        global_stride: 1,
        ..FgtConfig::default()
    }
}

fn toy_clip(seed: u64, t: usize, w: usize, h: usize) -> (Vec<Frame<f64>>, Vec<RegionMask>, Vec<FlowField<f64>>) {
    let mut r = common::rng(seed);
    let frames = (0..t).map(|_| Frame::from_fn(w, h, |_, _| [r.gen(), r.gen(), r.gen()])).collect();
    let masks = (0..t).map(|_| common::random_mask(&mut r, w, h)).collect();
    let flows = (0..t - 1).map(|_| common::random_flow(&mut r, w, h, 2.0)).collect();
    (frames, masks, flows)
}

#[test]
fn fgt_forward_gradients_on_a_four_token_toy() {
    let config = toy_config();
    let mut store = ParamStore::<f64>::new(3);
    let net = FgtNet::new(&mut store, &config).unwrap();
    let (frames, masks, flows) = toy_clip(1, 2, 8, 8);
    let inputs = FgtInputs::new(&frames, &masks, &flows, 1.0).unwrap();
    let err = common::grad_error(&store, &[inputs.frames.clone(), inputs.flows.clone()], |p, x| {
        let m = p.constant(inputs.masks.clone());
        let out = net.forward(p, &x[0], &m, &x[1], ForwardOptions::default()).unwrap();
        assert_eq!(out.shape(), vec![2, 3, 8, 8]);
        out.mul(&out).mean()
    });
    assert!(err < 1e-4, "relative gradient error {err:e}");
}

#[test]
fn frame_order_permutes_the_output() {
    let config = FgtConfig {
        channels: 8,
        heads: 2,
        ..FgtConfig::small()
    };
    let model = FgtModel::<f64>::new(&config, 5).unwrap();
    let (frames, masks, flows) = toy_clip(2, 4, 16, 12);
    let inputs = FgtInputs::new(&frames, &masks, &flows, 4.0).unwrap();
    let perm = [2usize, 0, 3, 1];
    let shuffle = |t: &Tensor<f64>| {
        let parts: Vec<Tensor<f64>> = perm.iter().map(|&i| t.narrow(0, i, 1)).collect();
        Tensor::concat(&parts.iter().collect::<Vec<_>>(), 0)
    };
    let shuffled = FgtInputs {
        frames: shuffle(&inputs.frames),
        masks: shuffle(&inputs.masks),
        flows: shuffle(&inputs.flows),
    };
    for peg in [false, true] {
        let opts = ForwardOptions { peg, ..ForwardOptions::default() };
        let g = Graph::inference();
        let p = model.store.bind(&g);
        let a = model.net.forward_inputs(&p, &inputs, opts).unwrap().value();
        let b = model.net.forward_inputs(&p, &shuffled, opts).unwrap().value();
        let diff = shuffle(&a).zip_map(&b, |x, y| x - y).max_abs();
        assert!(diff < 1e-10, "peg {peg}: {diff:e}");
    }
}

#[test]
fn closed_gate_ignores_flow_tokens() {
    let config = FgtConfig {
        channels: 8,
        heads: 2,
        window: (2, 2),
        global_stride: 2,
        ..FgtConfig::small()
    };
    let mut store = ParamStore::<f64>::new(9);
    let block = SpatialBlock::new(&mut store, "s", &config);
    let mut r = common::rng(4);
    let ti = common::random_tensor(&mut r, &[2, 4, 5, 8], 1.0);
    let tf = common::random_tensor(&mut r, &[2, 4, 5, 8], 1.0);
    let tf2 = tf.map(|v| v * 3.0 - 0.5);
    let g = Graph::inference();
    let p = store.bind(&g);
    let run = |f: &Tensor<f64>, mode| block.forward(&p, &g.constant(ti.clone()), &g.constant(f.clone()), mode).unwrap().value();
    // zero gate: flow tokens are concatenated as zeros, whatever their value
    assert_eq!(*run(&tf, GateMode::Zero), *run(&tf2, GateMode::Zero));
    let moved = run(&tf, GateMode::Free).zip_map(&run(&tf2, GateMode::Free), |a, b| a - b).max_abs();
    assert!(moved > 1e-6, "free gate output did not react to flow tokens");
}

#[test]
fn reweight_gate_lies_in_the_unit_interval() {
    let mut store = ParamStore::<f64>::new(2);
    let r = FlowReweight::new(&mut store, "r", 6);
    let mut rng = common::rng(8);
    let g = Graph::inference();
    let p = store.bind(&g);
    let ti = g.constant(common::random_tensor(&mut rng, &[1, 3, 3, 6], 10.0));
    let tf = g.constant(common::random_tensor(&mut rng, &[1, 3, 3, 6], 10.0));
    let (tk, gate) = r.forward(&p, &ti, &tf, GateMode::Free).unwrap();
    assert_eq!(tk.shape(), vec![1, 3, 3, 12]);
    assert!(gate.value().data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    let bad = g.constant(Tensor::zeros(&[1, 3, 2, 6]));
    assert!(r.forward(&p, &ti, &bad, GateMode::Free).is_err());
}

#[test]
fn checkpoint_round_trip_reproduces_outputs() {
    let config = FgtConfig {
        channels: 8,
        heads: 2,
        global_tokens: false,
        guidance: FlowGuidance::Concat,
        ..FgtConfig::small()
    };
    let model = FgtModel::<f32>::new(&config, 11).unwrap();
    let back = FgtModel::<f32>::from_checkpoint(&model.to_checkpoint().unwrap()).unwrap();
    assert_eq!(back.config(), &config);
    let (frames, masks, flows) = toy_clip(3, 3, 12, 12);
    let cast = |f: &Vec<Frame<f64>>| f.iter().map(|x| x.cast::<f32>()).collect::<Vec<_>>();
    let fl: Vec<FlowField<f32>> = flows.iter().map(|f| f.cast()).collect();
    let a = fgt_forward(&cast(&frames), &masks, &fl, &model).unwrap();
    let b = fgt_forward(&cast(&frames), &masks, &fl, &back).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = FgtConfig::small();
    for bad in [
        FgtConfig { channels: 30, ..base.clone() },
        FgtConfig { heads: 5, ..base.clone() },
        FgtConfig { global_stride: 4, global_kernel: Some(3), ..base.clone() },
        FgtConfig { blocks: vec![], ..base.clone() },
        FgtConfig { flow_scale: 0.0, ..base.clone() },
    ] {
        assert!(FgtModel::<f32>::new(&bad, 0).is_err(), "{bad:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_split_merge_round_trip(t in 1usize..3, h in 1usize..13, w in 1usize..13, ph in 1usize..6, pw in 1usize..6, c in 1usize..4) {
        let part = Partition::new(t, h, w, ph, pw);
        let x = Tensor::from_fn(&[t, h, w, c], |i| i as f64 + 0.5);
        let g = Graph::inference();
        let patches = part.split(&g.constant(x.clone()));
        prop_assert_eq!(patches.shape(), vec![t * h.div_ceil(ph) * w.div_ceil(pw), ph * pw, c]);
        // each element appears exactly once; the rest is zero padding
        let nonzero = patches.value().data().iter().filter(|&&v| v != 0.0).count();
        prop_assert_eq!(nonzero, t * h * w * c);
        prop_assert_eq!(part.valid().iter().filter(|&&v| v).count(), t * h * w);
        prop_assert_eq!(&*part.merge(&patches).value(), &x);
    }

    #[test]
    fn masked_keys_get_no_weight(b in 1usize..3, n in 1usize..5, m in 2usize..7, seed in 0u64..500) {
        let mut r = common::rng(seed);
        let valid: Vec<bool> = (0..b * m).map(|i| i % m == 0 || r.gen_bool(0.6)).collect();
        let bias = key_bias::<f64>(b, &valid);
        let g = Graph::inference();
        let q = g.constant(common::random_tensor(&mut r, &[b, n, 4], 2.0));
        let k = g.constant(common::random_tensor(&mut r, &[b, m, 4], 2.0));
        let v = g.constant(common::random_tensor(&mut r, &[b, m, 4], 2.0));
        let (_, probs) = multi_head_attention(&q, &k, &v, 2, bias.as_ref());
        let probs = probs.value();
        for (row, p) in probs.data().chunks(m).enumerate() {
            let batch = row / (2 * n);
            for (j, &pj) in p.iter().enumerate() {
                if !valid[batch * m + j] {
                    prop_assert_eq!(pj, 0.0);
                }
            }
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
