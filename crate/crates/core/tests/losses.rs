mod common;

use fgt_core::losses::*;
use fgt_tensor::gradcheck::check_gradients;
use fgt_tensor::optim::Adam;
use fgt_tensor::{Graph, ParamStore, Tensor};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn reconstruction_matches_direct_sums() {
    let mut r = common::rng(5);
    let (t, c, h, w) = (3, 3, 5, 4);
    let pred = common::random_tensor(&mut r, &[t, c, h, w], 1.0);
    let gt = common::random_tensor(&mut r, &[t, c, h, w], 1.0);
    let mask = Tensor::from_fn(&[t, 1, h, w], |_| if r.gen_bool(0.3) { 1.0 } else { 0.0 });
    let (mut hole, mut nh, mut valid, mut nv) = (0.0, 0.0, 0.0, 0.0);
    for ti in 0..t {
        for ci in 0..c {
            for i in 0..h * w {
                let d = (pred.data()[(ti * c + ci) * h * w + i] - gt.data()[(ti * c + ci) * h * w + i]).abs();
                if mask.data()[ti * h * w + i] > 0.5 {
                    hole += d;
                    nh += 1.0;
                } else {
                    valid += d;
                    nv += 1.0;
                }
            }
        }
    }
    let g = Graph::inference();
    let terms = reconstruction_loss(&g.constant(pred), &g.constant(gt), &mask, 2.0, 0.5).values();
    assert!((terms.hole - hole / nh).abs() < 1e-12);
    assert!((terms.valid - valid / nv).abs() < 1e-12);
    assert!((terms.total - (2.0 * hole / nh + 0.5 * valid / nv)).abs() < 1e-12);
}

#[test]
fn hinge_gradients() {
    let mut r = common::rng(6);
    // keep scores away from the hinge corners at ±1
    let away = |r: &mut rand_chacha::ChaCha8Rng| {
        let v: f64 = r.gen_range(-2.0..2.0);
        if (v.abs() - 1.0).abs() < 0.05 { v + 0.1 } else { v }
    };
    let real = Tensor::from_fn(&[2, 2, 2], |_| away(&mut r));
    let fake = Tensor::from_fn(&[2, 2, 2], |_| away(&mut r));
    let d = check_gradients(&[real, fake.clone()], 1e-6, |_, x| tpatchgan_d_loss(&x[0], &x[1]));
    assert!(d.max_rel_error() < 1e-6, "{d:?}");
    let gl = check_gradients(&[fake], 1e-6, |_, x| tpatchgan_g_loss(&x[0]));
    assert!(gl.max_rel_error() < 1e-6, "{gl:?}");
}

#[test]
fn discriminator_input_gradient_on_a_tiny_clip() {
    let mut store = ParamStore::<f64>::new(2);
    let d = Discriminator::new(&mut store, &DiscriminatorConfig { channels: [2, 2, 2] }).unwrap();
    let mut r = common::rng(7);
    let clip = Tensor::from_fn(&[3, 3, 2, 2], |_| r.gen_range(0.0..1.0));
    // six normalised layers shrink input gradients to ~1e-7; the net is piecewise
    // linear, so a wider step is exact away from kinks and beats rounding
    let report = check_gradients(&[clip], 1e-4, |g, x| {
        let p = store.bind_frozen(g);
        tpatchgan_g_loss(&d.forward(&p, &x[0]).unwrap().scores)
    });
    assert!(report.max_rel_error() < 1e-4, "{report:?}");
}

#[test]
fn discriminator_learns_to_separate_a_frozen_generator() {
    let (t, h, w) = (4, 16, 16);
    let real = Tensor::from_fn(&[t, 3, h, w], |i| {
        let x = (i % w) as f64;
        let y = ((i / w) % h) as f64;
        common::pattern(x, y)[(i / (h * w)) % 3]
    });
    // the frozen generator's output: a flat grey clip
    let fake = Tensor::full(&[t, 3, h, w], 0.5);
    let mut store = ParamStore::<f64>::new(3);
    let d = Discriminator::new(&mut store, &DiscriminatorConfig::small()).unwrap();
    let mut adam = Adam::default();
    let mut losses = Vec::new();
    for _ in 0..100 {
        let g = Graph::new();
        let p = store.bind(&g);
        let a = d.forward(&p, &g.constant(real.clone())).unwrap();
        let b = d.forward(&p, &g.constant(fake.clone())).unwrap();
        let loss = tpatchgan_d_loss(&a.scores, &b.scores);
        losses.push(loss.value().item());
        let grads = g.backward(&loss);
        adam.step(&mut store, &p, &grads, 1e-3);
        d.update_u(&mut store, b.u);
    }
    let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
    let tail: f64 = losses[90..].iter().sum::<f64>() / 10.0;
    assert!(tail < 0.5 * head, "loss {head} -> {tail}");
}

proptest! {
    #[test]
    fn hinge_loss_is_nonnegative(real in proptest::collection::vec(-5.0f64..5.0, 1..20), fake in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
        let g = Graph::inference();
        let r = g.constant(Tensor::new(&[real.len()], real.clone()));
        let f = g.constant(Tensor::new(&[fake.len()], fake.clone()));
        let loss = tpatchgan_d_loss(&r, &f).value().item();
        let expect = real.iter().map(|v| (1.0 - v).max(0.0)).sum::<f64>() / real.len() as f64
            + fake.iter().map(|v| (1.0 + v).max(0.0)).sum::<f64>() / fake.len() as f64;
        prop_assert!(loss >= 0.0);
        prop_assert!((loss - expect).abs() < 1e-12);
        let gl = tpatchgan_g_loss(&f).value().item();
        prop_assert!((gl + fake.iter().sum::<f64>() / fake.len() as f64).abs() < 1e-12);
    }
}
