mod common;

use fgt_core::flowcore::{epe, FlowField, RegionMask};
use fgt_core::harness::{generate_clip, random_clip_spec, MaskSpec};
use fgt_core::lafc::*;
use fgt_tensor::Graph;
use proptest::prelude::*;

fn tiny() -> LafcConfig {
    LafcConfig {
        base_channels: 4,
        edge_channels: 4,
        ..LafcConfig::default()
    }
}

#[test]
fn completion_keeps_valid_flow_bits() {
    let clip = generate_clip::<f32>(&random_clip_spec(3, 5, 20, 14, 2, 1.5, MaskSpec { coverage: 0.2, ..MaskSpec::default() }))
        .unwrap()
        .clip;
    let model = LafcModel::<f32>::new(&tiny(), 4).unwrap();
    for k in 0..4 {
        let masks = &clip.masks[..4];
        let window = FlowWindow::gather(&clip.flows_fwd, masks, k, 1, 3).unwrap();
        let done = model.complete_flow(&window).unwrap();
        for i in 0..20 * 14 {
            if !masks[k].data()[i] {
                let (a, b) = (&done.data()[2 * i..2 * i + 2], &clip.flows_fwd[k].data()[2 * i..2 * i + 2]);
                assert_eq!(a[0].to_bits(), b[0].to_bits());
                assert_eq!(a[1].to_bits(), b[1].to_bits());
            }
        }
    }
}

#[test]
fn window_size_must_match_the_model() {
    let model = LafcModel::<f32>::new(&tiny(), 0).unwrap();
    let flows = vec![FlowField::<f32>::zeros(8, 8); 6];
    let masks = vec![RegionMask::empty(8, 8); 6];
    let w = FlowWindow::gather(&flows, &masks, 2, 2, 1).unwrap();
    assert!(model.complete_flow(&w).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let model = LafcModel::<f32>::new(&tiny(), 7).unwrap();
    let back = LafcModel::<f32>::from_checkpoint(&model.to_checkpoint().unwrap()).unwrap();
    assert_eq!(back.config(), model.config());
    let flows: Vec<FlowField<f32>> = (0..3).map(|k| FlowField::constant(12, 9, k as f32, 1.0)).collect();
    let masks: Vec<RegionMask> = (0..3).map(|k| RegionMask::from_fn(12, 9, |x, y| x > k + 2 && x < 8 && y > 2 && y < 6)).collect();
    let w = FlowWindow::gather(&flows, &masks, 1, 1, 1).unwrap();
    assert_eq!(model.complete_flow(&w).unwrap(), back.complete_flow(&w).unwrap());
}

#[test]
fn short_training_improves_masked_epe() {
    let spec = random_clip_spec(11, 6, 24, 24, 1, 1.5, MaskSpec { coverage: 0.15, seed: 2, ..MaskSpec::default() });
    let clip = generate_clip::<f32>(&spec).unwrap().clip;
    let config = LafcConfig {
        base_channels: 8,
        edge_channels: 8,
        ..LafcConfig::default()
    };
    let sample = LafcSample::from_clip(&clip, FlowDirection::Forward, 2, &config).unwrap();
    let before = epe(sample.window.target(), &sample.targets.gt, &sample.targets.mask).unwrap();
    let schedule = TrainSchedule {
        iterations: 120,
        lr: 1e-3,
        milestone: Some(120),
        log_every: 1000,
        seed: 0,
    };
    let trained = train_lafc(&[sample.clone()], &[], &config, &schedule).unwrap();
    let after = evaluate_epe(&trained.model, &[sample]).unwrap();
    assert!(after < before, "epe {before} -> {after}");
    let l = &trained.losses;
    assert!(l[l.len() - 1].total < l[0].total);
}

#[test]
fn loss_terms_vanish_at_the_ground_truth() {
    let spec = random_clip_spec(5, 4, 16, 16, 1, 1.0, MaskSpec::default());
    let clip = generate_clip::<f64>(&spec).unwrap().clip;
    let config = tiny();
    let s = LafcSample::from_clip(&clip, FlowDirection::Backward, 1, &config).unwrap();
    let g = Graph::inference();
    let pred = g.constant(s.targets.gt.to_tensor());
    let edges = s.targets.edges.to_tensor::<f64>().reshape(&[1, 16, 16]);
    let logits = g.constant(edges.map(|e| if e > 0.5 { 40.0 } else { -40.0 }));
    let terms = lafc_loss(&pred, &logits, &s.targets, &config.weights).values();
    assert_eq!((terms.hole, terms.valid), (0.0, 0.0));
    assert!(terms.edge < 1e-12);
    // sub-pixel motion leaves only interpolation error
    assert!(terms.warp < 0.05, "{}", terms.warp);
}

proptest! {
    #[test]
    fn window_indices_stay_in_range(len in 1usize..40, n in 0usize..4, interval in 1usize..6, pick in 0usize..1000) {
        let t = pick % len;
        let idx = window_indices(t, n, interval, len);
        prop_assert_eq!(idx.len(), 2 * n + 1);
        prop_assert_eq!(idx[n], t);
        prop_assert!(idx.iter().all(|&i| i < len));
        prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        for (j, &i) in idx.iter().enumerate() {
            let ideal = t as isize + (j as isize - n as isize) * interval as isize;
            if ideal >= 0 && ideal < len as isize {
                prop_assert_eq!(i as isize, ideal);
            }
        }
    }
}
