mod common;

use fgt_core::flowcore::{FlowField, Frame, RegionMask};
use fgt_core::harness::{generate_masks, MaskSpec};
use fgt_core::propagation::propagate;
use proptest::prelude::*;
use rand::Rng;

fn moving_masks(w: usize, h: usize, t: usize, seed: u64) -> Vec<RegionMask> {
    generate_masks(&MaskSpec { coverage: 0.12, max_step: 0.5, seed, ..MaskSpec::default() }, w, h, t).unwrap()
}

#[test]
fn static_scene_copies_from_the_nearest_valid_frames() {
    // zero motion, but each frame a little brighter, so the chosen source shows
    let (frames, fwd, bwd) = common::translating_scene(20, 16, 6, (0, 0), 0.02);
    let masks = moving_masks(20, 16, 6, 3);
    let state = propagate(&frames, &masks, &fwd, &bwd, 0.5, 4).unwrap();
    let oracle = common::trajectory_oracle(&frames, &masks, (0, 0));
    let err = common::compare_to_oracle(&oracle, &state.frames, &state.masks).unwrap();
    assert!(err < 1e-12, "{err:e}");
}

#[test]
fn translating_scene_follows_the_warp_chain() {
    for (i, v) in [(1, 0), (0, -2), (1, 1), (-3, 2)].into_iter().enumerate() {
        let (frames, fwd, bwd) = common::translating_scene(24, 18, 7, v, 0.0);
        let masks = moving_masks(24, 18, 7, 10 + i as u64);
        let state = propagate(&frames, &masks, &fwd, &bwd, 0.5, 4).unwrap();
        let oracle = common::trajectory_oracle(&frames, &masks, v);
        let err = common::compare_to_oracle(&oracle, &state.frames, &state.masks).unwrap();
        assert!(err < 1e-12, "{v:?}: {err:e}");
    }
}

#[test]
fn a_hole_in_every_frame_is_unreachable() {
    let (frames, fwd, bwd) = common::translating_scene(10, 10, 4, (0, 0), 0.0);
    let masks = vec![RegionMask::from_fn(10, 10, |x, y| (3..6).contains(&x) && (3..6).contains(&y)); 4];
    let state = propagate(&frames, &masks, &fwd, &bwd, 0.5, 4).unwrap();
    assert_eq!(state.masks, masks);
    assert_eq!(state.passes(), 1);
}

#[test]
fn inconsistent_flows_block_propagation() {
    let (frames, fwd, _) = common::translating_scene(12, 12, 3, (1, 0), 0.0);
    // a backward flow that does not undo the forward one
    let bwd = vec![FlowField::constant(12, 12, 1.0, 0.0); 2];
    let masks = moving_masks(12, 12, 3, 1);
    let state = propagate(&frames, &masks, &fwd, &bwd, 0.5, 4).unwrap();
    assert_eq!(state.masks, masks);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn valid_pixels_are_never_touched(seed in 0u64..10_000, w in 4usize..14, h in 4usize..14, t in 2usize..5, tau in 0.0f64..3.0) {
        let mut r = common::rng(seed);
        let frames: Vec<Frame<f64>> = (0..t).map(|_| Frame::from_fn(w, h, |_, _| [r.gen(), r.gen(), r.gen()])).collect();
        let masks: Vec<RegionMask> = (0..t).map(|_| common::random_mask(&mut r, w, h)).collect();
        let fwd: Vec<FlowField<f64>> = (0..t - 1).map(|_| common::random_flow(&mut r, w, h, 2.0)).collect();
        let bwd: Vec<FlowField<f64>> = fwd.iter().map(|f| {
            let mut b = f.negated();
            b.data_mut().iter_mut().for_each(|v| *v += r.gen_range(-0.5..0.5));
            b
        }).collect();
        let state = propagate(&frames, &masks, &fwd, &bwd, tau, 3).unwrap();
        let filled: usize = state.history.iter().flatten().sum();
        let before: usize = masks.iter().map(|m| m.count()).sum();
        prop_assert_eq!(before - state.holes(), filled);
        for k in 0..t {
            for i in 0..w * h {
                let (x, y) = (i % w, i / w);
                if !masks[k].get(x, y) {
                    prop_assert!(!state.masks[k].get(x, y));
                    let (a, b) = (state.frames[k].get(x, y), frames[k].get(x, y));
                    prop_assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
                } else if !state.masks[k].get(x, y) {
                    // filled values are convex combinations of frame values
                    prop_assert!(state.frames[k].get(x, y).iter().all(|v| (0.0..=1.0).contains(v)));
                }
            }
        }
    }
}
