use fgt_tensor::ops::{conv3d_tensor, ConvSpec};
use fgt_tensor::{Graph, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Direct 7-loop convolution.
fn naive_conv3d(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, spec: ConvSpec) -> Tensor<f64> {
    let s = x.shape();
    let ws = w.shape();
    let (bn, ci, d, h, wd) = (s[0], s[1], s[2], s[3], s[4]);
    let (co, cig, kd, kh, kw) = (ws[0], ws[1], ws[2], ws[3], ws[4]);
    let cog = co / spec.groups;
    let od = (d + 2 * spec.padding[0] - kd) / spec.stride[0] + 1;
    let oh = (h + 2 * spec.padding[1] - kh) / spec.stride[1] + 1;
    let ow = (wd + 2 * spec.padding[2] - kw) / spec.stride[2] + 1;
    let mut out = Tensor::zeros(&[bn, co, od, oh, ow]);
    for n in 0..bn {
        for o in 0..co {
            let g = o / cog;
            for z in 0..od {
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut acc = b.data()[o];
                        for c in 0..cig {
                            let cin = g * cig + c;
                            for a in 0..kd {
                                for bb in 0..kh {
                                    for e in 0..kw {
                                        let iz = (z * spec.stride[0] + a) as isize - spec.padding[0] as isize;
                                        let iy = (y * spec.stride[1] + bb) as isize - spec.padding[1] as isize;
                                        let ix = (xx * spec.stride[2] + e) as isize - spec.padding[2] as isize;
                                        if iz < 0 || iy < 0 || ix < 0 || iz >= d as isize || iy >= h as isize || ix >= wd as isize {
                                            continue;
                                        }
                                        let xi = (((n * ci + cin) * d + iz as usize) * h + iy as usize) * wd + ix as usize;
                                        let wi = (((o * cig + c) * kd + a) * kh + bb) * kw + e;
                                        acc += x.data()[xi] * w.data()[wi];
                                    }
                                }
                            }
                        }
                        out.data_mut()[(((n * co + o) * od + z) * oh + y) * ow + xx] = acc;
                    }
                }
            }
        }
    }
    out
}

#[test]
fn conv3d_matches_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = [
        (ConvSpec::new([1, 1, 1], [1, 1, 1]), [4, 2, 3, 3, 3], [2, 2, 3, 7, 6]),
        (ConvSpec::new([1, 2, 2], [0, 1, 1]), [3, 2, 1, 3, 3], [1, 2, 2, 8, 7]),
        (ConvSpec::new([2, 1, 2], [1, 2, 0]), [2, 3, 3, 5, 2], [1, 3, 5, 6, 6]),
        (ConvSpec::new([1, 1, 1], [0, 1, 1]).groups(4), [4, 1, 1, 3, 3], [2, 4, 2, 5, 5]),
        (ConvSpec::default(), [5, 3, 1, 1, 1], [2, 3, 2, 3, 3]),
    ];
    for (spec, wshape, xshape) in cases {
        let x = random(&xshape, &mut rng);
        let w = random(&wshape, &mut rng);
        let b = random(&[wshape[0]], &mut rng);
        let fast = conv3d_tensor(&x, &w, Some(&b), spec);
        let slow = naive_conv3d(&x, &w, &b, spec);
        assert_eq!(fast.shape(), slow.shape());
        for (a, e) in fast.data().iter().zip(slow.data()) {
            assert!((a - e).abs() < 1e-12, "{spec:?}: {a} vs {e}");
        }
    }
}

/// `<conv(x), y> == <x, convT(y)>` ties the transposed convolution to the oracle-checked one.
#[test]
fn conv_transpose_is_adjoint_of_conv() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (k, s, p) in [(4usize, 2usize, 1usize), (3, 1, 1), (3, 2, 1), (2, 2, 0)] {
        let (h, w) = (8usize, 6usize);
        let x = random(&[1, 3, h, w], &mut rng);
        let weight = random(&[4, 3, k, k], &mut rng);
        let g = Graph::<f64>::inference();
        let xv = g.constant(x.clone());
        let wv = g.constant(weight.clone());
        let y = xv.conv2d(&wv, None, s, p, 1).value();
        let ys = y.shape().to_vec();
        let probe = random(&ys, &mut rng);
        // the transposed conv maps [1,4,ho,wo] back to [1,3,h,w]; weight layout [C_in=4, C_out=3, k, k]
        let op = h - ((ys[2] - 1) * s + k - 2 * p);
        let back = g
            .constant(probe.clone())
            .conv_transpose2d(&wv, None, s, p, op)
            .value();
        assert_eq!(back.shape(), &[1, 3, h, w]);
        let lhs: f64 = y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(back.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10, "k={k} s={s} p={p}: {lhs} vs {rhs}");
    }
}
