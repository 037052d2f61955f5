use std::io::Write;

use fgt_tensor::optim::{Adam, StepLr};
use fgt_tensor::{Graph, Scalar, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{lafc_milestone, LafcConfig, TrainSchedule};
use super::loss::{lafc_loss, LafcTargets, LossTerms};
use super::network::{composite_flow, LafcModel};
use super::window::FlowWindow;
use crate::error::{shape_err, Error, Result};
use crate::flowcore::epe;
use crate::video::Clip;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowDirection {
    Forward,
    Backward,
}

/// One completion problem: a window and the ground truth of its centre.
#[derive(Clone, Debug)]
pub struct LafcSample<T> {
    pub window: FlowWindow<T>,
    pub input: Tensor<T>,
    pub targets: LafcTargets<T>,
}

impl<T: Scalar> LafcSample<T> {
    /// Window centred on flow `k` of `clip` in direction `dir`.
    pub fn from_clip(clip: &Clip<T>, dir: FlowDirection, k: usize, config: &LafcConfig) -> Result<Self> {
        clip.validate()?;
        let nflows = clip.len() - 1;
        if k >= nflows {
            return Err(shape_err(format!("flow index {k} out of range for {nflows} flows")));
        }
        // flow k of either direction lives on the frame it starts from
        let (flows, reverse, masks, from, to): (_, _, Vec<_>, usize, usize) = match dir {
            FlowDirection::Forward => (&clip.flows_fwd, &clip.flows_bwd, clip.masks[..nflows].to_vec(), k, k + 1),
            FlowDirection::Backward => (&clip.flows_bwd, &clip.flows_fwd, clip.masks[1..].to_vec(), k + 1, k),
        };
        let window = FlowWindow::gather(flows, &masks, k, config.n, config.interval)?;
        let targets = LafcTargets::new(
            flows[k].clone(),
            &reverse[k],
            masks[k].clone(),
            clip.frames[from].clone(),
            clip.frames[to].clone(),
            config,
        )?;
        let input = window.to_tensor();
        Ok(Self { window, input, targets })
    }
}

/// Every window of a clip, both directions.
pub fn clip_samples<T: Scalar>(clip: &Clip<T>, config: &LafcConfig) -> Result<Vec<LafcSample<T>>> {
    let mut out = Vec::new();
    for dir in [FlowDirection::Forward, FlowDirection::Backward] {
        for k in 0..clip.len() - 1 {
            out.push(LafcSample::from_clip(clip, dir, k, config)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LafcLogRow {
    pub iteration: usize,
    pub lr: f64,
    pub terms: LossTerms<f64>,
    pub val_epe: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainedLafc<T> {
    pub model: LafcModel<T>,
    /// Training loss of every iteration, before its update.
    pub losses: Vec<LossTerms<f64>>,
    pub log: Vec<LafcLogRow>,
}

/// Mean masked-region EPE of the composited completion over samples with holes.
pub fn evaluate_epe<T: Scalar>(model: &LafcModel<T>, samples: &[LafcSample<T>]) -> Result<f64> {
    let g = Graph::inference();
    let p = model.store.bind(&g);
    let mut acc = 0.0;
    let mut n = 0;
    for s in samples.iter().filter(|s| !s.targets.mask.is_empty()) {
        let raw = model.net.forward(&p, &g.constant(s.input.clone()))?.value();
        let done = composite_flow(s.window.target(), &raw, &s.targets.mask)?;
        acc += epe(&done, &s.targets.gt, &s.targets.mask)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(acc / n as f64)
}

pub fn train_lafc<T: Scalar>(
    train: &[LafcSample<T>],
    val: &[LafcSample<T>],
    config: &LafcConfig,
    schedule: &TrainSchedule,
) -> Result<TrainedLafc<T>> {
    if train.is_empty() {
        return Err(Error::Config("no training samples".into()));
    }
    let mut model = LafcModel::new(config, schedule.seed)?;
    let sched = StepLr::new(schedule.lr, schedule.milestone.unwrap_or(lafc_milestone(schedule.iterations)));
    let mut adam = Adam::default();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ 0x1afc);
    let mut losses = Vec::with_capacity(schedule.iterations);
    let mut log = Vec::new();
    let log_every = schedule.log_every.max(1);
    for it in 0..schedule.iterations {
        let s = &train[rng.gen_range(0..train.len())];
        let g = Graph::new();
        let p = model.store.bind(&g);
        let pred = model.net.forward(&p, &g.constant(s.input.clone()))?;
        let logits = model.net.edge.forward(&p, &pred);
        let terms = lafc_loss(&pred, &logits, &s.targets, &config.weights);
        let values = terms.values();
        if !values.total.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                detail: format!("loss terms {values:?}"),
            });
        }
        if it % log_every == 0 {
            let val_epe = if val.is_empty() { None } else { Some(evaluate_epe(&model, val)?) };
            log::info!("lafc it {it}: loss {:.5} val epe {val_epe:?}", values.total);
            log.push(LafcLogRow {
                iteration: it,
                lr: sched.at(it),
                terms: values.clone(),
                val_epe,
            });
        }
        let grads = g.backward(&terms.total);
        adam.step(&mut model.store, &p, &grads, sched.at(it));
        losses.push(values);
    }
    let val_epe = if val.is_empty() { None } else { Some(evaluate_epe(&model, val)?) };
    if let Some(last) = losses.last() {
        log.push(LafcLogRow {
            iteration: schedule.iterations,
            lr: sched.at(schedule.iterations),
            terms: last.clone(),
            val_epe,
        });
    }
    Ok(TrainedLafc { model, losses, log })
}

pub fn write_lafc_log(rows: &[LafcLogRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "iteration,lr,total,hole,valid,smooth1,smooth2,warp,edge,val_epe")?;
    for r in rows {
        let t = &r.terms;
        writeln!(
            out,
            "{},{:e},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.lr,
            t.total,
            t.hole,
            t.valid,
            t.smooth1,
            t.smooth2,
            t.warp,
            t.edge,
            r.val_epe.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}
