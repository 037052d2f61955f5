//! Alternating generator/discriminator training of the transformer.

use std::io::Write;

use fgt_tensor::optim::{Adam, StepLr};
use fgt_tensor::{Graph, ParamStore, Scalar, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgt::{FgtConfig, FgtInputs, FgtModel, ForwardOptions};
use crate::flowcore::FlowField;
use crate::losses::{reconstruction_loss, tpatchgan_d_loss, tpatchgan_g_loss, Discriminator, DiscriminatorConfig, LAMBDA_ADV};
use crate::video::{frames_to_tensor, Clip};

/// `it · 300 / 500`: the reference schedule drops the rate at 300K of 500K.
pub fn fgt_milestone(iterations: usize) -> usize {
    iterations * 300 / 500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FgtSchedule {
    pub iterations: usize,
    pub lr: f64,
    pub milestone: Option<usize>,
    pub lambda_hole: f64,
    pub lambda_valid: f64,
    /// Zero disables the discriminator entirely.
    pub lambda_adv: f64,
    pub discriminator: DiscriminatorConfig,
    pub log_every: usize,
    pub seed: u64,
}

impl Default for FgtSchedule {
    fn default() -> Self {
        Self {
            iterations: 500,
            lr: 1e-4,
            milestone: None,
            lambda_hole: 1.0,
            lambda_valid: 1.0,
            lambda_adv: LAMBDA_ADV,
            discriminator: DiscriminatorConfig::small(),
            log_every: 50,
            seed: 0,
        }
    }
}

/// One training clip as network tensors plus its target.
#[derive(Clone, Debug)]
pub struct FgtSample<T> {
    pub inputs: FgtInputs<T>,
    pub target: Tensor<T>,
}

impl<T: Scalar> FgtSample<T> {
    /// Uses the clip's forward flows as the completed flows.
    pub fn from_clip(clip: &Clip<T>, config: &FgtConfig) -> Result<Self> {
        Self::with_flows(clip, &clip.flows_fwd, config)
    }

    pub fn with_flows(clip: &Clip<T>, flows_fwd: &[FlowField<T>], config: &FgtConfig) -> Result<Self> {
        Ok(Self {
            inputs: FgtInputs::new(&clip.frames, &clip.masks, flows_fwd, config.flow_scale)?,
            target: frames_to_tensor(&clip.frames),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FgtLogRow {
    pub iteration: usize,
    pub lr: f64,
    pub hole: f64,
    pub valid: f64,
    pub recon: f64,
    pub g_adv: f64,
    pub d_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedFgt<T> {
    pub model: FgtModel<T>,
    pub discriminator: Option<(Discriminator, ParamStore<T>)>,
    /// Every iteration, measured before its update.
    pub history: Vec<FgtLogRow>,
    pub log: Vec<FgtLogRow>,
}

/// `pred ⊙ M + target ⊙ (1 − M)`, differentiable in `pred`.
fn composite_var<T: Scalar>(pred: &Var<T>, target: &Var<T>, mask: &Var<T>) -> Var<T> {
    pred.mul(mask).add(&target.mul(&mask.one_minus()))
}

pub fn train_fgt<T: Scalar>(samples: &[FgtSample<T>], config: &FgtConfig, schedule: &FgtSchedule) -> Result<TrainedFgt<T>> {
    if samples.is_empty() {
        return Err(Error::Config("no training samples".into()));
    }
    let mut model = FgtModel::new(config, schedule.seed)?;
    let adversarial = schedule.lambda_adv > 0.0;
    let mut disc = if adversarial {
        let mut store = ParamStore::new(schedule.seed ^ 0xd15c);
        let d = Discriminator::new(&mut store, &schedule.discriminator)?;
        Some((d, store))
    } else {
        None
    };
    let sched = StepLr::new(schedule.lr, schedule.milestone.unwrap_or(fgt_milestone(schedule.iterations)));
    let (mut adam_g, mut adam_d) = (Adam::default(), Adam::default());
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ 0xf67);
    let mut history = Vec::with_capacity(schedule.iterations);
    let mut log = Vec::new();
    let log_every = schedule.log_every.max(1);
    for it in 0..schedule.iterations {
        let s = &samples[rng.gen_range(0..samples.len())];
        let lr = sched.at(it);

        // generator step, discriminator frozen
        let g = Graph::new();
        let p = model.store.bind(&g);
        let pred = model.net.forward_inputs(&p, &s.inputs, ForwardOptions::default())?;
        let target = g.constant(s.target.clone());
        let recon = reconstruction_loss(&pred, &target, &s.inputs.masks, schedule.lambda_hole, schedule.lambda_valid);
        let mut total = recon.total.clone();
        let mut g_adv = 0.0;
        let comp = composite_var(&pred, &target, &g.constant(s.inputs.masks.clone()));
        if let Some((d, dstore)) = &disc {
            let dp = dstore.bind_frozen(&g);
            let fake = d.forward(&dp, &comp)?.scores;
            let adv = tpatchgan_g_loss(&fake);
            g_adv = adv.value().item().as_f64();
            total = total.add(&adv.scale(T::of(schedule.lambda_adv)));
        }
        let rv = recon.values();
        if !(rv.total.is_finite() && g_adv.is_finite()) {
            return Err(Error::Diverged {
                iteration: it,
                detail: format!("reconstruction {rv:?}, adversarial {g_adv}"),
            });
        }
        let grads = g.backward(&total);
        adam_g.step(&mut model.store, &p, &grads, lr);

        // discriminator step on the same fake, detached
        let mut d_loss = 0.0;
        if let Some((d, dstore)) = &mut disc {
            let g = Graph::new();
            let dp = dstore.bind(&g);
            let real = d.forward(&dp, &g.constant(s.target.clone()))?;
            let fake = d.forward(&dp, &g.constant((*comp.value()).clone()))?;
            let loss = tpatchgan_d_loss(&real.scores, &fake.scores);
            d_loss = loss.value().item().as_f64();
            if !d_loss.is_finite() {
                return Err(Error::Diverged {
                    iteration: it,
                    detail: format!("discriminator loss {d_loss}"),
                });
            }
            let grads = g.backward(&loss);
            adam_d.step(dstore, &dp, &grads, lr);
            d.update_u(dstore, fake.u);
        }

        let row = FgtLogRow {
            iteration: it,
            lr,
            hole: rv.hole,
            valid: rv.valid,
            recon: rv.total,
            g_adv,
            d_loss,
        };
        if it % log_every == 0 || it + 1 == schedule.iterations {
            log::info!("fgt it {it}: recon {:.5} g_adv {g_adv:.4} d {d_loss:.4}", rv.total);
            log.push(row.clone());
        }
        history.push(row);
    }
    Ok(TrainedFgt {
        model,
        discriminator: disc,
        history,
        log,
    })
}

pub fn write_fgt_log(rows: &[FgtLogRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "iteration,lr,recon,hole,valid,g_adv,d_loss")?;
    for r in rows {
        writeln!(out, "{},{:e},{},{},{},{},{}", r.iteration, r.lr, r.recon, r.hole, r.valid, r.g_adv, r.d_loss)?;
    }
    Ok(())
}
