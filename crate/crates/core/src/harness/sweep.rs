//! EPE of the flow completion network against window length and spacing.

use std::io::Write;

use fgt_tensor::Scalar;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lafc::{clip_samples, evaluate_epe, train_lafc, LafcConfig, LafcSample, TrainSchedule};
use crate::video::Clip;

/// One setting on either axis: `number` flows (odd) spaced `interval` frames apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowSetting {
    pub number: usize,
    pub interval: usize,
}

/// `numbers` at a fixed interval.
pub fn number_axis(numbers: &[usize], interval: usize) -> Vec<WindowSetting> {
    numbers.iter().map(|&number| WindowSetting { number, interval }).collect()
}

/// `intervals` at a fixed number of flows.
pub fn interval_axis(intervals: &[usize], number: usize) -> Vec<WindowSetting> {
    intervals.iter().map(|&interval| WindowSetting { number, interval }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub number: usize,
    pub interval: usize,
    pub mean_epe: f64,
    /// Validation EPE per seed, in seed order.
    pub epe: Vec<f64>,
}

fn samples<T: Scalar>(clips: &[Clip<T>], config: &LafcConfig) -> Result<Vec<LafcSample<T>>> {
    let mut out = Vec::new();
    for c in clips {
        out.extend(clip_samples(c, config)?);
    }
    Ok(out)
}

/// Train one model per setting and seed on `train`, score masked EPE on `val`.
pub fn sweep_flow_window<T: Scalar>(
    train: &[Clip<T>],
    val: &[Clip<T>],
    settings: &[WindowSetting],
    base: &LafcConfig,
    schedule: &TrainSchedule,
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(settings.len());
    for s in settings {
        if s.number % 2 == 0 || s.interval == 0 {
            return Err(Error::Config(format!(
                "flow number must be odd and interval >= 1, got {} and {}",
                s.number, s.interval
            )));
        }
        let config = LafcConfig {
            n: s.number / 2,
            interval: s.interval,
            ..base.clone()
        };
        let (tr, va) = (samples(train, &config)?, samples(val, &config)?);
        let mut epe = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let trained = train_lafc(&tr, &[], &config, &TrainSchedule { seed, ..schedule.clone() })?;
            epe.push(evaluate_epe(&trained.model, &va)?);
            log::info!("sweep number {} interval {} seed {seed}: epe {:.4}", s.number, s.interval, epe[epe.len() - 1]);
        }
        rows.push(SweepRow {
            number: s.number,
            interval: s.interval,
            mean_epe: epe.iter().sum::<f64>() / epe.len() as f64,
            epe,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "number,interval,mean_epe,epe_per_seed")?;
    for r in rows {
        let per: Vec<String> = r.epe.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{},{},{}", r.number, r.interval, r.mean_epe, per.join(";"))?;
    }
    Ok(())
}
