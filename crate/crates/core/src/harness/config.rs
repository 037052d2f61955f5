//! Run configuration: a sectioned TOML file plus `section.key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::masks::MaskSpec;
use super::pipeline::PipelineConfig;
use super::train_fgt::FgtSchedule;
use crate::error::{Error, Result};
use crate::fgt::FgtConfig;
use crate::lafc::{LafcConfig, TrainSchedule};

/// Synthetic dataset generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub clips: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub sprites: usize,
    pub max_speed: f64,
    pub mask: MaskSpec,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            clips: 8,
            frames: 8,
            width: 64,
            height: 64,
            sprites: 2,
            max_speed: 2.0,
            mask: MaskSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub numbers: Vec<usize>,
    pub intervals: Vec<usize>,
    /// Interval used on the number axis.
    pub fixed_interval: usize,
    /// Number used on the interval axis.
    pub fixed_number: usize,
    pub seeds: Vec<u64>,
    /// Clips held out for evaluation, taken from the end of the dataset.
    pub val_clips: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            numbers: vec![1, 3, 5, 7],
            intervals: vec![1, 3, 5, 7],
            fixed_interval: 3,
            fixed_number: 3,
            seeds: vec![0, 1, 2],
            val_clips: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub lafc: LafcConfig,
    pub lafc_train: TrainSchedule,
    pub fgt: FgtConfig,
    pub fgt_train: FgtSchedule,
    pub pipeline: PipelineConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Desk-scale defaults: narrow networks and short schedules.
    pub fn desk() -> Self {
        Self {
            lafc: LafcConfig {
                base_channels: 16,
                ..LafcConfig::default()
            },
            lafc_train: TrainSchedule {
                iterations: 500,
                ..TrainSchedule::default()
            },
            fgt: FgtConfig::small(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = if text.trim().is_empty() {
            toml::Value::try_from(Self::desk()).map_err(|e| Error::Config(e.to_string()))?
        } else {
            let base = toml::Value::try_from(Self::desk()).map_err(|e| Error::Config(e.to_string()))?;
            let user: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| Error::Config(e.to_string()))?;
            merge(base, user)
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Recursively overlay `top` on `base`.
fn merge(base: toml::Value, top: toml::Value) -> toml::Value {
    match (base, top) {
        (toml::Value::Table(mut b), toml::Value::Table(t)) => {
            for (k, v) in t {
                let merged = match b.remove(&k) {
                    Some(old) => merge(old, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            toml::Value::Table(b)
        }
        (_, top) => top,
    }
}

/// Parse the right-hand side of an override as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `section.key=value`, e.g. `fgt.channels=64` or `data.mask.kind="object-like"`.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut node = root;
    for (i, k) in keys.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a section", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            table.insert(k.to_string(), parse_value(raw.trim()));
            return Ok(());
        }
        node = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config(format!("empty override key in `{spec}`")))
}
