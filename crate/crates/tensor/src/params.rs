use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Graph, Scalar, Tensor, Var};

/// Index of a parameter inside its [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        Self(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// U(-bound, bound).
    Uniform(f64),
    Normal(f64),
    Const(f64),
}

impl Init {
    /// PyTorch-style default for layers with the given fan-in.
    pub fn fan_in(fan_in: usize) -> Self {
        Init::Uniform(1.0 / (fan_in.max(1) as f64).sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    /// Buffers (e.g. power-iteration vectors) are stored but never optimized.
    pub trainable: bool,
}

/// Named parameters of one model.
///
/// Initial values depend only on the store seed and the parameter name, so two
/// model variants sharing a sub-module start from identical weights.
#[derive(Clone, Debug)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    by_name: HashMap<String, usize>,
    seed: u64,
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl<T: Scalar> ParamStore<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            params: Vec::new(),
            by_name: HashMap::new(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng_for(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ name_hash(name).rotate_left(17))
    }

    fn insert(&mut self, name: &str, value: Tensor<T>, trainable: bool) -> ParamId {
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter name {name}"
        );
        self.params.push(Param {
            name: name.to_string(),
            value,
            trainable,
        });
        let id = self.params.len() - 1;
        self.by_name.insert(name.to_string(), id);
        ParamId(id)
    }

    pub fn add(&mut self, name: &str, shape: &[usize], init: Init) -> ParamId {
        let mut rng = self.rng_for(name);
        let value = match init {
            Init::Const(c) => Tensor::full(shape, T::of(c)),
            Init::Uniform(b) => Tensor::from_fn(shape, |_| T::of(rng.gen_range(-b..=b))),
            Init::Normal(std) => Tensor::from_fn(shape, |_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                T::of(std * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
            }),
        };
        self.insert(name, value, true)
    }

    pub fn add_buffer(&mut self, name: &str, value: Tensor<T>) -> ParamId {
        self.insert(name, value, false)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].value
    }

    pub fn set(&mut self, id: ParamId, value: Tensor<T>) {
        assert_eq!(
            value.shape(),
            self.params[id.0].value.shape(),
            "set() shape mismatch for {}",
            self.params[id.0].name
        );
        self.params[id.0].value = value;
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    /// Overwrite values by name from another store of identical layout.
    pub fn copy_from(&mut self, other: &ParamStore<T>) -> Result<(), String> {
        for p in other.params() {
            let id = self
                .id(&p.name)
                .ok_or_else(|| format!("unknown parameter {}", p.name))?;
            if self.get(id).shape() != p.value.shape() {
                return Err(format!(
                    "shape mismatch for {}: {:?} vs {:?}",
                    p.name,
                    self.get(id).shape(),
                    p.value.shape()
                ));
            }
            self.params[id.0].value = p.value.clone();
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    trainable: p.trainable,
                })
                .collect(),
            by_name: self.by_name.clone(),
            seed: self.seed,
        }
    }

    /// Put every parameter on `graph`.
    pub fn bind(&self, graph: &Graph<T>) -> Bound<T> {
        let vars = self
            .params
            .iter()
            .map(|p| {
                if p.trainable {
                    graph.leaf(p.value.clone())
                } else {
                    graph.constant(p.value.clone())
                }
            })
            .collect();
        Bound {
            graph: graph.clone(),
            vars,
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    /// Put every parameter on `graph` as a constant (no gradients).
    pub fn bind_frozen(&self, graph: &Graph<T>) -> Bound<T> {
        Bound {
            graph: graph.clone(),
            vars: self.params.iter().map(|p| graph.constant(p.value.clone())).collect(),
        }
    }
}

/// A [`ParamStore`] placed on one graph.
pub struct Bound<T> {
    graph: Graph<T>,
    vars: Vec<Var<T>>,
}

impl<T: Scalar> Bound<T> {
    /// Bind arbitrary vars in store order, e.g. to differentiate through parameters
    /// in a gradient check.
    pub fn from_vars(graph: &Graph<T>, vars: Vec<Var<T>>) -> Self {
        Self {
            graph: graph.clone(),
            vars,
        }
    }

    pub fn get(&self, id: ParamId) -> &Var<T> {
        &self.vars[id.0]
    }

    pub fn graph(&self) -> &Graph<T> {
        &self.graph
    }

    pub fn vars(&self) -> &[Var<T>] {
        &self.vars
    }

    pub fn constant(&self, t: Tensor<T>) -> Var<T> {
        self.graph.constant(t)
    }
}
