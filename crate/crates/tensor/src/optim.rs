use crate::{Bound, Gradients, ParamStore, Scalar, Tensor};

/// Piecewise-constant learning rate: `base` until `milestone`, then `base * gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLr {
    pub base: f64,
    pub milestone: usize,
    pub gamma: f64,
}

impl StepLr {
    pub fn new(base: f64, milestone: usize) -> Self {
        Self {
            base,
            milestone,
            gamma: 0.1,
        }
    }

    pub fn at(&self, iteration: usize) -> f64 {
        if iteration < self.milestone {
            self.base
        } else {
            self.base * self.gamma
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Option<Tensor<T>>>,
    v: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Default for Adam<T> {
    fn default() -> Self {
        Self::new(0.9, 0.999)
    }
}

impl<T: Scalar> Adam<T> {
    pub fn new(beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every trainable parameter that received a gradient.
    pub fn step(&mut self, store: &mut ParamStore<T>, bound: &Bound<T>, grads: &Gradients<T>, lr: f64) {
        let n = store.len();
        self.m.resize(n, None);
        self.v.resize(n, None);
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let step_size = T::of(lr * bc2.sqrt() / bc1);
        let eps = T::of(self.eps * bc2.sqrt());
        let ids: Vec<_> = (0..n).collect();
        for i in ids {
            if !store.params()[i].trainable {
                continue;
            }
            let Some(g) = grads.wrt(&bound.vars()[i]) else { continue };
            let m = self.m[i].get_or_insert_with(|| Tensor::zeros(g.shape()));
            let v = self.v[i].get_or_insert_with(|| Tensor::zeros(g.shape()));
            for ((mi, vi), &gi) in m.data_mut().iter_mut().zip(v.data_mut().iter_mut()).zip(g.data()) {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
            }
            let id = crate::params::ParamId::from_index(i);
            let p = store.get_mut(id);
            for ((pi, &mi), &vi) in p.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                *pi = *pi - step_size * mi / (vi.sqrt() + eps);
            }
        }
    }
}
