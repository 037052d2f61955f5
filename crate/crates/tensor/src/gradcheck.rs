//! Central finite-difference gradient checks in double precision.

use crate::{Graph, Tensor, Var};

#[derive(Clone, Debug)]
pub struct GradReport {
    /// Per input: `max|analytic - numeric| / max(max|numeric|, max|analytic|)`.
    pub rel_errors: Vec<f64>,
    pub abs_errors: Vec<f64>,
    /// Per input: `max(max|numeric|, max|analytic|)`.
    pub scales: Vec<f64>,
}

impl GradReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rel_errors.iter().copied().fold(0.0, f64::max)
    }

    /// Largest absolute error over all inputs relative to the largest gradient
    /// entry over all inputs.
    pub fn joint_rel_error(&self) -> f64 {
        let abs = self.abs_errors.iter().copied().fold(0.0, f64::max);
        let scale = self.scales.iter().copied().fold(0.0, f64::max);
        if scale > 1e-12 {
            abs / scale
        } else {
            abs
        }
    }
}

fn eval(f: &dyn Fn(&Graph<f64>, &[Var<f64>]) -> Var<f64>, inputs: &[Tensor<f64>]) -> f64 {
    let g = Graph::inference();
    let vars: Vec<_> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    f(&g, &vars).value().item()
}

/// Compare the tape gradient of a scalar function with central differences of step `h`.
pub fn check_gradients(
    inputs: &[Tensor<f64>],
    h: f64,
    f: impl Fn(&Graph<f64>, &[Var<f64>]) -> Var<f64>,
) -> GradReport {
    let g = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let loss = f(&g, &vars);
    let grads = g.backward(&loss);
    let mut rel = Vec::new();
    let mut abs = Vec::new();
    let mut scales = Vec::new();
    for (i, t) in inputs.iter().enumerate() {
        let analytic = grads
            .wrt(&vars[i])
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(t.shape()));
        let mut work: Vec<Tensor<f64>> = inputs.to_vec();
        let mut max_diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..t.numel() {
            let x0 = t.data()[j];
            work[i].data_mut()[j] = x0 + h;
            let fp = eval(&f, &work);
            work[i].data_mut()[j] = x0 - h;
            let fm = eval(&f, &work);
            work[i].data_mut()[j] = x0;
            let num = (fp - fm) / (2.0 * h);
            let a = analytic.data()[j];
            max_diff = max_diff.max((a - num).abs());
            scale = scale.max(num.abs()).max(a.abs());
        }
        abs.push(max_diff);
        scales.push(scale);
        rel.push(if scale > 1e-12 { max_diff / scale } else { max_diff });
    }
    GradReport {
        rel_errors: rel,
        abs_errors: abs,
        scales,
    }
}
