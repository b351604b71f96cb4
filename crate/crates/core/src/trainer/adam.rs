use crate::error::{Error, Result};
use crate::grad::Tensor;

pub const ADAM_EPS: f64 = 1e-8;

/// Bias-corrected Adam update of one tensor, in place. `t` counts from 1.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
) {
    debug_assert!(t >= 1);
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Adam state for a fixed, ordered list of named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Number of updates applied so far.
    pub t: u64,
    pub names: Vec<String>,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &[(String, Tensor)], beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps: ADAM_EPS,
            t: 0,
            names: params.iter().map(|(n, _)| n.clone()).collect(),
            m: params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect(),
        }
    }

    /// Applies one update from the accumulated gradients and clears them.
    /// Missing gradients count as zero. A non-finite gradient aborts before
    /// any tensor is modified.
    pub fn step(&mut self, params: &[(String, Tensor)], lr: f64, step: u64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::invalid("adam", "parameter list changed since construction"));
        }
        let grads: Vec<Option<Vec<f64>>> = params.iter().map(|(_, p)| p.grad()).collect();
        for ((name, _), g) in params.iter().zip(&grads) {
            if g.as_ref().is_some_and(|g| g.iter().any(|v| !v.is_finite())) {
                return Err(Error::NonFinite {
                    step,
                    what: format!("gradient of {name}"),
                });
            }
        }
        self.t += 1;
        for (i, ((_, p), g)) in params.iter().zip(grads).enumerate() {
            let g = g.unwrap_or_else(|| vec![0.0; p.numel()]);
            let (beta1, beta2, eps, t) = (self.beta1, self.beta2, self.eps, self.t);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            p.update_data(|d| adam_step(d, &g, m, v, lr, beta1, beta2, eps, t));
            p.zero_grad();
        }
        Ok(())
    }
}
