//! Adam with bias correction. Weight decay enters as a coupled L2 gradient
//! term, matching the other optimizers here (not the decoupled variant).

use super::{check_finite, check_lengths, Optimizer, ParamVector};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    t: u64,
    // Running beta^t products, advanced once per step.
    beta1_pow: f64,
    beta2_pow: f64,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            beta1,
            beta2,
            eps,
            weight_decay,
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        check_lengths("adam_step", params, grads, self.m.len())?;
        self.t += 1;
        self.beta1_pow *= self.beta1;
        self.beta2_pow *= self.beta2;
        let bc1 = 1.0 - self.beta1_pow;
        let bc2 = 1.0 - self.beta2_pow;
        let p = params.as_mut_slice();
        for i in 0..p.len() {
            let g = grads[i] + self.weight_decay * p[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        check_finite("adam_step", params, self.t)
    }

    fn name(&self) -> &'static str {
        "adam"
    }

    fn iterations(&self) -> u64 {
        self.t
    }

    fn reset_velocity(&mut self) {
        self.m.iter_mut().for_each(|v| *v = 0.0);
        self.v.iter_mut().for_each(|v| *v = 0.0);
    }
}
