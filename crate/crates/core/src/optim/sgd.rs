//! SGD with momentum: the constant-momentum special case of the decayed
//! momentum recurrence.

use super::{check_finite, check_lengths, momentum_update, Optimizer, ParamVector};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SgdMomentum {
    velocity: Vec<f64>,
    momentum: f64,
    weight_decay: f64,
    t: u64,
}

impl SgdMomentum {
    pub fn new(n: usize, momentum: f64, weight_decay: f64) -> Self {
        Self {
            velocity: vec![0.0; n],
            momentum,
            weight_decay,
            t: 0,
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }
}

impl Optimizer for SgdMomentum {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        check_lengths("sgd_momentum_step", params, grads, self.velocity.len())?;
        momentum_update(
            params.as_mut_slice(),
            &mut self.velocity,
            grads,
            lr,
            self.momentum,
            self.weight_decay,
        );
        self.t += 1;
        check_finite("sgd_momentum_step", params, self.t)
    }

    fn name(&self) -> &'static str {
        "sgd"
    }

    fn iterations(&self) -> u64 {
        self.t
    }

    fn reset_velocity(&mut self) {
        self.velocity.iter_mut().for_each(|v| *v = 0.0);
    }
}
