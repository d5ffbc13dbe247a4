//! Optimizer core: SGD with momentum, DEMON momentum decay, Adam, the
//! cyclic learning-rate schedule, and the parameter linear-prediction (PLP)
//! wrapper that extrapolates the live parameters every third base step.
//!
//! All updates are in-place, deterministic functions of
//! (params, grads, state). Weight decay is realized as a coupled L2 term
//! added to the gradient, the SGD-family convention.

mod adam;
mod demon;
mod plp;
mod schedule;
mod sgd;

pub use adam::Adam;
pub use demon::{demon_beta, Demon};
pub use plp::{plp_predict, PlpCycleState, PlpOptions, PlpWrapper};
pub use schedule::LrSchedule;
pub use sgd::SgdMomentum;

use crate::error::{Error, Result};

/// Flat vector of all trainable parameters of one model.
///
/// Length is fixed for the life of a run; any non-finite entry is a
/// divergence error, never a carried state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Swaps in a new value buffer of the same length, returning the old one.
    pub fn replace(&mut self, values: Vec<f64>) -> Result<Vec<f64>> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                op: "ParamVector::replace",
                left: self.values.len(),
                right: values.len(),
            });
        }
        Ok(std::mem::replace(&mut self.values, values))
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// One in-place parameter update per call. `lr` comes from the schedule.
pub trait Optimizer {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()>;

    fn name(&self) -> &'static str;

    /// Base steps taken so far.
    fn iterations(&self) -> u64;

    /// Clears momentum-style state. Called by wrappers that overwrite the
    /// live parameters, when configured to do so.
    fn reset_velocity(&mut self) {}
}

impl<O: Optimizer + ?Sized> Optimizer for Box<O> {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        (**self).step(params, grads, lr)
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn iterations(&self) -> u64 {
        (**self).iterations()
    }

    fn reset_velocity(&mut self) {
        (**self).reset_velocity()
    }
}

fn check_lengths(
    op: &'static str,
    params: &ParamVector,
    grads: &[f64],
    state: usize,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::LengthMismatch {
            op,
            left: params.len(),
            right: grads.len(),
        });
    }
    if params.len() != state {
        return Err(Error::LengthMismatch {
            op,
            left: params.len(),
            right: state,
        });
    }
    Ok(())
}

fn check_finite(op: &'static str, params: &ParamVector, iteration: u64) -> Result<()> {
    match params.first_non_finite() {
        None => Ok(()),
        Some(i) => Err(Error::Divergence {
            iteration,
            what: format!("{op}: parameter {i} is non-finite"),
        }),
    }
}

/// Shared momentum recurrence:
/// `g~ = g + wd * p`, `p' = p - lr * g~ + beta * v`, `v' = beta * v - lr * g~`.
///
/// Both the constant-momentum and decayed-momentum optimizers route through
/// this single kernel, so equal `beta` gives bit-identical results.
fn momentum_update(
    params: &mut [f64],
    velocity: &mut [f64],
    grads: &[f64],
    lr: f64,
    beta: f64,
    weight_decay: f64,
) {
    for i in 0..params.len() {
        let g = grads[i] + weight_decay * params[i];
        let v_old = velocity[i];
        params[i] = params[i] - lr * g + beta * v_old;
        velocity[i] = beta * v_old - lr * g;
    }
}
