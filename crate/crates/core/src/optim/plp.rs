//! Parameter linear prediction: snapshot three consecutive optimizer
//! results, extrapolate the midpoint trend, and overwrite the live
//! parameters with the prediction.
//!
//! One cycle is three base-optimizer steps. After the third, the two
//! snapshot-pair midpoints give a slope; the prediction starts from the
//! later midpoint and advances `step` midpoint intervals along that slope.
//! The predicted point becomes the new live state and starts a fresh cycle;
//! it is never recorded as a snapshot itself.

use super::{Optimizer, ParamVector};
use crate::error::{Error, Result};

/// Linear extrapolation from three chronological snapshots:
/// `m12 = (s1 + s2) / 2`, `m23 = (s2 + s3) / 2`,
/// `slope = m23 - m12`, result `m23 + step * slope`.
///
/// Elementwise, so it commutes with any coordinate permutation.
pub fn plp_predict(s1: &[f64], s2: &[f64], s3: &[f64], step: f64) -> Result<Vec<f64>> {
    if s1.len() != s2.len() || s2.len() != s3.len() {
        return Err(Error::LengthMismatch {
            op: "plp_predict",
            left: s1.len(),
            right: if s1.len() != s2.len() {
                s2.len()
            } else {
                s3.len()
            },
        });
    }
    if step.is_nan() || step < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "plp_predict: step={step} must be >= 0"
        )));
    }
    let mut out = Vec::with_capacity(s1.len());
    for i in 0..s1.len() {
        let m12 = (s1[i] + s2[i]) / 2.0;
        let m23 = (s2[i] + s3[i]) / 2.0;
        let slope = m23 - m12;
        out.push(m23 + step * slope);
    }
    Ok(out)
}

/// Chronological three-slot snapshot buffer plus the bookkeeping that drives
/// the predict-every-three-iterations cycle.
///
/// Snapshots are copies; later base steps never mutate stored slots. The
/// buffer plus one transient prediction buffer bound the wrapper's auxiliary
/// f64 storage at 4x the parameter count.
#[derive(Debug, Clone)]
pub struct PlpCycleState {
    slots: Vec<Vec<f64>>,
    step: f64,
    peak_aux_f64: usize,
}

pub const PLP_CYCLE_LEN: usize = 3;

impl PlpCycleState {
    pub fn new(step: f64) -> Result<Self> {
        if step.is_nan() || step < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "PlpCycleState: step={step} must be >= 0"
            )));
        }
        Ok(Self {
            slots: Vec::with_capacity(PLP_CYCLE_LEN),
            step,
            peak_aux_f64: 0,
        })
    }

    pub fn filled_count(&self) -> usize {
        self.slots.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Appends a copy of `params` as the next chronological snapshot.
    pub fn record(&mut self, params: &[f64]) -> Result<()> {
        if self.slots.len() >= PLP_CYCLE_LEN {
            return Err(Error::Internal(
                "plp_record called on a full snapshot buffer".into(),
            ));
        }
        self.slots.push(params.to_vec());
        self.note_aux(0);
        Ok(())
    }

    pub fn slot(&self, i: usize) -> Option<&[f64]> {
        self.slots.get(i).map(Vec::as_slice)
    }

    pub fn clear(&mut self) {
        self.slots.clear();
    }

    /// Runs the prediction over the stored cycle. Only valid on a full
    /// buffer; the wrapper guarantees that.
    fn predict(&mut self, identity: bool) -> Result<Vec<f64>> {
        if self.slots.len() != PLP_CYCLE_LEN {
            return Err(Error::Internal(format!(
                "plp_predict requested with {} of {PLP_CYCLE_LEN} snapshots",
                self.slots.len()
            )));
        }
        let n = self.slots[0].len();
        self.note_aux(n);
        if identity {
            // Debug mode: the "prediction" is the latest snapshot, which
            // makes the whole wrapper a no-op around the base optimizer.
            return Ok(self.slots[2].clone());
        }
        plp_predict(&self.slots[0], &self.slots[1], &self.slots[2], self.step)
    }

    /// Highest number of auxiliary f64 values held at once: live snapshots
    /// plus any transient prediction buffer.
    pub fn peak_aux_f64(&self) -> usize {
        self.peak_aux_f64
    }

    fn note_aux(&mut self, transient: usize) {
        let live: usize = self.slots.iter().map(Vec::len).sum();
        self.peak_aux_f64 = self.peak_aux_f64.max(live + transient);
    }
}

/// Behavior switches for [`PlpWrapper`].
#[derive(Debug, Clone, Copy)]
pub struct PlpOptions {
    /// Midpoint intervals to extrapolate.
    pub step: f64,
    /// Replace the prediction with the latest snapshot (debug no-op mode).
    pub predict_identity: bool,
    /// Keep the base-iteration indices at which predictions fired.
    pub trace_predictions: bool,
    /// Zero the base optimizer's momentum state after each overwrite.
    pub reset_velocity_on_predict: bool,
}

impl Default for PlpOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            predict_identity: false,
            trace_predictions: false,
            reset_velocity_on_predict: false,
        }
    }
}

/// Wraps a base optimizer with the prediction cycle. Each call runs one base
/// step and records the result; every third call the stored cycle is
/// extrapolated and the live parameters are overwritten with the prediction.
#[derive(Debug, Clone)]
pub struct PlpWrapper<O> {
    base: O,
    cycle: PlpCycleState,
    options: PlpOptions,
    iteration: u64,
    predictions_fired: u64,
    prediction_trace: Vec<u64>,
}

impl<O: Optimizer> PlpWrapper<O> {
    pub fn new(base: O, options: PlpOptions) -> Result<Self> {
        Ok(Self {
            base,
            cycle: PlpCycleState::new(options.step)?,
            options,
            iteration: 0,
            predictions_fired: 0,
            prediction_trace: Vec::new(),
        })
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn options(&self) -> &PlpOptions {
        &self.options
    }

    pub fn predictions_fired(&self) -> u64 {
        self.predictions_fired
    }

    /// 1-based base-step indices where predictions fired. Filled only when
    /// `trace_predictions` is set.
    pub fn prediction_trace(&self) -> &[u64] {
        &self.prediction_trace
    }

    pub fn peak_aux_f64(&self) -> usize {
        self.cycle.peak_aux_f64()
    }
}

impl<O: Optimizer> Optimizer for PlpWrapper<O> {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        self.base.step(params, grads, lr)?;
        self.iteration += 1;
        self.cycle.record(params.as_slice())?;
        if self.cycle.filled_count() == PLP_CYCLE_LEN {
            let predicted = self.cycle.predict(self.options.predict_identity)?;
            if let Some(i) = predicted.iter().position(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    iteration: self.iteration,
                    what: format!("plp prediction produced non-finite parameter {i}"),
                });
            }
            params.replace(predicted)?;
            self.cycle.clear();
            if self.options.reset_velocity_on_predict {
                self.base.reset_velocity();
            }
            self.predictions_fired += 1;
            if self.options.trace_predictions {
                self.prediction_trace.push(self.iteration);
            }
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        "plp"
    }

    fn iterations(&self) -> u64 {
        self.iteration
    }

    fn reset_velocity(&mut self) {
        self.base.reset_velocity();
    }
}
