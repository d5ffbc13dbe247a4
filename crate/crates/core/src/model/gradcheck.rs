//! Finite-difference gradient verification: the validation gate run before
//! any optimizer experiment is trusted.

use super::Model;
use crate::error::{Error, Result};
use crate::numkit::DenseArray;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the model's analytic gradient against central finite
/// differences `(f(p + h) - f(p - h)) / (2h)` over every parameter.
///
/// Relative error uses `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps
/// dead-unit parameters (both gradients ~0) from dividing by noise.
/// Report-only: the result says pass/fail, it never errors on mismatch.
pub fn grad_check<M: Model>(
    model: &mut M,
    inputs: &DenseArray,
    labels: &[usize],
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "grad_check: h={h} must be > 0"
        )));
    }
    let (_, analytic) = model.loss_and_grad(inputs, labels)?;
    let baseline = model.flatten();
    let mut flat = baseline.clone();

    let mut max_rel = 0.0;
    let mut worst = 0;
    for i in 0..flat.len() {
        let original = flat[i];
        flat[i] = original + h;
        model.load_flat(&flat)?;
        let (loss_plus, _) = model.loss_and_grad(inputs, labels)?;
        flat[i] = original - h;
        model.load_flat(&flat)?;
        let (loss_minus, _) = model.loss_and_grad(inputs, labels)?;
        flat[i] = original;

        let numeric = (loss_plus - loss_minus) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > max_rel {
            max_rel = rel;
            worst = i;
        }
    }
    model.load_flat(&baseline)?;
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        worst_param: worst,
        tolerance,
        pass: max_rel <= tolerance,
    })
}
