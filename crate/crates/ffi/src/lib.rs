//! C ABI over the optimizer core so other languages can drive the
//! prediction cycle and its baselines.
//!
//! Conventions: handles are opaque pointers created by `plp_optimizer_new_*`
//! and released with `plp_optimizer_free`; every fallible call returns a
//! [`PlpStatus`]; buffers are caller-owned `double` arrays whose length is
//! passed explicitly and never retained.

use plpkit::optim::{
    demon_beta, plp_predict, Adam, Demon, LrSchedule, Optimizer, ParamVector, PlpOptions,
    PlpWrapper, SgdMomentum,
};
use plpkit::Error;
use std::os::raw::c_char;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    /// A non-finite parameter or prediction was produced.
    Divergence = 4,
    /// The optimizer was stepped past its configured iteration budget.
    IterationBudget = 5,
}

fn status_of(e: &Error) -> PlpStatus {
    match e {
        Error::LengthMismatch { .. } | Error::ShapeMismatch { .. } => PlpStatus::LengthMismatch,
        Error::Divergence { .. } | Error::NonFinite(_) => PlpStatus::Divergence,
        Error::IterationBudget { .. } => PlpStatus::IterationBudget,
        _ => PlpStatus::InvalidArgument,
    }
}

enum Inner {
    Sgd(SgdMomentum),
    Demon(Demon),
    Adam(Adam),
    Plp(PlpWrapper<Box<dyn Optimizer>>),
}

impl Inner {
    fn as_optimizer(&mut self) -> &mut dyn Optimizer {
        match self {
            Inner::Sgd(o) => o,
            Inner::Demon(o) => o,
            Inner::Adam(o) => o,
            Inner::Plp(o) => o,
        }
    }

    fn into_boxed(self) -> Box<dyn Optimizer> {
        match self {
            Inner::Sgd(o) => Box::new(o),
            Inner::Demon(o) => Box::new(o),
            Inner::Adam(o) => Box::new(o),
            Inner::Plp(o) => Box::new(o),
        }
    }
}

/// Opaque optimizer handle.
pub struct PlpOptimizer {
    inner: Inner,
    n: usize,
}

fn new_handle(inner: Inner, n: usize) -> *mut PlpOptimizer {
    Box::into_raw(Box::new(PlpOptimizer { inner, n }))
}

/// Library version as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn plp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Linear prediction over three chronological parameter snapshots of length
/// `len`: writes `m23 + step * (m23 - m12)` into `out`.
///
/// # Safety
/// `s1`, `s2`, `s3`, and `out` must point to `len` readable (respectively
/// writable) doubles.
#[no_mangle]
pub unsafe extern "C" fn plp_predict_buffer(
    s1: *const f64,
    s2: *const f64,
    s3: *const f64,
    len: usize,
    step: f64,
    out: *mut f64,
) -> PlpStatus {
    if s1.is_null() || s2.is_null() || s3.is_null() || out.is_null() {
        return PlpStatus::NullPointer;
    }
    let s1 = std::slice::from_raw_parts(s1, len);
    let s2 = std::slice::from_raw_parts(s2, len);
    let s3 = std::slice::from_raw_parts(s3, len);
    match plp_predict(s1, s2, s3, step) {
        Ok(pred) => {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&pred);
            PlpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Decayed momentum coefficient at step `t` of `total`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn plp_demon_beta(
    t: u64,
    total: u64,
    beta_init: f64,
    out: *mut f64,
) -> PlpStatus {
    if out.is_null() {
        return PlpStatus::NullPointer;
    }
    match demon_beta(t, total, beta_init) {
        Ok(beta) => {
            *out = beta;
            PlpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Triangular cyclic learning rate at a 0-based iteration.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn plp_cyclic_lr(
    base_lr: f64,
    max_lr: f64,
    half_period: u64,
    iteration: u64,
    out: *mut f64,
) -> PlpStatus {
    if out.is_null() {
        return PlpStatus::NullPointer;
    }
    let schedule = LrSchedule::CyclicTriangular {
        base_lr,
        max_lr,
        half_period,
    };
    if let Err(e) = schedule.validate() {
        return status_of(&e);
    }
    *out = schedule.lr_at(iteration);
    PlpStatus::Ok
}

/// SGD-with-momentum optimizer over `n` parameters.
#[no_mangle]
pub extern "C" fn plp_optimizer_new_sgd(
    n: usize,
    momentum: f64,
    weight_decay: f64,
) -> *mut PlpOptimizer {
    new_handle(Inner::Sgd(SgdMomentum::new(n, momentum, weight_decay)), n)
}

/// DEMON optimizer; returns NULL when the arguments are invalid
/// (`total_iterations` of zero or `beta_init` outside (0, 1)).
#[no_mangle]
pub extern "C" fn plp_optimizer_new_demon(
    n: usize,
    beta_init: f64,
    weight_decay: f64,
    total_iterations: u64,
) -> *mut PlpOptimizer {
    match Demon::new(n, beta_init, weight_decay, total_iterations) {
        Ok(demon) => new_handle(Inner::Demon(demon), n),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Adam optimizer with bias correction.
#[no_mangle]
pub extern "C" fn plp_optimizer_new_adam(
    n: usize,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
) -> *mut PlpOptimizer {
    new_handle(
        Inner::Adam(Adam::new(n, beta1, beta2, eps, weight_decay)),
        n,
    )
}

/// Wraps an existing optimizer in the predict-every-3-steps cycle, taking
/// ownership of `base` (do not free it afterwards). Returns NULL and leaves
/// `base` alive when `step` is negative.
///
/// # Safety
/// `base` must be a handle from a `plp_optimizer_new_*` call.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_wrap_plp(
    base: *mut PlpOptimizer,
    step: f64,
    predict_identity: bool,
    reset_velocity_on_predict: bool,
) -> *mut PlpOptimizer {
    if base.is_null() || step.is_nan() || step < 0.0 {
        return std::ptr::null_mut();
    }
    let handle = Box::from_raw(base);
    let n = handle.n;
    let options = PlpOptions {
        step,
        predict_identity,
        trace_predictions: false,
        reset_velocity_on_predict,
    };
    match PlpWrapper::new(handle.inner.into_boxed(), options) {
        Ok(wrapper) => new_handle(Inner::Plp(wrapper), n),
        Err(_) => std::ptr::null_mut(),
    }
}

/// One in-place update of `params` from `grads` at learning rate `lr`.
///
/// # Safety
/// `opt` must be a live handle; `params` and `grads` must point to `len`
/// doubles matching the handle's parameter count.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_step(
    opt: *mut PlpOptimizer,
    params: *mut f64,
    grads: *const f64,
    len: usize,
    lr: f64,
) -> PlpStatus {
    if opt.is_null() || params.is_null() || grads.is_null() {
        return PlpStatus::NullPointer;
    }
    let handle = &mut *opt;
    if len != handle.n {
        return PlpStatus::LengthMismatch;
    }
    let params_slice = std::slice::from_raw_parts_mut(params, len);
    let grads_slice = std::slice::from_raw_parts(grads, len);
    // The optimizer works on an owned vector; copy in and out so the C
    // buffer keeps its previous contents when a step is rejected.
    let mut vec = ParamVector::new(params_slice.to_vec());
    match handle.inner.as_optimizer().step(&mut vec, grads_slice, lr) {
        Ok(()) => {
            params_slice.copy_from_slice(vec.as_slice());
            PlpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Base steps taken so far (predictions are not extra steps).
///
/// # Safety
/// `opt` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_iterations(opt: *const PlpOptimizer) -> u64 {
    if opt.is_null() {
        return 0;
    }
    match &(*opt).inner {
        Inner::Sgd(o) => o.iterations(),
        Inner::Demon(o) => o.iterations(),
        Inner::Adam(o) => o.iterations(),
        Inner::Plp(o) => o.iterations(),
    }
}

/// Number of predictions a wrapped optimizer has applied; 0 for plain
/// optimizers.
///
/// # Safety
/// `opt` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_predictions_fired(opt: *const PlpOptimizer) -> u64 {
    if opt.is_null() {
        return 0;
    }
    match &(*opt).inner {
        Inner::Plp(o) => o.predictions_fired(),
        _ => 0,
    }
}

/// Peak auxiliary f64 storage held by the prediction wrapper (at most four
/// parameter-sized arrays); 0 for plain optimizers.
///
/// # Safety
/// `opt` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_peak_aux_f64(opt: *const PlpOptimizer) -> usize {
    if opt.is_null() {
        return 0;
    }
    match &(*opt).inner {
        Inner::Plp(o) => o.peak_aux_f64(),
        _ => 0,
    }
}

/// Releases a handle. NULL is a no-op.
///
/// # Safety
/// `opt` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn plp_optimizer_free(opt: *mut PlpOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}
