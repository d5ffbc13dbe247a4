//! plpkit: a self-contained numerical-optimization toolkit built around a
//! parameter linear-prediction optimizer cycle, its gradient-descent
//! baselines (SGD with momentum, DEMON, Adam), and a desk-scale
//! training/benchmark harness that emits comparable reports.
//!
//! - [`numkit`]: dense f64 array kernels and the seeded RNG
//! - [`model`]: small differentiable classifiers with exact gradients
//! - [`optim`]: the optimizers, the prediction wrapper, and LR schedules
//! - [`data`]: synthetic datasets, the CIFAR binary loader, splits, batching
//! - [`metrics`]: loss/accuracy/top-k tracking and report-shaped selections
//! - [`bench`]: run configs, seed repetition, sweeps, and report emission

pub mod bench;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numkit;
pub mod optim;

pub use error::{Error, Result};
