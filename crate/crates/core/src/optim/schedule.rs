//! Per-iteration learning-rate schedules.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Learning rate as a function of the 0-based iteration index.
///
/// The triangular schedule ramps linearly from `base_lr` to `max_lr` over
/// `half_period` iterations, back down over the next `half_period`, and
/// repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant {
        base_lr: f64,
    },
    CyclicTriangular {
        base_lr: f64,
        max_lr: f64,
        half_period: u64,
    },
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LrSchedule::Constant { base_lr } => {
                if base_lr.is_nan() || base_lr <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "constant schedule: base_lr={base_lr} must be > 0"
                    )));
                }
            }
            LrSchedule::CyclicTriangular {
                base_lr,
                max_lr,
                half_period,
            } => {
                if base_lr.is_nan() || max_lr.is_nan() || base_lr <= 0.0 || base_lr > max_lr {
                    return Err(Error::InvalidConfig(format!(
                        "cyclic schedule: need 0 < base_lr <= max_lr, got {base_lr}..{max_lr}"
                    )));
                }
                if half_period == 0 {
                    return Err(Error::InvalidConfig(
                        "cyclic schedule: half_period must be >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, iteration: u64) -> f64 {
        match *self {
            LrSchedule::Constant { base_lr } => base_lr,
            LrSchedule::CyclicTriangular {
                base_lr,
                max_lr,
                half_period,
            } => {
                let pos = iteration % (2 * half_period);
                let frac = if pos <= half_period {
                    pos as f64 / half_period as f64
                } else {
                    (2 * half_period - pos) as f64 / half_period as f64
                };
                base_lr + (max_lr - base_lr) * frac
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic() -> LrSchedule {
        LrSchedule::CyclicTriangular {
            base_lr: 0.001,
            max_lr: 0.002,
            half_period: 100,
        }
    }

    #[test]
    fn cycle_starts_at_base() {
        assert_eq!(cyclic().lr_at(0), 0.001);
    }

    #[test]
    fn cycle_peaks_at_half_period() {
        assert_eq!(cyclic().lr_at(100), 0.002);
    }

    #[test]
    fn cycle_returns_to_base_and_repeats() {
        let s = cyclic();
        assert_eq!(s.lr_at(200), 0.001);
        assert_eq!(s.lr_at(300), 0.002);
        assert!((s.lr_at(50) - 0.0015).abs() < 1e-15);
        assert!((s.lr_at(150) - 0.0015).abs() < 1e-15);
    }

    #[test]
    fn constant_is_constant() {
        let s = LrSchedule::Constant { base_lr: 0.01 };
        for it in [0, 1, 17, 10_000] {
            assert_eq!(s.lr_at(it), 0.01);
        }
    }

    #[test]
    fn validation_rejects_inverted_range() {
        let s = LrSchedule::CyclicTriangular {
            base_lr: 0.01,
            max_lr: 0.001,
            half_period: 10,
        };
        assert!(s.validate().is_err());
    }
}
