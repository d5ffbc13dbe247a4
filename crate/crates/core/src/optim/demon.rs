//! DEMON: momentum that decays from `beta_init` to zero over the training
//! horizon.

use super::{check_finite, check_lengths, momentum_update, Optimizer, ParamVector};
use crate::error::{Error, Result};

/// Decayed momentum coefficient at step `t` of a horizon of `total` steps:
///
/// `beta_t = beta_init * (1 - t/total) / ((1 - beta_init) + beta_init * (1 - t/total))`
///
/// Monotone non-increasing in `t`, equal to `beta_init` at `t = 0` and to
/// zero at `t = total`.
pub fn demon_beta(t: u64, total: u64, beta_init: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument(
            "demon_beta: total iterations must be >= 1".into(),
        ));
    }
    if t > total {
        return Err(Error::InvalidArgument(format!(
            "demon_beta: t={t} outside [0, {total}]"
        )));
    }
    if !(0.0 < beta_init && beta_init < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "demon_beta: beta_init={beta_init} outside (0, 1)"
        )));
    }
    let remaining = 1.0 - t as f64 / total as f64;
    let num = beta_init * remaining;
    Ok(num / ((1.0 - beta_init) + num))
}

/// Momentum optimizer with the DEMON decay schedule. `total` counts base
/// optimizer steps only; stepping past it is an error rather than a clamp.
#[derive(Debug, Clone)]
pub struct Demon {
    velocity: Vec<f64>,
    beta_init: f64,
    weight_decay: f64,
    total: u64,
    t: u64,
}

impl Demon {
    pub fn new(n: usize, beta_init: f64, weight_decay: f64, total_iterations: u64) -> Result<Self> {
        if total_iterations == 0 {
            return Err(Error::InvalidArgument(
                "Demon: total_iterations must be >= 1".into(),
            ));
        }
        if !(0.0 < beta_init && beta_init < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Demon: beta_init={beta_init} outside (0, 1)"
            )));
        }
        Ok(Self {
            velocity: vec![0.0; n],
            beta_init,
            weight_decay,
            total: total_iterations,
            t: 0,
        })
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Current position in the decay horizon.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// Rewinds or advances the decay clock without touching the velocity.
    pub fn set_iteration(&mut self, t: u64) {
        self.t = t;
    }
}

impl Optimizer for Demon {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        if self.t >= self.total {
            return Err(Error::IterationBudget {
                t: self.t,
                total: self.total,
            });
        }
        check_lengths("demon_step", params, grads, self.velocity.len())?;
        let beta = demon_beta(self.t, self.total, self.beta_init)?;
        momentum_update(
            params.as_mut_slice(),
            &mut self.velocity,
            grads,
            lr,
            beta,
            self.weight_decay,
        );
        self.t += 1;
        check_finite("demon_step", params, self.t)
    }

    fn name(&self) -> &'static str {
        "demon"
    }

    fn iterations(&self) -> u64 {
        self.t
    }

    fn reset_velocity(&mut self) {
        self.velocity.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::SgdMomentum;

    #[test]
    fn beta_endpoints_are_exact() {
        for &b in &[0.5, 0.9, 0.99] {
            assert_eq!(demon_beta(0, 1000, b).unwrap(), b);
            assert_eq!(demon_beta(1000, 1000, b).unwrap(), 0.0);
        }
    }

    // beta_init = 0.9 at t/T = 0.5: 0.45 / (0.1 + 0.45) = 9/11.
    #[test]
    fn beta_midpoint_hand_value() {
        let b = demon_beta(5, 10, 0.9).unwrap();
        assert!((b - 9.0 / 11.0).abs() < 1e-12, "{b}");
    }

    #[test]
    fn beta_is_monotone_non_increasing() {
        let mut prev = f64::INFINITY;
        for t in 0..=1000 {
            let b = demon_beta(t, 1000, 0.9).unwrap();
            assert!(b <= prev, "t={t}: {b} > {prev}");
            prev = b;
        }
    }

    #[test]
    fn beta_rejects_zero_horizon() {
        assert!(demon_beta(0, 0, 0.9).is_err());
    }

    #[test]
    fn zero_grad_zero_velocity_leaves_params_unchanged() {
        let mut opt = Demon::new(2, 0.9, 0.0, 100).unwrap();
        let mut p = ParamVector::new(vec![1.0, -1.0]);
        for _ in 0..5 {
            opt.step(&mut p, &[0.0, 0.0], 0.1).unwrap();
        }
        assert_eq!(p.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn step_past_horizon_is_an_error() {
        let mut opt = Demon::new(1, 0.9, 0.0, 2).unwrap();
        let mut p = ParamVector::new(vec![0.0]);
        opt.step(&mut p, &[1.0], 0.1).unwrap();
        opt.step(&mut p, &[1.0], 0.1).unwrap();
        let err = opt.step(&mut p, &[1.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::IterationBudget { t: 2, total: 2 }));
    }

    // Holding t at 0 keeps beta at beta_init, which must reproduce the
    // constant-momentum optimizer bit for bit.
    #[test]
    fn constant_beta_matches_sgd_momentum_bitwise() {
        let mut demon = Demon::new(3, 0.9, 1e-4, 10).unwrap();
        let mut sgd = SgdMomentum::new(3, 0.9, 1e-4);
        let mut p_demon = ParamVector::new(vec![0.3, -0.7, 1.1]);
        let mut p_sgd = p_demon.clone();
        let grads = [0.2, -0.1, 0.05];
        for _ in 0..5 {
            demon.set_iteration(0);
            demon.step(&mut p_demon, &grads, 0.05).unwrap();
            sgd.step(&mut p_sgd, &grads, 0.05).unwrap();
        }
        assert_eq!(p_demon.as_slice(), p_sgd.as_slice());
        assert_eq!(demon.velocity(), sgd.velocity());
    }
}
