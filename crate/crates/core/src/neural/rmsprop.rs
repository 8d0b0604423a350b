//! RMSprop: scale each update by the root of a discounted average of
//! squared gradients.
//!
//! ```text
//! avg   <- rho * avg + (1 - rho) * g^2
//! param <- param - lr * g / (sqrt(avg) + eps)
//! ```
//!
//! Plain variant: no centering, no momentum term.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmspropParams {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmspropParams {
    fn default() -> Self {
        RmspropParams {
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// One squared-gradient average per parameter tensor, in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct RmspropState {
    pub params: RmspropParams,
    pub averages: Vec<Vec<f64>>,
}

impl RmspropState {
    pub fn new(params: RmspropParams, tensor_sizes: &[usize]) -> Self {
        RmspropState {
            params,
            averages: tensor_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Update one tensor in place. `index` selects its average slot.
    pub fn step(&mut self, index: usize, values: &mut [f64], grads: &[f64]) -> Result<()> {
        let avg = self.averages.get_mut(index).ok_or_else(|| {
            Error::Size(format!("optimizer has no slot {index}"))
        })?;
        if avg.len() != values.len() || grads.len() != values.len() {
            return Err(Error::Size(format!(
                "optimizer slot {index}: {} averages, {} params, {} grads",
                avg.len(),
                values.len(),
                grads.len()
            )));
        }
        let RmspropParams {
            learning_rate,
            rho,
            epsilon,
        } = self.params;
        for ((a, p), &g) in avg.iter_mut().zip(values.iter_mut()).zip(grads) {
            *a = rho * *a + (1.0 - rho) * g * g;
            *p -= learning_rate * g / (a.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_computation() {
        // g = 1: avg = 0.1, delta = -0.001 / (sqrt(0.1) + 1e-8).
        let mut state = RmspropState::new(RmspropParams::default(), &[1]);
        let mut p = vec![0.0];
        state.step(0, &mut p, &[1.0]).unwrap();
        let expected = -0.001 / (0.1f64.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12);
        assert!((expected + 0.0031623).abs() < 1e-7);
        assert!((state.averages[0][0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut state = RmspropState::new(RmspropParams::default(), &[2]);
        let mut p = vec![1.5, -2.5];
        state.step(0, &mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.5, -2.5]);
    }

    #[test]
    fn quadratic_loss_converges() {
        // Minimize (p - 3)^2 from p = 0. The step size settles near lr, so
        // lr = 0.01 covers the distance of 3 well within 500 steps and then
        // oscillates within ~lr of the optimum.
        let params = RmspropParams {
            learning_rate: 0.01,
            ..RmspropParams::default()
        };
        let mut state = RmspropState::new(params, &[1]);
        let mut p = vec![0.0];
        for _ in 0..500 {
            let g = 2.0 * (p[0] - 3.0);
            state.step(0, &mut p, &[g]).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 0.1, "p = {}", p[0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut state = RmspropState::new(RmspropParams::default(), &[2]);
        let mut p = vec![0.0, 0.0];
        assert!(state.step(0, &mut p, &[1.0]).is_err());
        assert!(state.step(1, &mut p, &[1.0, 1.0]).is_err());
    }
}
