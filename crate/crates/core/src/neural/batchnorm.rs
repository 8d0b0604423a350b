//! Feature-wise batch normalization with running statistics.

use super::linalg::Mat;

/// Learned scale/shift plus running statistics for evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

/// Forward-pass intermediates needed by backward.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub centered: Mat,
    pub normalized: Mat,
    pub inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(features: usize, momentum: f64, epsilon: f64) -> Self {
        BatchNorm {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            epsilon,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Batch statistics over the rows of `x`; updates the running estimates.
    pub fn forward_train(&mut self, x: &Mat) -> (Mat, BnCache) {
        let n = x.rows() as f64;
        let features = self.features();
        debug_assert_eq!(x.cols(), features);

        let mut mean = x.col_sums();
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; features];
        for r in 0..x.rows() {
            for ((v, m), x_val) in var.iter_mut().zip(&mean).zip(x.row(r)) {
                let d = x_val - m;
                *v += d * d;
            }
        }
        for v in &mut var {
            *v /= n;
        }

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let mut centered = Mat::zeros(x.rows(), features);
        let mut normalized = Mat::zeros(x.rows(), features);
        let mut out = Mat::zeros(x.rows(), features);
        for r in 0..x.rows() {
            for c in 0..features {
                let d = x.at(r, c) - mean[c];
                *centered.at_mut(r, c) = d;
                let xhat = d * inv_std[c];
                *normalized.at_mut(r, c) = xhat;
                *out.at_mut(r, c) = self.gamma[c] * xhat + self.beta[c];
            }
        }

        for c in 0..features {
            self.running_mean[c] = self.momentum * self.running_mean[c] + (1.0 - self.momentum) * mean[c];
            self.running_var[c] = self.momentum * self.running_var[c] + (1.0 - self.momentum) * var[c];
        }

        (
            out,
            BnCache {
                centered,
                normalized,
                inv_std,
            },
        )
    }

    /// Normalize with the running statistics; no state change.
    pub fn forward_eval(&self, x: &Mat) -> Mat {
        let features = self.features();
        debug_assert_eq!(x.cols(), features);
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|&v| 1.0 / (v + self.epsilon).sqrt())
            .collect();
        let mut out = Mat::zeros(x.rows(), features);
        for r in 0..x.rows() {
            let x_row = x.row(r);
            for (c, o) in out.row_mut(r).iter_mut().enumerate() {
                let xhat = (x_row[c] - self.running_mean[c]) * inv_std[c];
                *o = self.gamma[c] * xhat + self.beta[c];
            }
        }
        out
    }

    /// Backward through the batch statistics. Returns (dx, dgamma, dbeta).
    pub fn backward(&self, cache: &BnCache, d_out: &Mat) -> (Mat, Vec<f64>, Vec<f64>) {
        let n = d_out.rows() as f64;
        let features = self.features();

        let mut d_gamma = vec![0.0; features];
        let mut d_beta = vec![0.0; features];
        for r in 0..d_out.rows() {
            for c in 0..features {
                d_gamma[c] += d_out.at(r, c) * cache.normalized.at(r, c);
                d_beta[c] += d_out.at(r, c);
            }
        }

        // dxhat = dout * gamma
        // dvar  = sum dxhat . centered . (-1/2) inv_std^3
        // dmean = sum dxhat . (-inv_std) + dvar . mean(-2 centered)
        // dx    = dxhat inv_std + dvar 2 centered / n + dmean / n
        let mut d_var = vec![0.0; features];
        let mut d_mean = vec![0.0; features];
        for r in 0..d_out.rows() {
            for c in 0..features {
                let dxhat = d_out.at(r, c) * self.gamma[c];
                let inv = cache.inv_std[c];
                d_var[c] += dxhat * cache.centered.at(r, c) * -0.5 * inv * inv * inv;
                d_mean[c] += -dxhat * inv;
            }
        }
        let mut centered_sums = vec![0.0; features];
        for r in 0..d_out.rows() {
            for (s, v) in centered_sums.iter_mut().zip(cache.centered.row(r)) {
                *s += v;
            }
        }
        for c in 0..features {
            d_mean[c] += d_var[c] * (-2.0 / n) * centered_sums[c];
        }

        let mut d_x = Mat::zeros(d_out.rows(), features);
        for r in 0..d_out.rows() {
            for c in 0..features {
                let dxhat = d_out.at(r, c) * self.gamma[c];
                *d_x.at_mut(r, c) = dxhat * cache.inv_std[c]
                    + d_var[c] * 2.0 * cache.centered.at(r, c) / n
                    + d_mean[c] / n;
            }
        }
        (d_x, d_gamma, d_beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn train_mode_standardizes_the_batch() {
        let mut rng = crate::rng::stream_rng(66, &[0]);
        let x = Mat::from_vec(
            64,
            3,
            (0..64 * 3).map(|_| rng.random_range(-5.0..5.0)).collect(),
        );
        let mut bn = BatchNorm::new(3, 0.9, 1e-5);
        let (_, cache) = bn.forward_train(&x);
        // The normalized tensor (before gamma/beta) has mean ~0, var ~1.
        let n = 64.0;
        for c in 0..3 {
            let mean: f64 = (0..64).map(|r| cache.normalized.at(r, c)).sum::<f64>() / n;
            let var: f64 = (0..64)
                .map(|r| (cache.normalized.at(r, c) - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-6, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "var {var}");
        }
    }

    #[test]
    fn zero_momentum_makes_eval_match_train() {
        let mut rng = crate::rng::stream_rng(67, &[0]);
        let x = Mat::from_vec(
            16,
            2,
            (0..32).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        // momentum 0 overwrites running stats with this batch's stats.
        let mut bn = BatchNorm::new(2, 0.0, 1e-5);
        let (train_out, _) = bn.forward_train(&x);
        let eval_out = bn.forward_eval(&x);
        for (a, b) in train_out.data().iter().zip(eval_out.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::rng::stream_rng(68, &[0]);
        let x = Mat::from_vec(
            5,
            2,
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let weight = Mat::from_vec(
            5,
            2,
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let mut bn = BatchNorm::new(2, 0.9, 1e-5);
        for v in &mut bn.gamma {
            *v = rng.random_range(0.5..1.5);
        }
        for v in &mut bn.beta {
            *v = rng.random_range(-0.5..0.5);
        }

        let loss = |bn: &BatchNorm, x: &Mat| -> f64 {
            let mut bn = bn.clone();
            let (out, _) = bn.forward_train(x);
            out.hadamard(&weight).data().iter().sum()
        };

        let (_, cache) = bn.clone().forward_train(&x);
        let (d_x, d_gamma, d_beta) = bn.backward(&cache, &weight);

        let h = 1e-6;
        for r in 0..5 {
            for c in 0..2 {
                let mut plus = x.clone();
                *plus.at_mut(r, c) += h;
                let mut minus = x.clone();
                *minus.at_mut(r, c) -= h;
                let numeric = (loss(&bn, &plus) - loss(&bn, &minus)) / (2.0 * h);
                let analytic = d_x.at(r, c);
                assert!(
                    (analytic - numeric).abs() < 1e-5,
                    "dx[{r},{c}] analytic {analytic} numeric {numeric}"
                );
            }
        }
        for c in 0..2 {
            let mut plus = bn.clone();
            plus.gamma[c] += h;
            let mut minus = bn.clone();
            minus.gamma[c] -= h;
            let numeric = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
            assert!((d_gamma[c] - numeric).abs() < 1e-5);

            let mut plus = bn.clone();
            plus.beta[c] += h;
            let mut minus = bn.clone();
            minus.beta[c] -= h;
            let numeric = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
            assert!((d_beta[c] - numeric).abs() < 1e-5);
        }
    }
}
