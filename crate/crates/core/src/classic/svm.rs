//! Linear soft-margin SVM trained in the primal.
//!
//! Full-batch subgradient descent on the regularized hinge loss
//! `J(w, b) = lambda/2 |w|^2 + (1/n) sum max(0, 1 - y_i (w.x_i + b))`
//! with `lambda = 1 / (c n)` and the step schedule `eta_t = 1 / (lambda t)`.
//! The bias is not regularized. Starting from w = 0, b = 0 the whole run is
//! deterministic, and on datasets symmetric under (x, y) -> (-x, -y) the
//! bias stays exactly zero.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Regularized objective after each epoch's update.
    pub objective_per_epoch: Vec<f64>,
}

impl LinearSvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

fn objective(x: &FeatureMatrix, y: &[i32], weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let n = x.n_rows() as f64;
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    let hinge: f64 = (0..x.n_rows())
        .map(|i| {
            let margin = y[i] as f64
                * (x.row(i).iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() + bias);
            (1.0 - margin).max(0.0)
        })
        .sum();
    lambda / 2.0 * norm_sq + hinge / n
}

/// Train on labels in {-1, +1}. Both classes must be present.
pub fn svm_train(x: &FeatureMatrix, y: &[i32], c: f64, epochs: usize) -> Result<LinearSvmModel> {
    if y.len() != x.n_rows() {
        return Err(Error::Size(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::Train("cannot train on an empty matrix".into()));
    }
    if y.iter().any(|&label| label != 1 && label != -1) {
        return Err(Error::Validation("SVM labels must be -1 or +1".into()));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::Train(
            "training data contains a single class".into(),
        ));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Config(format!("c must be > 0, got {c}")));
    }
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }

    let n = x.n_rows();
    let dim = x.n_cols();
    let lambda = 1.0 / (c * n as f64);
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut objective_per_epoch = Vec::with_capacity(epochs);

    let mut grad_w = vec![0.0; dim];
    for t in 1..=epochs {
        let eta = 1.0 / (lambda * t as f64);
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (i, &label) in y.iter().enumerate() {
            let row = x.row(i);
            let yi = label as f64;
            let margin =
                yi * (row.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() + bias);
            if margin < 1.0 {
                for (g, v) in grad_w.iter_mut().zip(row) {
                    *g -= yi * v;
                }
                grad_b -= yi;
            }
        }
        let inv_n = 1.0 / n as f64;
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= eta * (lambda * *w + g * inv_n);
        }
        bias -= eta * grad_b * inv_n;
        objective_per_epoch.push(objective(x, y, &weights, bias, lambda));
    }

    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::Train("SVM weights diverged".into()));
    }
    Ok(LinearSvmModel {
        weights,
        bias,
        c,
        objective_per_epoch,
    })
}

/// Predict {-1, +1} via the sign of the decision value; zero maps to +1.
pub fn svm_predict(model: &LinearSvmModel, x: &FeatureMatrix) -> Result<Vec<i32>> {
    if x.n_cols() != model.weights.len() {
        return Err(Error::Size(format!(
            "model over {} features applied to {} columns",
            model.weights.len(),
            x.n_cols()
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| if model.decision(x.row(i)) >= 0.0 { 1 } else { -1 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        FeatureMatrix::from_rows((0..cols).map(|c| format!("c{c}")).collect(), rows).unwrap()
    }

    /// Two seeded Gaussian blobs around +/- center; margin well above 1.
    fn blobs(n_per_class: usize, seed: u64) -> (FeatureMatrix, Vec<i32>) {
        let mut rng = crate::rng::stream_rng(seed, &[0]);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in [1i32, -1] {
            for _ in 0..n_per_class {
                let center = 4.0 * class as f64;
                rows.push(vec![
                    center + rng.random_range(-1.0..1.0),
                    center + rng.random_range(-1.0..1.0),
                ]);
                labels.push(class);
            }
        }
        (matrix(rows), labels)
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (x, y) = blobs(25, 7);
        let model = svm_train(&x, &y, 1.0, 100).unwrap();
        let preds = svm_predict(&model, &x).unwrap();
        let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
        assert_eq!(correct, y.len(), "expected 100% training accuracy");
    }

    #[test]
    fn negation_symmetric_data_keeps_bias_at_zero() {
        let mut rng = crate::rng::stream_rng(8, &[0]);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..20 {
            let point: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mirrored: Vec<f64> = point.iter().map(|v| -v).collect();
            rows.push(point);
            labels.push(1);
            rows.push(mirrored);
            labels.push(-1);
        }
        let model = svm_train(&matrix(rows), &labels, 1.0, 50).unwrap();
        assert!(model.bias.abs() < 1e-6, "bias {}", model.bias);
    }

    #[test]
    fn objective_decreases_from_first_epoch() {
        let (x, y) = blobs(30, 9);
        let model = svm_train(&x, &y, 1.0, 100).unwrap();
        let first = model.objective_per_epoch[0];
        let last = *model.objective_per_epoch.last().unwrap();
        assert!(last <= first, "objective went {first} -> {last}");
        // Recompute the final objective by direct summation.
        let lambda = 1.0 / (1.0 * x.n_rows() as f64);
        let direct = objective(&x, &y, &model.weights, model.bias, lambda);
        assert!((direct - last).abs() < 1e-12);
    }

    #[test]
    fn single_class_input_is_training_error() {
        let x = matrix(vec![vec![1.0], vec![2.0]]);
        assert!(matches!(
            svm_train(&x, &[1, 1], 1.0, 10),
            Err(Error::Train(_))
        ));
    }

    #[test]
    fn prediction_invariant_under_positive_rescaling() {
        let (x, y) = blobs(10, 11);
        let model = svm_train(&x, &y, 1.0, 50).unwrap();
        let scaled = LinearSvmModel {
            weights: model.weights.iter().map(|w| 3.7 * w).collect(),
            bias: 3.7 * model.bias,
            c: model.c,
            objective_per_epoch: vec![],
        };
        assert_eq!(
            svm_predict(&model, &x).unwrap(),
            svm_predict(&scaled, &x).unwrap()
        );
    }
}
