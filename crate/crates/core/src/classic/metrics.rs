//! Classification metrics: accuracy, precision, recall, F1.

use serde::Serialize;

/// Metrics of one evaluation (a single fold or a whole set).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Binary metrics with label 1 as the positive class. Undefined ratios
/// (empty denominators) count as zero.
pub fn binary_metrics(truth: &[usize], pred: &[usize]) -> FoldMetrics {
    debug_assert_eq!(truth.len(), pred.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == 1, p == 1) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let total = truth.len() as f64;
    let accuracy = (tp + tn) as f64 / total;
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    FoldMetrics {
        accuracy,
        precision,
        recall,
        f1: f1_of(precision, recall),
    }
}

/// Macro-averaged metrics over the classes present in the truth labels.
pub fn macro_metrics(truth: &[usize], pred: &[usize], n_classes: usize) -> FoldMetrics {
    debug_assert_eq!(truth.len(), pred.len());
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let accuracy = correct as f64 / truth.len() as f64;

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut present = 0usize;
    for class in 0..n_classes {
        let tp = truth
            .iter()
            .zip(pred)
            .filter(|(&t, &p)| t == class && p == class)
            .count();
        let truth_count = truth.iter().filter(|&&t| t == class).count();
        let pred_count = pred.iter().filter(|&&p| p == class).count();
        if truth_count == 0 {
            continue;
        }
        present += 1;
        let precision = if pred_count > 0 {
            tp as f64 / pred_count as f64
        } else {
            0.0
        };
        let recall = tp as f64 / truth_count as f64;
        precision_sum += precision;
        recall_sum += recall;
        f1_sum += f1_of(precision, recall);
    }
    let denom = present.max(1) as f64;
    FoldMetrics {
        accuracy,
        precision: precision_sum / denom,
        recall: recall_sum / denom,
        f1: f1_sum / denom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_confusion_example() {
        // TP=1, FP=1, FN=0, TN=0.
        let truth = [1, 0];
        let pred = [1, 1];
        let m = binary_metrics(&truth, &pred);
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 1.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let truth = [0, 1, 1, 0, 1];
        let m = binary_metrics(&truth, &truth);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn empty_denominators_yield_zero() {
        // No positive predictions and no positive truths.
        let m = binary_metrics(&[0, 0], &[0, 0]);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn macro_average_over_present_classes() {
        let truth = [0, 0, 1, 1, 2, 2];
        let pred = [0, 0, 1, 0, 2, 2];
        let m = macro_metrics(&truth, &pred, 3);
        assert!((m.accuracy - 5.0 / 6.0).abs() < 1e-12);
        // Recalls: class0 = 1, class1 = 0.5, class2 = 1.
        assert!((m.recall - (1.0 + 0.5 + 1.0) / 3.0).abs() < 1e-12);
    }
}
