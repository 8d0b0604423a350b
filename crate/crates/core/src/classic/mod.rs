//! Classic classifiers and their evaluation harness: standard scaler, KNN,
//! linear SVM, and seeded k-fold cross-validation.

mod knn;
mod metrics;
mod scaler;
mod svm;

pub use knn::knn_predict;
pub use metrics::{binary_metrics, macro_metrics, FoldMetrics};
pub use scaler::{scaler_apply, scaler_fit, ScalerState};
pub use svm::{svm_predict, svm_train, LinearSvmModel};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use serde::Serialize;

/// Which classifier cross-validation should train per fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierSpec {
    Knn { k: usize },
    LinearSvm { c: f64, epochs: usize },
}

/// Anything that can be fit on labeled rows and then predict labels.
pub trait Classifier {
    fn fit(&mut self, x: &FeatureMatrix, y: &[usize]) -> Result<()>;
    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>>;
}

struct KnnClassifier {
    k: usize,
    train_x: Option<FeatureMatrix>,
    train_y: Vec<usize>,
}

impl Classifier for KnnClassifier {
    fn fit(&mut self, x: &FeatureMatrix, y: &[usize]) -> Result<()> {
        if self.k > x.n_rows() {
            return Err(Error::Config(format!(
                "k = {} exceeds fold training size {}",
                self.k,
                x.n_rows()
            )));
        }
        self.train_x = Some(x.clone());
        self.train_y = y.to_vec();
        Ok(())
    }

    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        let train = self
            .train_x
            .as_ref()
            .ok_or_else(|| Error::Train("predict before fit".into()))?;
        knn_predict(train, &self.train_y, x, self.k)
    }
}

/// One-vs-rest linear SVM; binary problems use a single model.
struct SvmClassifier {
    c: f64,
    epochs: usize,
    models: Vec<(usize, LinearSvmModel)>,
    /// Label predicted on the negative side of a single binary model.
    binary_negative: Option<usize>,
}

impl Classifier for SvmClassifier {
    fn fit(&mut self, x: &FeatureMatrix, y: &[usize]) -> Result<()> {
        let mut classes: Vec<usize> = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::Train(
                "fold training data contains a single class".into(),
            ));
        }
        self.models.clear();
        self.binary_negative = None;
        if classes.len() == 2 {
            let positive = classes[1];
            let signed: Vec<i32> = y
                .iter()
                .map(|&label| if label == positive { 1 } else { -1 })
                .collect();
            self.models
                .push((positive, svm_train(x, &signed, self.c, self.epochs)?));
            self.binary_negative = Some(classes[0]);
        } else {
            for &class in &classes {
                let signed: Vec<i32> = y
                    .iter()
                    .map(|&label| if label == class { 1 } else { -1 })
                    .collect();
                self.models
                    .push((class, svm_train(x, &signed, self.c, self.epochs)?));
            }
        }
        Ok(())
    }

    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        if self.models.is_empty() {
            return Err(Error::Train("predict before fit".into()));
        }
        if let Some(negative) = self.binary_negative {
            let (positive, model) = &self.models[0];
            let signs = svm_predict(model, x)?;
            return Ok(signs
                .iter()
                .map(|&s| if s > 0 { *positive } else { negative })
                .collect());
        }
        let mut out = Vec::with_capacity(x.n_rows());
        for i in 0..x.n_rows() {
            let row = x.row(i);
            let best = self
                .models
                .iter()
                .map(|(class, model)| (*class, model.decision(row)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .expect("at least one model");
            out.push(best.0);
        }
        Ok(out)
    }
}

fn make_classifier(spec: &ClassifierSpec) -> Box<dyn Classifier> {
    match spec {
        ClassifierSpec::Knn { k } => Box::new(KnnClassifier {
            k: *k,
            train_x: None,
            train_y: Vec::new(),
        }),
        ClassifierSpec::LinearSvm { c, epochs } => Box::new(SvmClassifier {
            c: *c,
            epochs: *epochs,
            models: Vec::new(),
            binary_negative: None,
        }),
    }
}

/// Cross-validation output: per-fold metrics and their mean.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub folds: Vec<FoldMetrics>,
    pub warnings: Vec<String>,
}

/// Contiguous fold boundaries over a shuffled index list: sizes differ by at
/// most one and cover every row exactly once.
fn fold_ranges(n_rows: usize, folds: usize) -> Vec<(usize, usize)> {
    let base = n_rows / folds;
    let extra = n_rows % folds;
    let mut ranges = Vec::with_capacity(folds);
    let mut start = 0;
    for fold in 0..folds {
        let len = base + usize::from(fold < extra);
        ranges.push((start, start + len));
        start += len;
    }
    ranges
}

/// Seeded k-fold cross-validation with a caller-supplied classifier factory.
pub fn cross_validate_with<F>(
    x: &FeatureMatrix,
    y: &[usize],
    mut factory: F,
    folds: usize,
    seed: u64,
) -> Result<MetricsReport>
where
    F: FnMut() -> Box<dyn Classifier>,
{
    if y.len() != x.n_rows() {
        return Err(Error::Size(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if folds < 2 {
        return Err(Error::Config("cross-validation needs >= 2 folds".into()));
    }
    if x.n_rows() < folds {
        return Err(Error::Size(format!(
            "{} rows cannot fill {folds} folds",
            x.n_rows()
        )));
    }

    let n_classes = y.iter().max().map_or(2, |&m| (m + 1).max(2));
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    order.shuffle(&mut stream_rng(seed, &[0x6356]));
    let ranges = fold_ranges(x.n_rows(), folds);

    let mut fold_metrics = Vec::with_capacity(folds);
    let mut warnings = Vec::new();
    for (fold, &(start, end)) in ranges.iter().enumerate() {
        let held: &[usize] = &order[start..end];
        let mut train_x = FeatureMatrix::new(x.col_names().to_vec());
        let mut train_y = Vec::with_capacity(x.n_rows() - held.len());
        for &row in order[..start].iter().chain(&order[end..]) {
            train_x.push_row(x.provenance()[row], x.row(row))?;
            train_y.push(y[row]);
        }
        let mut test_x = FeatureMatrix::new(x.col_names().to_vec());
        let mut test_y = Vec::with_capacity(held.len());
        for &row in held {
            test_x.push_row(x.provenance()[row], x.row(row))?;
            test_y.push(y[row]);
        }

        let mut distinct = train_y.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            warnings.push(format!(
                "fold {fold}: training split has a single class; fold skipped"
            ));
            continue;
        }

        let mut model = factory();
        model.fit(&train_x, &train_y)?;
        let pred = model.predict(&test_x)?;
        let metrics = if n_classes == 2 {
            binary_metrics(&test_y, &pred)
        } else {
            macro_metrics(&test_y, &pred, n_classes)
        };
        if metrics.precision == 0.0 && metrics.recall == 0.0 && metrics.accuracy > 0.0 {
            warnings.push(format!(
                "fold {fold}: no positive predictions; precision/recall reported as 0"
            ));
        }
        fold_metrics.push(metrics);
    }

    if fold_metrics.is_empty() {
        return Err(Error::Train(
            "no fold had both classes in its training split".into(),
        ));
    }
    let count = fold_metrics.len() as f64;
    let mean = |f: fn(&FoldMetrics) -> f64| fold_metrics.iter().map(f).sum::<f64>() / count;
    Ok(MetricsReport {
        accuracy: mean(|m| m.accuracy),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        folds: fold_metrics,
        warnings,
    })
}

/// Seeded k-fold cross-validation for a spec-selected classifier.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &[usize],
    spec: &ClassifierSpec,
    folds: usize,
    seed: u64,
) -> Result<MetricsReport> {
    cross_validate_with(x, y, || make_classifier(spec), folds, seed)
}
