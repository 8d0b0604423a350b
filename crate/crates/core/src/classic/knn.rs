//! K-nearest-neighbor classification with fully specified tie-breaking.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use std::collections::BTreeMap;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Predict labels by majority vote among the `k` nearest training rows under
/// Euclidean distance. Equal distances are resolved toward the lower row
/// index; vote ties toward the smaller label value.
pub fn knn_predict(
    train_x: &FeatureMatrix,
    train_y: &[usize],
    query_x: &FeatureMatrix,
    k: usize,
) -> Result<Vec<usize>> {
    if train_y.len() != train_x.n_rows() {
        return Err(Error::Size(format!(
            "{} labels for {} training rows",
            train_y.len(),
            train_x.n_rows()
        )));
    }
    if k < 1 || k > train_x.n_rows() {
        return Err(Error::Config(format!(
            "k = {k} must satisfy 1 <= k <= {} training rows",
            train_x.n_rows()
        )));
    }
    if query_x.n_cols() != train_x.n_cols() {
        return Err(Error::Size(format!(
            "query has {} columns, training data has {}",
            query_x.n_cols(),
            train_x.n_cols()
        )));
    }

    let mut predictions = Vec::with_capacity(query_x.n_rows());
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(train_x.n_rows());
    for q in 0..query_x.n_rows() {
        let query = query_x.row(q);
        scored.clear();
        scored.extend(
            (0..train_x.n_rows()).map(|i| (squared_distance(query, train_x.row(i)), i)),
        );
        scored.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("features are finite")
                .then(a.1.cmp(&b.1))
        });

        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &(_, idx) in scored.iter().take(k) {
            *votes.entry(train_y[idx]).or_insert(0) += 1;
        }
        // Ascending label order makes the smaller label win vote ties.
        let mut winner = (usize::MAX, 0usize);
        for (&label, &count) in &votes {
            if count > winner.1 {
                winner = (label, count);
            }
        }
        predictions.push(winner.0);
    }
    Ok(predictions)
}
