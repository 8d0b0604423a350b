//! Standard scaler: per-column zero mean, unit variance.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Fitted per-column statistics. Standard deviations are population (divide
/// by n).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerState {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Fit column means and population standard deviations.
pub fn scaler_fit(matrix: &FeatureMatrix) -> Result<ScalerState> {
    if matrix.n_rows() == 0 {
        return Err(Error::Size("cannot fit a scaler on an empty matrix".into()));
    }
    let (means, stds) = matrix.column_stats();
    Ok(ScalerState { means, stds })
}

/// Transform each value to `(x - mean) / std`. Columns that were constant at
/// fit time (std = 0) map to all zeros.
pub fn scaler_apply(state: &ScalerState, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if state.means.len() != matrix.n_cols() {
        return Err(Error::Size(format!(
            "scaler fitted on {} columns applied to {}",
            state.means.len(),
            matrix.n_cols()
        )));
    }
    let mut out = FeatureMatrix::new(matrix.col_names().to_vec());
    let mut row = vec![0.0; matrix.n_cols()];
    for r in 0..matrix.n_rows() {
        for ((dst, src), (mean, std)) in row
            .iter_mut()
            .zip(matrix.row(r))
            .zip(state.means.iter().zip(&state.stds))
        {
            *dst = if *std == 0.0 { 0.0 } else { (src - mean) / std };
        }
        out.push_row(matrix.provenance()[r], &row)?;
    }
    Ok(out)
}
