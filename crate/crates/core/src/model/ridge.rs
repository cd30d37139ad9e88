//! L2-regularized linear regression on standardized columns. The
//! intercept is the training outcome mean; penalty applies to slopes
//! only, so predictions are invariant to per-column rescaling.

use ndarray::{Array1, Array2, ArrayView2};

use super::linalg::cholesky_solve;
use super::ModelError;

#[derive(Debug, Clone)]
pub struct RidgeModel {
    col_mean: Array1<f64>,
    col_std: Array1<f64>,
    weights: Array1<f64>,
    intercept: f64,
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Slope for standardized column `j`.
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        assert_eq!(
            x.ncols(),
            self.weights.len(),
            "prediction input must match training feature count"
        );
        let mut out = Array1::from_elem(x.nrows(), self.intercept);
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..row.len() {
                acc += self.weights[j] * (row[j] - self.col_mean[j]) / self.col_std[j];
            }
            out[i] += acc;
        }
        out
    }
}

/// Fits (ZᵀZ + αI)w = Zᵀ(y − ȳ) where Z standardizes X column-wise
/// (sample std, n−1 denominator; constant columns get std 1 and end
/// up with weight 0).
pub fn ridge_fit(x: ArrayView2<f64>, y: &[f64], alpha: f64) -> Result<RidgeModel, ModelError> {
    let n = x.nrows();
    let p = x.ncols();
    if n != y.len() {
        return Err(ModelError::ShapeMismatch {
            context: format!("{n} feature rows vs {} outcomes", y.len()),
        });
    }
    if n < 2 {
        return Err(ModelError::TooFewRows { rows: n, needed: 2 });
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(ModelError::NonFinite {
            context: format!("ridge alpha = {alpha}"),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            context: "ridge feature matrix".to_string(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            context: "ridge outcome vector".to_string(),
        });
    }

    let nf = n as f64;
    let mut col_mean = Array1::zeros(p);
    let mut col_std = Array1::zeros(p);
    for (j, col) in x.columns().into_iter().enumerate() {
        let mean = col.sum() / nf;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = (ss / (nf - 1.0)).sqrt();
        col_mean[j] = mean;
        col_std[j] = if std > 0.0 { std } else { 1.0 };
    }

    let mut z = Array2::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            z[[i, j]] = (x[[i, j]] - col_mean[j]) / col_std[j];
        }
    }

    let intercept = y.iter().sum::<f64>() / nf;
    let y_centered = Array1::from_iter(y.iter().map(|v| v - intercept));

    let mut gram = z.t().dot(&z);
    for j in 0..p {
        gram[[j, j]] += alpha;
    }
    let rhs = z.t().dot(&y_centered);
    let weights = cholesky_solve(&gram, &rhs)?;

    Ok(RidgeModel {
        col_mean,
        col_std,
        weights,
        intercept,
    })
}
