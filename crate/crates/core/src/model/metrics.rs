//! Evaluation metrics.

use super::ModelError;

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<(), ModelError> {
    if y.len() != yhat.len() {
        return Err(ModelError::ShapeMismatch {
            context: format!("y has {} entries, yhat has {}", y.len(), yhat.len()),
        });
    }
    if y.len() < 2 {
        return Err(ModelError::TooFewRows {
            rows: y.len(),
            needed: 2,
        });
    }
    Ok(())
}

/// Sample Pearson correlation. A constant input is an error, not 0:
/// silently reporting 0 would hide degenerate predictions.
pub fn pearson_r(y: &[f64], yhat: &[f64]) -> Result<f64, ModelError> {
    check_lengths(y, yhat)?;
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mh = yhat.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in y.iter().zip(yhat) {
        let da = a - my;
        let db = b - mh;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ModelError::ConstantVector {
            context: if sxx == 0.0 { "y" } else { "yhat" }.to_string(),
        });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Mean of squared residuals.
pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64, ModelError> {
    check_lengths(y, yhat)?;
    let n = y.len() as f64;
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}
