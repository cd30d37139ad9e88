//! Column selection: variance floor, then a per-column correlation
//! significance test against the outcome. Both return kept column
//! indices in ascending order so downstream slices stay aligned.

use ndarray::ArrayView2;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ModelError;

/// Keeps columns whose sample variance (n−1 denominator) exceeds
/// `floor`. Errors when nothing survives: a model with zero columns
/// is a configuration mistake, not a fit.
pub fn remove_low_variance(x: ArrayView2<f64>, floor: f64) -> Result<Vec<usize>, ModelError> {
    let n = x.nrows();
    if n < 2 {
        return Err(ModelError::TooFewRows { rows: n, needed: 2 });
    }
    let denom = (n - 1) as f64;
    let mut kept = Vec::new();
    for (j, col) in x.columns().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / denom;
        if var > floor {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(ModelError::AllColumnsDropped);
    }
    Ok(kept)
}

/// Keeps columns whose Pearson correlation with `y` is significant at
/// `alpha` under a two-sided t-test with n−2 degrees of freedom. At
/// least one column always survives (the largest |r|, smallest index
/// on ties), and with n ≤ 2 there are no degrees of freedom so every
/// column is kept.
pub fn correlation_filter(x: ArrayView2<f64>, y: &[f64], alpha: f64) -> Vec<usize> {
    let n = x.nrows();
    let p = x.ncols();
    assert_eq!(n, y.len(), "feature rows must match outcome length");
    if n <= 2 {
        return (0..p).collect();
    }
    let df = (n - 2) as f64;
    let t_dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let syy: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();

    let mut kept = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (j, col) in x.columns().into_iter().enumerate() {
        let x_mean = col.sum() / n as f64;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (xv, yv) in col.iter().zip(y) {
            let dx = xv - x_mean;
            sxx += dx * dx;
            sxy += dx * (yv - y_mean);
        }
        let r = if sxx <= 0.0 || syy <= 0.0 {
            0.0
        } else {
            sxy / (sxx * syy).sqrt()
        };
        let abs_r = r.abs().min(1.0);
        let p_value = if abs_r >= 1.0 {
            0.0
        } else {
            let t = abs_r * (df / (1.0 - abs_r * abs_r)).sqrt();
            2.0 * (1.0 - t_dist.cdf(t))
        };
        if p_value < alpha {
            kept.push(j);
        }
        match best {
            Some((b, _)) if b >= abs_r => {}
            _ => best = Some((abs_r, j)),
        }
    }
    if kept.is_empty() {
        kept.push(best.expect("at least one column").1);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, ArrayView2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn view(data: &Array2<f64>) -> ArrayView2<'_, f64> {
        data.view()
    }

    #[test]
    fn variance_floor_drops_constant_column() {
        let x = ndarray::array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        assert_eq!(remove_low_variance(view(&x), 0.0).unwrap(), vec![0]);
    }

    #[test]
    fn variance_floor_is_strict() {
        // Column variance exactly 0.5: kept at floor 0.4, dropped at 0.5.
        let x = ndarray::array![[0.0], [1.0]];
        assert_eq!(remove_low_variance(view(&x), 0.4).unwrap(), vec![0]);
        assert!(matches!(
            remove_low_variance(view(&x), 0.5),
            Err(ModelError::AllColumnsDropped)
        ));
    }

    #[test]
    fn variance_floor_needs_two_rows() {
        let x = ndarray::array![[1.0, 2.0]];
        assert!(matches!(
            remove_low_variance(view(&x), 0.0),
            Err(ModelError::TooFewRows { rows: 1, needed: 2 })
        ));
    }

    #[test]
    fn correlation_keeps_exact_predictor() {
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Array2::zeros((20, 3));
        for i in 0..20 {
            x[[i, 0]] = rng.sample::<f64, _>(StandardNormal);
            x[[i, 1]] = y[i] + 0.01 * rng.sample::<f64, _>(StandardNormal);
            x[[i, 2]] = rng.sample::<f64, _>(StandardNormal);
        }
        let kept = correlation_filter(view(&x), &y, 0.05);
        assert!(kept.contains(&1));
    }

    #[test]
    fn correlation_always_keeps_best_column() {
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = Array2::zeros((10, 4));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        // Impossibly strict alpha: nothing passes, best |r| survives.
        let kept = correlation_filter(view(&x), &y, 1e-300);
        assert_eq!(kept.len(), 1);
        let mut best_j = 0;
        let mut best_r = -1.0;
        for j in 0..4 {
            let col: Vec<f64> = x.column(j).to_vec();
            let r = crate::model::pearson_r(&col, &y).unwrap().abs();
            if r > best_r {
                best_r = r;
                best_j = j;
            }
        }
        assert_eq!(kept[0], best_j);
    }

    #[test]
    fn correlation_keeps_everything_without_dof() {
        let x = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let y = vec![0.0, 1.0];
        assert_eq!(correlation_filter(view(&x), &y, 0.05), vec![0, 1]);
    }

    #[test]
    fn null_rejection_rate_matches_alpha() {
        // Independent noise columns against a noise outcome: the test
        // should keep ~5% of columns at alpha = 0.05.
        let n = 1000;
        let p = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut x = Array2::zeros((n, p));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let kept = correlation_filter(view(&x), &y, 0.05);
        let kept_rate = kept.len() as f64 / p as f64;
        assert!(
            (0.03..=0.07).contains(&kept_rate),
            "kept rate {kept_rate} outside [0.03, 0.07]"
        );
    }
}
