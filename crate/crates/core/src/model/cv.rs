//! Prediction pipeline (variance filter → correlation filter → PCA →
//! ridge) and k-fold cross-validation. The honest protocol refits the
//! whole pipeline inside each training fold; the leaky variant fits
//! selection and PCA once on all rows, for measuring what that leak
//! buys.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::pca::{pca_apply, pca_fit_with, PcaBasis, PcaSpec};
use super::ridge::{ridge_fit, RidgeModel};
use super::select::{correlation_filter, remove_low_variance};
use super::ModelError;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Columns with sample variance ≤ this are dropped.
    pub variance_floor: f64,
    /// Two-sided significance level for the outcome-correlation test.
    pub correlation_alpha: f64,
    /// Component selection; None skips the projection entirely.
    pub pca: Option<PcaSpec>,
    pub ridge_alpha: f64,
    pub folds: usize,
    pub seed: u64,
    /// Fit selection and PCA on all rows instead of per training fold.
    /// Leaks outcome information through the correlation filter; off
    /// by default and only useful for measuring that effect.
    pub leaky_preprocess: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variance_floor: 0.0,
            correlation_alpha: 0.05,
            pca: Some(PcaSpec::ExplainedVariance(0.95)),
            ridge_alpha: 1000.0,
            folds: 10,
            seed: 0,
            leaky_preprocess: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.folds < 2 {
            return Err(ModelError::InvalidConfig {
                reason: format!("folds = {} but at least 2 are required", self.folds),
            });
        }
        if !(self.ridge_alpha > 0.0) || !self.ridge_alpha.is_finite() {
            return Err(ModelError::InvalidConfig {
                reason: format!("ridge_alpha = {} must be a positive finite number", self.ridge_alpha),
            });
        }
        match self.pca {
            Some(PcaSpec::Components(k)) if k < 1 => {
                return Err(ModelError::InvalidConfig {
                    reason: "pca component count must be ≥ 1".to_string(),
                });
            }
            Some(PcaSpec::ExplainedVariance(f)) if !(f > 0.0 && f <= 1.0) => {
                return Err(ModelError::InvalidConfig {
                    reason: format!("pca explained-variance fraction {f} outside (0, 1]"),
                });
            }
            _ => {}
        }
        if !(self.correlation_alpha > 0.0 && self.correlation_alpha <= 1.0) {
            return Err(ModelError::InvalidConfig {
                reason: format!("correlation_alpha {} outside (0, 1]", self.correlation_alpha),
            });
        }
        Ok(())
    }
}

/// Everything fit on a training set, in application order.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    var_keep: Vec<usize>,
    corr_keep: Vec<usize>,
    basis: Option<PcaBasis>,
    ridge: RidgeModel,
}

impl FittedPipeline {
    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let x1 = x.select(Axis(1), &self.var_keep);
        let x2 = x1.select(Axis(1), &self.corr_keep);
        match &self.basis {
            Some(b) => self.ridge.predict(pca_apply(x2.view(), b).view()),
            None => self.ridge.predict(x2.view()),
        }
    }

    /// Columns of the original matrix that survive both filters.
    pub fn selected_columns(&self) -> Vec<usize> {
        self.corr_keep.iter().map(|&j| self.var_keep[j]).collect()
    }

    pub fn n_components(&self) -> usize {
        match &self.basis {
            Some(b) => b.n_components(),
            None => self.corr_keep.len(),
        }
    }
}

pub fn fit_pipeline(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &PipelineConfig,
) -> Result<FittedPipeline, ModelError> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(ModelError::ShapeMismatch {
            context: format!("{} feature rows vs {} outcomes", x.nrows(), y.len()),
        });
    }
    let var_keep = remove_low_variance(x, cfg.variance_floor)?;
    let x1 = x.select(Axis(1), &var_keep);
    let corr_keep = correlation_filter(x1.view(), y, cfg.correlation_alpha);
    let x2 = x1.select(Axis(1), &corr_keep);
    let (basis, z) = match cfg.pca {
        Some(spec) => {
            let b = pca_fit_with(x2.view(), &spec)?;
            let z = pca_apply(x2.view(), &b);
            (Some(b), z)
        }
        None => (None, x2),
    };
    let ridge = ridge_fit(z.view(), y, cfg.ridge_alpha)?;
    Ok(FittedPipeline {
        var_keep,
        corr_keep,
        basis,
        ridge,
    })
}

/// Shuffles 0..n with a seeded generator and splits contiguously; the
/// first n mod folds chunks take one extra row. Returns test-row
/// indices per fold.
pub fn fold_assignments(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / folds;
    let rem = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < rem);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Out-of-fold predictions in original row order.
pub fn cross_validate(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &PipelineConfig,
) -> Result<Vec<f64>, ModelError> {
    cfg.validate()?;
    let n = x.nrows();
    if n != y.len() {
        return Err(ModelError::ShapeMismatch {
            context: format!("{} feature rows vs {} outcomes", n, y.len()),
        });
    }
    if n < cfg.folds {
        return Err(ModelError::TooFewRows {
            rows: n,
            needed: cfg.folds,
        });
    }
    let folds = fold_assignments(n, cfg.folds, cfg.seed);

    // The leaky variant shares selection and projection across folds;
    // only the ridge stays per-fold.
    let leaky_stage: Option<(Array2<f64>,)> = if cfg.leaky_preprocess {
        let var_keep = remove_low_variance(x, cfg.variance_floor)?;
        let x1 = x.select(Axis(1), &var_keep);
        let corr_keep = correlation_filter(x1.view(), y, cfg.correlation_alpha);
        let x2 = x1.select(Axis(1), &corr_keep);
        let z = match cfg.pca {
            Some(spec) => {
                let b = pca_fit_with(x2.view(), &spec)?;
                pca_apply(x2.view(), &b)
            }
            None => x2,
        };
        Some((z,))
    } else {
        None
    };

    let per_fold: Result<Vec<(usize, Vec<f64>)>, ModelError> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let in_test: std::collections::HashSet<usize> = test_idx.iter().copied().collect();
            let train_idx: Vec<usize> = (0..n).filter(|i| !in_test.contains(i)).collect();
            let y_train: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
            let preds = match &leaky_stage {
                Some((z,)) => {
                    let z_train = z.select(Axis(0), &train_idx);
                    let model = ridge_fit(z_train.view(), &y_train, cfg.ridge_alpha)?;
                    let z_test = z.select(Axis(0), test_idx);
                    model.predict(z_test.view()).to_vec()
                }
                None => {
                    let x_train = x.select(Axis(0), &train_idx);
                    let fitted = fit_pipeline(x_train.view(), &y_train, cfg)?;
                    let x_test = x.select(Axis(0), test_idx);
                    fitted.predict(x_test.view()).to_vec()
                }
            };
            Ok((f, preds))
        })
        .collect();

    let mut out = vec![f64::NAN; n];
    for (f, preds) in per_fold? {
        for (&row, &p) in folds[f].iter().zip(&preds) {
            out[row] = p;
        }
    }
    Ok(out)
}
