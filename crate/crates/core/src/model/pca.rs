//! Principal components via eigendecomposition of whichever Gram
//! matrix is smaller (features or rows), so wide matrices cost the
//! same as tall ones.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::linalg::symmetric_eigh;
use super::ModelError;

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaSpec {
    /// Exactly this many, capped at the numerical rank.
    Components(usize),
    /// Smallest count whose cumulative explained variance reaches
    /// this fraction of the total.
    ExplainedVariance(f64),
}

/// Centered orthonormal projection basis fit on training rows.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    mean: Array1<f64>,
    /// p × k, columns are components.
    components: Array2<f64>,
    /// Variance captured by each kept component (descending).
    eigenvalues: Vec<f64>,
    total_variance: f64,
}

impl PcaBasis {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.components.nrows()
    }

    /// Fraction of total variance captured by the kept components.
    pub fn explained_fraction(&self) -> f64 {
        if self.total_variance <= 0.0 {
            return 1.0;
        }
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.components.column(k).to_vec()
    }
}

/// Rank cutoff: eigenvalues this far below the largest are noise.
const RANK_RTOL: f64 = 1e-12;

/// Fits a basis with exactly `k` components (fewer if the data has
/// lower rank, with a warning).
pub fn pca_fit(x: ArrayView2<f64>, k: usize) -> Result<PcaBasis, ModelError> {
    pca_fit_with(x, &PcaSpec::Components(k))
}

pub fn pca_fit_with(x: ArrayView2<f64>, spec: &PcaSpec) -> Result<PcaBasis, ModelError> {
    let n = x.nrows();
    let p = x.ncols();
    if n < 2 {
        return Err(ModelError::TooFewRows { rows: n, needed: 2 });
    }
    if p == 0 {
        return Err(ModelError::AllColumnsDropped);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            context: "pca input".to_string(),
        });
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &x - &mean.view().insert_axis(Axis(0));

    // Eigenvectors of the p×p Gram are the components directly; for
    // wide matrices the n×n Gram shares eigenvalues and each component
    // is recovered as Xᵀu/√λ.
    let (eigenvalues, components) = if p <= n {
        let gram = centered.t().dot(&centered);
        let (vals, vecs) = symmetric_eigh(&gram)?;
        (vals, vecs)
    } else {
        let outer = centered.dot(&centered.t());
        let (vals, u) = symmetric_eigh(&outer)?;
        let mut vecs = Array2::zeros((p, vals.len()));
        for (k, &lambda) in vals.iter().enumerate() {
            if lambda > 0.0 {
                let col = centered.t().dot(&u.column(k)) / lambda.sqrt();
                vecs.column_mut(k).assign(&col);
            }
        }
        (vals, vecs)
    };

    let total_variance: f64 = eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    let lambda_max = eigenvalues.first().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(ModelError::ConstantVector {
            context: "pca input has no variance".to_string(),
        });
    }
    let rank = eigenvalues
        .iter()
        .take_while(|&&v| v > lambda_max * RANK_RTOL)
        .count();

    let keep = match *spec {
        PcaSpec::Components(k) => {
            if k > rank {
                log::warn!("pca: requested {k} components but rank is {rank}; truncating");
            }
            k.min(rank).max(1)
        }
        PcaSpec::ExplainedVariance(f) => {
            let target = f * total_variance;
            let mut cum = 0.0;
            let mut k = rank;
            for (i, &v) in eigenvalues.iter().take(rank).enumerate() {
                cum += v;
                if cum >= target {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };

    let mut kept = components.slice(ndarray::s![.., ..keep]).to_owned();
    // Sign convention: the entry with the largest magnitude (smallest
    // index on ties) is positive, so refits can't flip components.
    for mut col in kept.columns_mut() {
        let mut best_i = 0;
        let mut best_abs = -1.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best_i = i;
            }
        }
        if col[best_i] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }

    Ok(PcaBasis {
        mean,
        components: kept,
        eigenvalues: eigenvalues[..keep].to_vec(),
        total_variance,
    })
}

/// Projects rows onto the basis: (x − mean) · components.
pub fn pca_apply(x: ArrayView2<f64>, basis: &PcaBasis) -> Array2<f64> {
    assert_eq!(
        x.ncols(),
        basis.n_features(),
        "projection input must match basis feature count"
    );
    let centered = &x - &basis.mean.view().insert_axis(Axis(0));
    centered.dot(&basis.components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, p));
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        x
    }

    #[test]
    fn first_component_finds_dominant_axis() {
        // Points spread along (1,1)/√2 with small off-axis jitter.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Array2::zeros((200, 2));
        for i in 0..200 {
            let t: f64 = rng.gen_range(-1.0..1.0);
            let e: f64 = 0.01 * rng.sample::<f64, _>(StandardNormal);
            x[[i, 0]] = t + e;
            x[[i, 1]] = t - e;
        }
        let basis = pca_fit(x.view(), 1).unwrap();
        let c = basis.component(0);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - inv_sqrt2).abs() < 1e-3, "c0 = {}", c[0]);
        assert!((c[1] - inv_sqrt2).abs() < 1e-3, "c1 = {}", c[1]);
    }

    #[test]
    fn full_rank_projection_reconstructs() {
        let x = random_matrix(10, 4, 9);
        let basis = pca_fit(x.view(), 4).unwrap();
        assert_eq!(basis.n_components(), 4);
        let z = pca_apply(x.view(), &basis);
        // X̂ = Z Cᵀ + mean
        for i in 0..10 {
            for j in 0..4 {
                let mut recon = basis.mean[j];
                for k in 0..4 {
                    recon += z[[i, k]] * basis.components[[j, k]];
                }
                assert!((recon - x[[i, j]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_row_projects_to_zero() {
        let x = random_matrix(12, 3, 21);
        let basis = pca_fit(x.view(), 2).unwrap();
        let mean_row = x.mean_axis(Axis(0)).unwrap().insert_axis(Axis(0));
        let z = pca_apply(mean_row.view(), &basis);
        for v in z.iter() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_request_truncates() {
        // Third column is the sum of the first two: rank 2.
        let base = random_matrix(6, 2, 33);
        let mut x = Array2::zeros((6, 3));
        for i in 0..6 {
            x[[i, 0]] = base[[i, 0]];
            x[[i, 1]] = base[[i, 1]];
            x[[i, 2]] = base[[i, 0]] + base[[i, 1]];
        }
        let basis = pca_fit(x.view(), 3).unwrap();
        assert_eq!(basis.n_components(), 2);
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let x = random_matrix(8, 5, 44);
        let basis = pca_fit(x.view(), 5).unwrap();
        let z = pca_apply(x.view(), &basis);
        for a in 0..8 {
            for b in (a + 1)..8 {
                let dx: f64 = (0..5).map(|j| (x[[a, j]] - x[[b, j]]).powi(2)).sum();
                let dz: f64 = (0..basis.n_components())
                    .map(|k| (z[[a, k]] - z[[b, k]]).powi(2))
                    .sum();
                assert!((dx.sqrt() - dz.sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wide_matrix_components_are_orthonormal() {
        let x = random_matrix(4, 10, 55);
        let basis = pca_fit(x.view(), 3).unwrap();
        assert_eq!(basis.n_components(), 3);
        let c = &basis.components;
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..10).map(|j| c[[j, a]] * c[[j, b]]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9);
            }
        }
        // Reconstruction at full rank (rank = n−1 = 3 after centering).
        let z = pca_apply(x.view(), &basis);
        for i in 0..4 {
            for j in 0..10 {
                let mut recon = basis.mean[j];
                for k in 0..3 {
                    recon += z[[i, k]] * c[[j, k]];
                }
                assert!((recon - x[[i, j]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn explained_variance_picks_smallest_sufficient_k() {
        // Mean-zero data: variance 18 along axis 0, 2 along axis 1.
        let x = ndarray::array![[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let b90 = pca_fit_with(x.view(), &PcaSpec::ExplainedVariance(0.9)).unwrap();
        assert_eq!(b90.n_components(), 1);
        let b95 = pca_fit_with(x.view(), &PcaSpec::ExplainedVariance(0.95)).unwrap();
        assert_eq!(b95.n_components(), 2);
        let b100 = pca_fit_with(x.view(), &PcaSpec::ExplainedVariance(1.0)).unwrap();
        assert_eq!(b100.n_components(), 2);
    }

    #[test]
    fn constant_input_is_rejected() {
        let x = Array2::from_elem((5, 3), 2.5);
        assert!(matches!(
            pca_fit(x.view(), 1),
            Err(ModelError::ConstantVector { .. })
        ));
    }
}
