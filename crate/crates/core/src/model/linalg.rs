//! Dense symmetric solvers, hand-rolled so the arithmetic order is
//! fixed and results reproduce bit-for-bit run to run.

use ndarray::{Array1, Array2};

use super::ModelError;

/// Solves `A x = b` for symmetric positive-definite `A` by LLᵀ
/// factorization. Fails on a non-positive pivot, which for ridge
/// normal matrices signals non-finite input rather than rank issues
/// (the +αI shift keeps genuine ones positive).
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, ModelError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(ModelError::ShapeMismatch {
            context: format!("{}x{} system with rhs of {}", a.nrows(), a.ncols(), b.len()),
        });
    }
    let mut l = a.clone();
    for j in 0..n {
        let mut d = l[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(ModelError::NonFinite {
                context: format!("cholesky pivot {j} = {d}"),
            });
        }
        let diag = d.sqrt();
        l[[j, j]] = diag;
        for i in (j + 1)..n {
            let mut s = l[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / diag;
        }
    }
    // L y = b
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = l[[i, k]] * y[k];
            y[i] -= t;
        }
        y[i] /= l[[i, i]];
    }
    // Lᵀ x = y
    let mut x = y;
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[[k, i]] * x[k];
            x[i] -= t;
        }
        x[i] /= l[[i, i]];
    }
    Ok(x)
}

/// Eigenvalues (descending) and matching orthonormal eigenvector
/// columns of a symmetric matrix, by cyclic Jacobi rotations.
pub fn symmetric_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), ModelError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(ModelError::ShapeMismatch {
            context: format!("eigh on {}x{} matrix", a.nrows(), a.ncols()),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            context: "eigh input".to_string(),
        });
    }
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = (frob * 1e-15).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[[i, p]];
                        let aiq = m[[i, q]];
                        m[[i, p]] = c * aip - s * aiq;
                        m[[p, i]] = m[[i, p]];
                        m[[i, q]] = s * aip + c * aiq;
                        m[[q, i]] = m[[i, q]];
                    }
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Descending eigenvalue, index ascending on ties: deterministic.
    order.sort_by(|&i, &j| {
        m[[j, j]]
            .partial_cmp(&m[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (new_c, &old_c) in order.iter().enumerate() {
        vectors.column_mut(new_c).assign(&v.column(old_c));
    }
    Ok((eigenvalues, vectors))
}
