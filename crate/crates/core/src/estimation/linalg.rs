use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sample mean and covariance (divisor `T - 1`) of equally long vectors.
pub(crate) fn mean_and_covariance(draws: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let dim = draws.first().map_or(0, |d| d.len());
    let t = draws.len() as f64;
    let mut mean = vec![0.0; dim];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let mut cov = DMatrix::zeros(dim, dim);
    for d in draws {
        for a in 0..dim {
            let da = d[a] - mean[a];
            for b in a..dim {
                cov[(a, b)] += da * (d[b] - mean[b]);
            }
        }
    }
    let denom = (t - 1.0).max(1.0);
    for a in 0..dim {
        for b in a..dim {
            cov[(a, b)] /= denom;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    (mean, cov)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m).symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Symmetrizes `m` and adds `1e-6 * trace / dim` to the diagonal (growing
/// tenfold per attempt) until the smallest eigenvalue exceeds `1e-10`.
/// Returns the matrix and the amount added.
pub fn regularize_positive_definite(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let dim = m.nrows();
    if dim != m.ncols() {
        return Err(Error::DimensionMismatch { expected: dim, found: m.ncols(), what: "square matrix" });
    }
    let mut out = symmetrize(m);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("matrix has non-finite entries"));
    }
    if min_eigenvalue(&out) > 1e-10 {
        return Ok((out, 0.0));
    }
    let scale = (out.trace().abs() / dim.max(1) as f64).max(1e-8);
    let mut added = 0.0;
    let mut step = 1e-6 * scale;
    for _ in 0..24 {
        for k in 0..dim {
            out[(k, k)] += step;
        }
        added += step;
        if min_eigenvalue(&out) > 1e-10 {
            return Ok((out, added));
        }
        step *= 10.0;
    }
    Err(Error::NotPositiveDefinite("regularization did not produce a positive definite matrix"))
}

pub(crate) fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().filter(|inv| inv.iter().all(|v| v.is_finite())).ok_or(Error::SingularMatrix(what))
}

/// `theta + gain * D^{-1} score`.
pub fn robbins_monro_update(theta: &[f64], score: &[f64], gain: f64, d: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = theta.len();
    if score.len() != dim {
        return Err(Error::LengthMismatch { expected: dim, found: score.len(), what: "score" });
    }
    if d.nrows() != dim || d.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: d.nrows(), what: "derivative matrix" });
    }
    let step = d
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(score))
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularMatrix("derivative matrix"))?;
    Ok(theta.iter().zip(step.iter()).map(|(t, s)| t + gain * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_arithmetic() {
        let d = DMatrix::identity(3, 3) * 2.0;
        let t = robbins_monro_update(&[1.0, 2.0, 3.0], &[1.0, 0.0, 0.0], 0.5, &d).unwrap();
        assert_eq!(t, vec![1.25, 2.0, 3.0]);
        let same = robbins_monro_update(&[1.0, 2.0, 3.0], &[0.0; 3], 0.5, &d).unwrap();
        assert_eq!(same, vec![1.0, 2.0, 3.0]);
        assert!(robbins_monro_update(&[1.0, 2.0, 3.0], &[1.0; 3], 0.5, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn regularization() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (r, added) = regularize_positive_definite(&m).unwrap();
        assert!(added > 0.0);
        assert!(min_eigenvalue(&r) > 1e-10);
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(regularize_positive_definite(&id).unwrap().1, 0.0);
    }

    #[test]
    fn covariance_of_known_draws() {
        let draws = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        let (m, c) = mean_and_covariance(&draws);
        assert_eq!(m, vec![2.0, 4.0]);
        assert_eq!(c[(0, 0)], 2.0);
        assert_eq!(c[(0, 1)], 4.0);
        assert_eq!(c[(1, 1)], 8.0);
    }
}
