use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{sym_eigen_desc, Matrix};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Full-covariance Gaussian with its Cholesky factor cached for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub cov: Matrix,
    /// Lower Cholesky factor of `cov`.
    pub chol: Matrix,
    pub log_det: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            cov: Matrix::from(cov),
            chol: Matrix::from(&l),
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Squared Mahalanobis distance by forward substitution.
    pub fn mahalanobis2(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let l = &self.chol.data;
        let mut z = vec![0.0; d];
        let mut acc = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= l[i * d + j] * z[j];
            }
            z[i] = s / l[i * d + i];
            acc += z[i] * z[i];
        }
        acc
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + self.mahalanobis2(x))
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Weighted mean and (1/sum w) scatter of the rows.
pub(crate) fn weighted_moments(rows: &[&[f64]], w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = rows[0].len();
    let total: f64 = w.iter().sum();
    let mut mean = DVector::zeros(d);
    for (r, &wi) in rows.iter().zip(w) {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += wi * v;
        }
    }
    mean /= total;
    let mut cov = DMatrix::zeros(d, d);
    for (r, &wi) in rows.iter().zip(w) {
        let c = DVector::from_iterator(d, r.iter().zip(mean.iter()).map(|(a, b)| a - b));
        cov.ger(wi, &c, &c, 1.0);
    }
    cov /= total;
    (mean, cov)
}

/// Sample covariance with an `n - 1` denominator (zero for a single row).
pub(crate) fn sample_moments(rows: &[&[f64]]) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len() as f64;
    let (mean, cov) = weighted_moments(rows, &vec![1.0; rows.len()]);
    let scale = if rows.len() > 1 { n / (n - 1.0) } else { 0.0 };
    (mean, cov * scale)
}

/// Raises every eigenvalue of a symmetric matrix to at least `floor`.
pub(crate) fn floor_eigenvalues(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(cov.clone());
    let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(floor))));
    let out = &vecs * d * vecs.transpose();
    (&out + out.transpose()) * 0.5
}

/// Rows sorted lexicographically, so fitted models do not depend on input order.
pub(crate) fn canonical_order<'a>(rows: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut out = rows.to_vec();
    out.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}
