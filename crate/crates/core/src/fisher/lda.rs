use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{fix_sign, mean_row, scatter, sym_eigen_desc, Matrix};
use crate::{Error, Result};

/// Ridge added to the within-class scatter, relative to its mean diagonal.
pub const RIDGE_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaProjection {
    /// `p x d` discriminant directions, unit-length columns.
    pub weights: Matrix,
    /// Generalized eigenvalues of the retained directions, descending.
    pub eigenvalues: Vec<f64>,
}

/// Between-class (`n_c`-weighted class-mean) and within-class scatter matrices.
pub fn scatter_matrices(rows: &[Vec<f64>], labels: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mu = mean_row(&refs);
    let dim = mu.len();
    let mut sb = DMatrix::zeros(dim, dim);
    let mut sw = DMatrix::zeros(dim, dim);
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    for c in 0..n_classes {
        let members: Vec<&[f64]> = refs.iter().zip(labels).filter(|(_, &l)| l == c).map(|(r, _)| *r).collect();
        if members.is_empty() {
            continue;
        }
        let mc = mean_row(&members);
        let d = &mc - &mu;
        sb.ger(members.len() as f64, &d, &d, 1.0);
        sw += scatter(&members, &mc);
    }
    (sb, sw)
}

/// Fisher discriminant directions: the top `C - 1` generalized eigenvectors
/// of `(S_B, S_W + eps I)` with `eps = 1e-6 * trace(S_W) / p`. Solved by
/// Cholesky whitening of the regularized within-class scatter.
pub fn fit_lda(rows: &[Vec<f64>], labels: &[usize]) -> Result<LdaProjection> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
    }
    let p = rows.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no rows".into()))?;
    if p == 0 {
        return Err(Error::InvalidInput("zero-dimensional input".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some((class, &have)) = counts.iter().enumerate().find(|(_, &c)| c == 1) {
        return Err(Error::InsufficientInstances { class, have, need: 2 });
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidInput("LDA needs at least two classes".into()));
    }
    let d = (present - 1).min(p);

    let (sb, sw) = scatter_matrices(rows, labels);
    let eps = RIDGE_FACTOR * sw.trace() / p as f64;
    let reg = &sw + DMatrix::identity(p, p) * eps.max(f64::MIN_POSITIVE);
    let chol = reg
        .cholesky()
        .ok_or_else(|| Error::Numerical("regularized within-class scatter is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let m = &l_inv * &sb * l_inv.transpose();
    let (vals, vecs) = sym_eigen_desc(m);

    let back = l_inv.transpose();
    let mut w = DMatrix::zeros(p, d);
    for k in 0..d {
        let mut col: Vec<f64> = (&back * vecs.column(k)).iter().copied().collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= norm);
        fix_sign(&mut col);
        w.set_column(k, &DVector::from_vec(col));
    }
    Ok(LdaProjection {
        weights: Matrix::from(&w),
        eigenvalues: vals[..d].to_vec(),
    })
}

/// `tr((W' S_W W)^-1 (W' S_B W))`.
pub fn fisher_criterion(w: &DMatrix<f64>, sb: &DMatrix<f64>, sw: &DMatrix<f64>) -> Option<f64> {
    let a = w.transpose() * sw * w;
    let b = w.transpose() * sb * w;
    a.try_inverse().map(|inv| (inv * b).trace())
}
