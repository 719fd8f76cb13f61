use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{fix_sign, sym_eigen_desc, Matrix};
use crate::{Error, Result};

/// Fraction of total variance the retained components must exceed.
pub const DEFAULT_ENERGY: f64 = 0.9;

/// Principal axes of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub mean: Vec<f64>,
    /// `dim x p`, orthonormal columns in order of decreasing variance.
    pub components: Matrix,
    /// Variance along each retained component.
    pub eigenvalues: Vec<f64>,
    /// All non-negative covariance eigenvalues, descending (retained ones first).
    pub spectrum: Vec<f64>,
}

impl EigenBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.cols
    }

    pub fn total_variance(&self) -> f64 {
        self.spectrum.iter().sum()
    }

    pub fn retained_fraction(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variance()
    }

    /// Coordinates of `x - mean` along the retained components.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let p = self.n_components();
        let mut out = vec![0.0; p];
        for (i, (xi, mi)) in x.iter().zip(&self.mean).enumerate() {
            let c = xi - mi;
            let row = &self.components.data[i * p..(i + 1) * p];
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * c;
            }
        }
        Ok(out)
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let p = self.n_components();
        self.mean
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let row = &self.components.data[i * p..(i + 1) * p];
                m + row.iter().zip(coords).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Smallest prefix of a descending spectrum whose sum exceeds `energy` of the total.
pub fn components_for_energy(spectrum: &[f64], energy: f64) -> usize {
    let total: f64 = spectrum.iter().sum();
    let mut acc = 0.0;
    for (i, v) in spectrum.iter().enumerate() {
        acc += v;
        if acc > energy * total {
            return i + 1;
        }
    }
    spectrum.len()
}

/// PCA of the sample covariance (n - 1 denominator). When the dimension
/// exceeds the number of rows the eigenproblem is solved on the `n x n` Gram
/// matrix instead. Keeps the fewest components whose variance exceeds
/// `energy` of the total, capped at `max_components`.
pub fn fit_pca(rows: &[Vec<f64>], energy: f64, max_components: Option<usize>) -> Result<EigenBasis> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mean = crate::linalg::mean_row(&refs);
    let x = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let (spectrum, vectors): (Vec<f64>, Vec<Vec<f64>>) = if dim > n {
        let gram = &x * x.transpose() / denom;
        let (vals, u) = sym_eigen_desc(gram);
        let floor = vals.first().copied().unwrap_or(0.0).max(0.0) * 1e-12;
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v > floor)
            .map(|(k, &v)| {
                let mut col: Vec<f64> = (x.transpose() * u.column(k)).iter().map(|c| c / (denom * v).sqrt()).collect();
                fix_sign(&mut col);
                (v, col)
            })
            .unzip()
    } else {
        let cov = x.transpose() * &x / denom;
        let (vals, v) = sym_eigen_desc(cov);
        vals.iter()
            .enumerate()
            .filter(|(_, &val)| val > 0.0)
            .map(|(k, &val)| (val, v.column(k).iter().copied().collect()))
            .unzip()
    };

    if spectrum.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut p = components_for_energy(&spectrum, energy);
    if let Some(cap) = max_components {
        p = p.min(cap.max(1));
    }
    let mut comps = DMatrix::zeros(dim, p);
    for (k, col) in vectors.iter().take(p).enumerate() {
        comps.set_column(k, &DVector::from_column_slice(col));
    }
    Ok(EigenBasis {
        mean: mean.iter().copied().collect(),
        components: Matrix::from(&comps),
        eigenvalues: spectrum[..p].to_vec(),
        spectrum,
    })
}
