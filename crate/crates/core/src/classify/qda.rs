use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gaussian::{canonical_order, log_sum_exp, sample_moments, Gaussian};
use super::{group_by_class, Prediction};
use crate::Result;

/// Shrinkage toward the diagonal used when some class has fewer than `dim + 1` rows.
pub const QDA_SHRINKAGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaModel {
    pub classes: Vec<Gaussian>,
    pub log_priors: Vec<f64>,
    pub shrinkage: f64,
}

/// Per-class Gaussians with uniform priors. A covariance that is still
/// singular after shrinkage gets a small ridge.
pub fn train_qda(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<QdaModel> {
    let groups = group_by_class(rows, labels, n_classes)?;
    let dim = rows[0].len();
    let starved = groups.iter().any(|g| g.len() < dim + 1);
    let lambda = if starved { QDA_SHRINKAGE } else { 0.0 };
    let classes = groups
        .iter()
        .map(|g| {
            let (mean, cov) = sample_moments(&canonical_order(g));
            let diag = DMatrix::from_diagonal(&cov.diagonal());
            let shrunk = &cov * (1.0 - lambda) + diag * lambda;
            fit_gaussian(mean.iter().copied().collect(), shrunk)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QdaModel {
        classes,
        log_priors: vec![-(n_classes as f64).ln(); n_classes],
        shrinkage: lambda,
    })
}

fn fit_gaussian(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Gaussian> {
    if let Ok(g) = Gaussian::new(mean.clone(), &cov) {
        return Ok(g);
    }
    let d = cov.nrows();
    let scale = (cov.trace() / d as f64).max(1e-12);
    let mut ridge = 1e-9 * scale;
    loop {
        let attempt = &cov + DMatrix::identity(d, d) * ridge;
        match Gaussian::new(mean.clone(), &attempt) {
            Ok(g) => return Ok(g),
            Err(e) if ridge > scale => return Err(e),
            Err(_) => ridge *= 10.0,
        }
    }
}

impl QdaModel {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let joint: Vec<f64> = self.classes.iter().zip(&self.log_priors).map(|(g, p)| g.log_pdf(x) + p).collect();
        let z = log_sum_exp(&joint);
        Prediction::from_scores(joint.iter().map(|j| j - z).collect())
    }
}
