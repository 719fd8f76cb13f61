use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::scale::ZScore;
use crate::{Error, Result};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    /// `None` when the model stores raw vectors.
    pub normalization: Option<ZScore>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Stores z-scored training vectors. Prediction is the majority label of
/// the `k` nearest (Euclidean) stored points; among labels tied for the most
/// votes, the one carried by the nearest neighbour wins.
pub fn train_knn(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize) -> Result<KnnModel> {
    train_knn_with(rows, labels, n_classes, k, true)
}

pub fn train_knn_with(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    k: usize,
    standardize: bool,
) -> Result<KnnModel> {
    super::group_by_class(rows, labels, n_classes)?;
    if k == 0 || k > rows.len() {
        return Err(Error::InvalidInput(format!("k = {k} must be in 1..={}", rows.len())));
    }
    let normalization = if standardize { Some(ZScore::fit(rows)?) } else { None };
    let points = match &normalization {
        Some(z) => rows.iter().map(|r| z.transform(r)).collect::<Result<_>>()?,
        None => rows.to_vec(),
    };
    Ok(KnnModel {
        k,
        n_classes,
        normalization,
        points,
        labels: labels.to_vec(),
    })
}

impl KnnModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let q = match &self.normalization {
            Some(z) => z.transform(x)?,
            None => x.to_vec(),
        };
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &order[..self.k];
        let mut votes = vec![0usize; self.n_classes];
        for &(_, i) in nearest {
            votes[self.labels[i]] += 1;
        }
        let top = *votes.iter().max().unwrap_or(&0);
        let class = nearest
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&c| votes[c] == top)
            .unwrap_or(0);
        let scores = votes.iter().map(|&v| v as f64 / self.k as f64).collect();
        Ok(Prediction { class, scores })
    }
}
