//! Multi-class ReliefF feature weighting.

use crate::{Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 10;

const RANGE_TOL: f64 = 1e-9;

/// ReliefF weights for features already min-max scaled to [0, 1].
///
/// Every instance is used as a reference. For each, the `k` nearest hits and
/// the `k` nearest misses from every other class are found under the
/// Manhattan distance (ties go to the lower row index). A feature loses weight
/// by its mean difference to the hits and gains the prior-weighted mean
/// difference to the misses of each other class,
/// `P(C) / (1 - P(class(R)))`. Summation order is fixed, so the result is
/// a deterministic function of the row order.
pub fn relieff_weights(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Vec<f64>> {
    let m = rows.len();
    if labels.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: labels.len() });
    }
    if k == 0 {
        return Err(Error::InvalidInput("ReliefF needs k >= 1".into()));
    }
    let dim = rows.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no instances".into()))?;
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
        }
        if r.iter().any(|v| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(v)) {
            return Err(Error::InvalidInput("ReliefF features must be scaled to [0, 1]".into()));
        }
    }
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut counts = vec![0usize; n_classes];
    for &c in labels {
        counts[c] += 1;
    }
    for (class, &have) in counts.iter().enumerate() {
        if have > 0 && have < k + 1 {
            return Err(Error::InsufficientInstances { class, have, need: k + 1 });
        }
    }
    let prior: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();

    let mut weights = vec![0.0; dim];
    let norm = (m * k) as f64;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(m);
    for i in 0..m {
        order.clear();
        order.extend((0..m).filter(|&j| j != i).map(|j| {
            let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).abs()).sum();
            (d, j)
        }));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let own = labels[i];
        let mut taken = vec![0usize; n_classes];
        for &(_, j) in order.iter() {
            let c = labels[j];
            if taken[c] == k {
                continue;
            }
            taken[c] += 1;
            let factor = if c == own {
                -1.0
            } else {
                prior[c] / (1.0 - prior[own])
            };
            for (w, (a, b)) in weights.iter_mut().zip(rows[i].iter().zip(&rows[j])) {
                *w += factor * (a - b).abs() / norm;
            }
            if taken.iter().zip(&counts).all(|(&t, &n)| t == k || n == 0) {
                break;
            }
        }
    }
    Ok(weights)
}

/// Keeps features whose weight exceeds `threshold`; if none does, keeps the
/// single highest-weighted one.
pub fn select_features(weights: &[f64], threshold: f64) -> Vec<bool> {
    let mut mask: Vec<bool> = weights.iter().map(|&w| w > threshold).collect();
    if !mask.iter().any(|&b| b) {
        if let Some((best, _)) = weights
            .iter()
            .enumerate()
            .fold(None::<(usize, f64)>, |acc, (i, &w)| match acc {
                Some((_, bw)) if bw >= w => acc,
                _ => Some((i, w)),
            })
        {
            mask[best] = true;
        }
    }
    mask
}
