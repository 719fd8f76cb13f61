use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{canonical_order, floor_eigenvalues, log_sum_exp, sample_moments, weighted_moments, Gaussian};
use super::{group_by_class, Prediction};
use crate::seed::{derive, stage};
use crate::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 2;
pub const COVARIANCE_FLOOR: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-8;
pub const MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian>,
}

impl Mixture {
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(&self.components).map(|(w, g)| w.ln() + g.log_pdf(x)).collect();
        log_sum_exp(&terms)
    }
}

/// Result of one EM run, with the total log-likelihood before every M-step.
#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub mixture: Mixture,
    pub log_likelihood: Vec<f64>,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub classes: Vec<Mixture>,
    pub log_priors: Vec<f64>,
}

impl GmmModel {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let joint: Vec<f64> = self.classes.iter().zip(&self.log_priors).map(|(m, p)| m.log_pdf(x) + p).collect();
        let z = log_sum_exp(&joint);
        Prediction::from_scores(joint.iter().map(|j| j - z).collect())
    }
}

fn floored_gaussian(mean: Vec<f64>, cov: &DMatrix<f64>) -> Result<Gaussian> {
    Gaussian::new(mean, &floor_eigenvalues(cov, COVARIANCE_FLOOR))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by one hard assignment.
fn kmeanspp_init(rows: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Result<Mixture> {
    let n = rows.len();
    let mut centers: Vec<usize> = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[centers[0]])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, rows[next]));
        }
    }
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
    for r in rows {
        let best = (0..k)
            .min_by(|&a, &b| sq_dist(r, rows[centers[a]]).total_cmp(&sq_dist(r, rows[centers[b]])))
            .unwrap_or(0);
        members[best].push(r);
    }
    let (_, pooled) = sample_moments(rows);
    let mut weights = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    for (c, m) in centers.iter().zip(&members) {
        let (mean, cov) = if m.len() >= 2 {
            let (mu, cov) = sample_moments(m);
            (mu.iter().copied().collect(), cov)
        } else {
            (rows[*c].to_vec(), pooled.clone())
        };
        weights.push((m.len().max(1)) as f64);
        components.push(floored_gaussian(mean, &cov)?);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Mixture { weights, components })
}

/// EM for a full-covariance mixture. Every covariance has its eigenvalues
/// floored at [`COVARIANCE_FLOOR`]. A component whose weight falls below
/// [`MIN_WEIGHT`] causes a refit with a single component.
pub fn fit_mixture(rows: &[&[f64]], k: usize, seed: u64) -> Result<MixtureFit> {
    let dim = rows.first().map(|r| r.len()).ok_or_else(|| Error::InvalidInput("no rows".into()))?;
    if k == 0 {
        return Err(Error::InvalidInput("mixture needs at least one component".into()));
    }
    let n = rows.len();
    let rows = canonical_order(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mix = kmeanspp_init(&rows, k, &mut rng)?;
    let mut history = Vec::new();
    let mut resp = vec![vec![0.0; n]; k];
    for _ in 0..MAX_ITERATIONS {
        // E-step
        let mut ll = 0.0;
        let mut terms = vec![0.0; k];
        for (i, r) in rows.iter().enumerate() {
            for (j, t) in terms.iter_mut().enumerate() {
                *t = mix.weights[j].ln() + mix.components[j].log_pdf(r);
            }
            let z = log_sum_exp(&terms);
            ll += z;
            for j in 0..k {
                resp[j][i] = (terms[j] - z).exp();
            }
        }
        let converged = history.last().is_some_and(|&prev: &f64| ll - prev < TOLERANCE);
        history.push(ll);
        if converged {
            break;
        }
        // M-step
        let mut weights = Vec::with_capacity(k);
        let mut components = Vec::with_capacity(k);
        for r in &resp {
            let nk: f64 = r.iter().sum();
            if nk / (n as f64) < MIN_WEIGHT {
                if k == 1 {
                    return Err(Error::Numerical("single mixture component collapsed".into()));
                }
                let mut refit = fit_mixture(&rows, 1, seed)?;
                refit.pruned = true;
                return Ok(refit);
            }
            let (mean, cov) = weighted_moments(&rows, r);
            weights.push(nk / n as f64);
            components.push(floored_gaussian(mean.iter().copied().collect(), &cov)?);
        }
        mix = Mixture { weights, components };
    }
    debug_assert!(mix.components.iter().all(|g| g.dim() == dim));
    Ok(MixtureFit {
        mixture: mix,
        log_likelihood: history,
        pruned: false,
    })
}

/// Per-class mixtures with uniform priors. Each class needs at least
/// `n_components * (dim + 1)` rows.
pub fn train_gmm(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, n_components: usize, seed: u64) -> Result<GmmModel> {
    let groups = group_by_class(rows, labels, n_classes)?;
    let dim = rows[0].len();
    let need = n_components * (dim + 1);
    if let Some((class, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < need) {
        return Err(Error::InsufficientInstances { class, have: g.len(), need });
    }
    let classes = groups
        .iter()
        .enumerate()
        .map(|(c, g)| fit_mixture(g, n_components, derive(seed, stage::GMM, c as u64)).map(|f| f.mixture))
        .collect::<Result<Vec<_>>>()?;
    Ok(GmmModel {
        classes,
        log_priors: vec![-(n_classes as f64).ln(); n_classes],
    })
}

/// Like [`train_gmm`], but a class too small for `n_components` gets the
/// largest count it can support. A class too small even for one component is
/// modelled by a single Gaussian with its covariance shrunk 10% toward the
/// diagonal and floored.
pub fn train_gmm_reduced(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    n_components: usize,
    seed: u64,
) -> Result<GmmModel> {
    let groups = group_by_class(rows, labels, n_classes)?;
    let dim = rows[0].len();
    let classes = groups
        .iter()
        .enumerate()
        .map(|(c, g)| {
            let k = n_components.min(g.len() / (dim + 1));
            if k >= 1 {
                fit_mixture(g, k, derive(seed, stage::GMM, c as u64)).map(|f| f.mixture)
            } else {
                let (mean, cov) = sample_moments(&canonical_order(g));
                let diag = DMatrix::from_diagonal(&cov.diagonal());
                let shrunk = &cov * (1.0 - super::qda::QDA_SHRINKAGE) + diag * super::qda::QDA_SHRINKAGE;
                Ok(Mixture {
                    weights: vec![1.0],
                    components: vec![floored_gaussian(mean.iter().copied().collect(), &shrunk)?],
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GmmModel {
        classes,
        log_priors: vec![-(n_classes as f64).ln(); n_classes],
    })
}
