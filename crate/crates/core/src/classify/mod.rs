//! QDA, Gaussian-mixture and nearest-neighbour classifiers over class indices.
//!
//! Classes are `0..n_classes`. Score ties resolve to the lowest index; for the
//! quadrant task that is the order HAHV, HALV, LALV, LAHV.

mod gaussian;
mod gmm;
mod knn;
mod qda;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gaussian::Gaussian;
pub use gmm::{
    fit_mixture, train_gmm, train_gmm_reduced, GmmModel, Mixture, MixtureFit, COVARIANCE_FLOOR, DEFAULT_COMPONENTS,
    MAX_ITERATIONS, MIN_WEIGHT, TOLERANCE,
};
pub use knn::{train_knn, train_knn_with, KnnModel, DEFAULT_K};
pub use qda::{train_qda, QdaModel, QDA_SHRINKAGE};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ClassifierKind {
    Qda,
    Gmm,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Qda, ClassifierKind::Gmm, ClassifierKind::Knn];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Qda => "QDA",
            ClassifierKind::Gmm => "GMM",
            ClassifierKind::Knn => "KNN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qda" => Ok(ClassifierKind::Qda),
            "gmm" => Ok(ClassifierKind::Gmm),
            "knn" => Ok(ClassifierKind::Knn),
            _ => Err(Error::InvalidInput(format!("unknown classifier '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    /// Log-posteriors (QDA, GMM) or vote fractions (KNN).
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Self {
            class: argmax(&scores),
            scores,
        }
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub knn_k: usize,
    pub gmm_components: usize,
    /// Reduce mixture components for classes too small to support them.
    pub gmm_reduce: bool,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            knn_k: DEFAULT_K,
            gmm_components: DEFAULT_COMPONENTS,
            gmm_reduce: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum ClassifierModel {
    Qda(QdaModel),
    Gmm(GmmModel),
    Knn(KnnModel),
}

impl ClassifierModel {
    pub fn train(
        kind: ClassifierKind,
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        params: &ClassifierParams,
    ) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Qda => ClassifierModel::Qda(train_qda(rows, labels, n_classes)?),
            ClassifierKind::Gmm if params.gmm_reduce => ClassifierModel::Gmm(train_gmm_reduced(
                rows,
                labels,
                n_classes,
                params.gmm_components,
                params.seed,
            )?),
            ClassifierKind::Gmm => {
                ClassifierModel::Gmm(train_gmm(rows, labels, n_classes, params.gmm_components, params.seed)?)
            }
            ClassifierKind::Knn => ClassifierModel::Knn(train_knn(rows, labels, n_classes, params.knn_k)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Qda(_) => ClassifierKind::Qda,
            ClassifierModel::Gmm(_) => ClassifierKind::Gmm,
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            ClassifierModel::Qda(m) => m.classes.len(),
            ClassifierModel::Gmm(m) => m.classes.len(),
            ClassifierModel::Knn(m) => m.n_classes,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ClassifierModel::Qda(m) => m.classes[0].dim(),
            ClassifierModel::Gmm(m) => m.classes[0].components[0].dim(),
            ClassifierModel::Knn(m) => m.points.first().map_or(0, Vec::len),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(match self {
            ClassifierModel::Qda(m) => m.predict(x),
            ClassifierModel::Gmm(m) => m.predict(x),
            ClassifierModel::Knn(m) => m.predict(x)?,
        })
    }
}

/// Rows grouped by label; every class in `0..n_classes` must be present.
pub(crate) fn group_by_class<'a>(rows: &'a [Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Vec<Vec<&'a [f64]>>> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
    }
    let dim = rows.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no training rows".into()))?;
    if dim == 0 {
        return Err(Error::InvalidInput("zero-dimensional features".into()));
    }
    let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); n_classes];
    for (r, &l) in rows.iter().zip(labels) {
        if r.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        groups
            .get_mut(l)
            .ok_or_else(|| Error::InvalidInput(format!("label {l} outside 0..{n_classes}")))?
            .push(r);
    }
    if let Some(c) = groups.iter().position(Vec::is_empty) {
        return Err(Error::MissingClass(c));
    }
    Ok(groups)
}
