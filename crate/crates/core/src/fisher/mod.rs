//! Fisherface features for partial-face images: PCA to a compact basis, then
//! LDA inside it.

mod lda;
mod pca;

use serde::{Deserialize, Serialize};

pub use lda::{fisher_criterion, fit_lda, scatter_matrices, LdaProjection, RIDGE_FACTOR};
pub use pca::{components_for_energy, fit_pca, EigenBasis, DEFAULT_ENERGY};

use crate::data::GrayImage;
use crate::linalg::Matrix;
use crate::{Error, Result, StageContext};

/// Pixel values are divided by this before PCA.
pub const PIXEL_SCALE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherModel {
    pub width: usize,
    pub height: usize,
    pub basis: EigenBasis,
    /// `p x d` LDA weights in PCA coordinates.
    pub w_lda: Matrix,
    pub lda_eigenvalues: Vec<f64>,
    pub class_count: usize,
}

impl FisherModel {
    pub fn output_dim(&self) -> usize {
        self.w_lda.cols
    }

    /// `w_lda' * components' * (x / 255 - mean)`.
    pub fn project(&self, image: &GrayImage) -> Result<Vec<f64>> {
        if image.width != self.width || image.height != self.height {
            return Err(Error::DimensionMismatch {
                expected: self.width * self.height,
                got: image.width * image.height,
            });
        }
        self.project_pixels(&image.pixels)
    }

    /// Projection of a flattened, unscaled (0-255) pixel vector.
    pub fn project_pixels(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scaled: Vec<f64> = pixels.iter().map(|v| v / PIXEL_SCALE).collect();
        let coords = self.basis.project(&scaled)?;
        Ok(lda_apply(&self.w_lda, &coords))
    }
}

fn lda_apply(w: &Matrix, coords: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.cols];
    for (i, c) in coords.iter().enumerate() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += w.get(i, j) * c;
        }
    }
    out
}

/// PCA (energy rule, capped at `N - C`) followed by LDA on the PCA coordinates.
/// `labels` are class indices.
pub fn fit_fisherface(images: &[GrayImage], labels: &[usize], energy: f64) -> Result<FisherModel> {
    let first = images.first().ok_or(Error::EmptyFrames)?;
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: images.len(), got: labels.len() });
    }
    let (width, height) = (first.width, first.height);
    if let Some(bad) = images.iter().find(|im| im.width != width || im.height != height) {
        return Err(Error::FrameDimensionMismatch {
            context: "fisherface training".into(),
            expected: (width, height),
            found: (bad.width, bad.height),
        });
    }
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    let cap = images.len().saturating_sub(present.len()).max(1);

    let rows: Vec<Vec<f64>> = images
        .iter()
        .map(|im| im.pixels.iter().map(|v| v / PIXEL_SCALE).collect())
        .collect();
    let basis = fit_pca(&rows, energy, Some(cap)).stage("fisherface pca")?;
    let projected: Vec<Vec<f64>> = rows.iter().map(|r| basis.project(r)).collect::<Result<_>>()?;
    let lda = fit_lda(&projected, labels).stage("fisherface lda")?;
    Ok(FisherModel {
        width,
        height,
        basis,
        w_lda: lda.weights,
        lda_eigenvalues: lda.eigenvalues,
        class_count: present.len(),
    })
}
