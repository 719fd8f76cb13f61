//! Emotion recognition from a glasses-type wearable: skin conductance (EDA),
//! photoplethysmogram (PPG) and partial-face camera frames.
//!
//! The pipeline cuts each stimulus trial into overlapping observation windows,
//! extracts statistical and domain features from the physiological channels,
//! keeps the ReliefF-relevant ones, projects window-averaged face images through
//! a Fisherface (PCA + LDA) model, and classifies with QDA, a two-component GMM
//! and KNN per channel. Channels are combined either by facial-priority voting
//! or by concatenating features and reducing them with PCA.
//!
//! [`synth`] generates sessions with known ground truth for every stage.

pub mod classify;
pub mod data;
pub mod dsp;
mod error;
pub mod fisher;
pub mod fusion;
pub mod io;
mod linalg;
pub mod physio;
pub mod scale;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub(crate) use error::StageContext;
