use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierKind, ClassifierParams, DEFAULT_COMPONENTS, DEFAULT_K};
use crate::data::{EmotionLabel, Level, WindowParams};
use crate::fisher::DEFAULT_ENERGY;
use crate::physio::{EdaFilters, DEFAULT_NEIGHBORS};
use crate::seed::{derive, stage};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    FacialOnly,
    PhysioOnly,
    DecisionVote,
    FeatureFusion,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::FacialOnly, Mode::PhysioOnly, Mode::DecisionVote, Mode::FeatureFusion];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FacialOnly => "facial-only",
            Mode::PhysioOnly => "physio-only",
            Mode::DecisionVote => "decision-vote",
            Mode::FeatureFusion => "feature-fusion",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    Quadrant,
    Arousal,
    Valence,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Quadrant, Task::Arousal, Task::Valence];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Quadrant => "quadrant",
            Task::Arousal => "arousal",
            Task::Valence => "valence",
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::Quadrant => 4,
            Task::Arousal | Task::Valence => 2,
        }
    }

    /// Class index of a quadrant label under this task. Binary tasks map HIGH to 0.
    pub fn class_of(self, label: EmotionLabel) -> usize {
        let level = |l: Level| usize::from(l == Level::Low);
        match self {
            Task::Quadrant => label.index(),
            Task::Arousal => level(label.arousal()),
            Task::Valence => level(label.valence()),
        }
    }

    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Quadrant => EmotionLabel::ALL.iter().map(|l| l.as_str().to_string()).collect(),
            Task::Arousal | Task::Valence => vec!["HIGH".into(), "LOW".into()],
        }
    }

    pub fn chance_level(self) -> f64 {
        1.0 / self.n_classes() as f64
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.to_ascii_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown task '{s}'")))
    }
}

/// Everything that determines training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub mode: Mode,
    pub task: Task,
    /// Classifier on the fused PCA features.
    pub fusion_classifier: ClassifierKind,
    /// Classifier used by a trained single-channel system at prediction time.
    pub channel_classifier: ClassifierKind,
    pub knn_k: usize,
    pub gmm_components: usize,
    pub windows: WindowParams,
    pub filters: EdaFilters,
    pub relieff_k: usize,
    pub relieff_threshold: f64,
    /// Energy fraction for both the Fisherface and the fused PCA.
    pub pca_energy: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            mode: Mode::FeatureFusion,
            task: Task::Quadrant,
            fusion_classifier: ClassifierKind::Qda,
            channel_classifier: ClassifierKind::Qda,
            knn_k: DEFAULT_K,
            gmm_components: DEFAULT_COMPONENTS,
            windows: WindowParams::default(),
            filters: EdaFilters::default(),
            relieff_k: DEFAULT_NEIGHBORS,
            relieff_threshold: 0.0,
            pca_energy: DEFAULT_ENERGY,
            folds: 4,
            seed: 0,
        }
    }
}

impl FusionConfig {
    pub fn new(mode: Mode, task: Task, seed: u64) -> Self {
        Self {
            mode,
            task,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.knn_k == 0 || self.gmm_components == 0 || self.relieff_k == 0 {
            return Err(Error::InvalidInput("k, mixture components and ReliefF k must be positive".into()));
        }
        if !(self.pca_energy > 0.0 && self.pca_energy < 1.0) {
            return Err(Error::InvalidInput(format!("PCA energy must be in (0, 1), got {}", self.pca_energy)));
        }
        if self.folds < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !self.relieff_threshold.is_finite() {
            return Err(Error::InvalidInput("ReliefF threshold must be finite".into()));
        }
        Ok(())
    }

    /// Classifier parameters for one channel bank (`channel` 0 facial, 1 physio, 2 fused).
    pub(crate) fn classifier_params(&self, channel: u64) -> ClassifierParams {
        ClassifierParams {
            knn_k: self.knn_k,
            gmm_components: self.gmm_components,
            gmm_reduce: true,
            seed: derive(self.seed, stage::GMM, channel),
        }
    }
}
