use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FusionConfig, Mode};
use crate::classify::{ClassifierKind, ClassifierModel, Prediction};
use crate::data::{average_frame, slice_windows, EmotionLabel, GrayImage, SessionDataset};
use crate::fisher::{fit_fisherface, fit_pca, EigenBasis, FisherModel};
use crate::physio::{physio_vector_with, relieff_weights, select_features};
use crate::scale::{MinMaxScaler, ZScore};
use crate::{Error, Result, StageContext};

pub const FORMAT_VERSION: u32 = 1;

/// Features of one observation window before any training-set statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedWindow {
    pub trial_id: String,
    pub offset_s: f64,
    pub label: EmotionLabel,
    /// The 25 raw physiological features.
    pub physio: Vec<f64>,
    pub image: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedWindow {
    pub trial_id: String,
    pub offset_s: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub windows: Vec<ExtractedWindow>,
    pub rejected: Vec<RejectedWindow>,
}

/// Slices every trial and extracts physiological vectors and averaged
/// images. Windows whose physiological extraction fails are listed as
/// rejected; slicing errors abort. Output order follows trial then offset.
pub fn extract_dataset(dataset: &SessionDataset, config: &FusionConfig) -> Result<Extraction> {
    let per_trial: Vec<Vec<std::result::Result<ExtractedWindow, RejectedWindow>>> = dataset
        .trials
        .par_iter()
        .map(|trial| {
            let windows = slice_windows(trial, &config.windows).stage("window slicing")?;
            windows
                .iter()
                .map(|w| {
                    let image = average_frame(w).stage("frame averaging")?;
                    Ok(match physio_vector_with(w, &config.filters) {
                        Ok(v) => Ok(ExtractedWindow {
                            trial_id: w.trial_id.clone(),
                            offset_s: w.offset_s,
                            label: w.label,
                            physio: v.values,
                            image,
                        }),
                        Err(e) => Err(RejectedWindow {
                            trial_id: w.trial_id.clone(),
                            offset_s: w.offset_s,
                            reason: e.to_string(),
                        }),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Extraction::default();
    for r in per_trial.into_iter().flatten() {
        match r {
            Ok(w) => out.windows.push(w),
            Err(r) => out.rejected.push(r),
        }
    }
    Ok(out)
}

/// QDA, GMM and KNN trained on one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBank {
    pub qda: ClassifierModel,
    pub gmm: ClassifierModel,
    pub knn: ClassifierModel,
}

impl ChannelBank {
    fn train(rows: &[Vec<f64>], labels: &[usize], config: &FusionConfig, channel: u64) -> Result<Self> {
        let n = config.task.n_classes();
        let params = config.classifier_params(channel);
        let train = |k| ClassifierModel::train(k, rows, labels, n, &params);
        Ok(Self {
            qda: train(ClassifierKind::Qda)?,
            gmm: train(ClassifierKind::Gmm)?,
            knn: train(ClassifierKind::Knn)?,
        })
    }

    pub fn get(&self, kind: ClassifierKind) -> &ClassifierModel {
        match kind {
            ClassifierKind::Qda => &self.qda,
            ClassifierKind::Gmm => &self.gmm,
            ClassifierKind::Knn => &self.knn,
        }
    }
}

/// Statistics and model of the feature-level fusion path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedStage {
    pub facial_z: ZScore,
    pub physio_z: ZScore,
    pub pca: EigenBasis,
    pub model: ClassifierModel,
}

impl FusedStage {
    /// z-scored facial features followed by z-scored physiological features.
    pub fn concatenate(&self, facial: &[f64], physio: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.facial_z.transform(facial)?;
        v.extend(self.physio_z.transform(physio)?);
        Ok(v)
    }

    pub fn features(&self, facial: &[f64], physio: &[f64]) -> Result<Vec<f64>> {
        self.pca.project(&self.concatenate(facial, physio)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSystem {
    pub format_version: u32,
    pub config: FusionConfig,
    pub fisher: FisherModel,
    pub physio_scaler: MinMaxScaler,
    pub relieff_weights: Vec<f64>,
    pub relieff_mask: Vec<bool>,
    pub facial: ChannelBank,
    pub physio: ChannelBank,
    pub fused: Option<FusedStage>,
}

/// Per-window inputs of every classifier in a trained system.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    pub facial: Vec<f64>,
    pub physio: Vec<f64>,
}

/// Channel-classifier order used for decision voting; earlier entries take
/// priority when counts tie.
pub const VOTE_ORDER: [(Channel, ClassifierKind); 6] = [
    (Channel::Facial, ClassifierKind::Qda),
    (Channel::Facial, ClassifierKind::Gmm),
    (Channel::Facial, ClassifierKind::Knn),
    (Channel::Physio, ClassifierKind::Qda),
    (Channel::Physio, ClassifierKind::Gmm),
    (Channel::Physio, ClassifierKind::Knn),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Channel {
    Facial,
    Physio,
}

/// Decision-level fusion of six votes given in [`VOTE_ORDER`]. The most
/// frequent label wins; among tied labels, facial votes are counted alone,
/// and a remaining tie goes to the earliest voter in priority order.
pub fn vote(votes: &[usize; 6], n_classes: usize) -> usize {
    let count = |range: std::ops::Range<usize>, c: usize| votes[range].iter().filter(|&&v| v == c).count();
    let all: Vec<usize> = (0..n_classes).map(|c| count(0..6, c)).collect();
    let top = *all.iter().max().unwrap_or(&0);
    let tied: Vec<usize> = (0..n_classes).filter(|&c| all[c] == top).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let facial: Vec<usize> = tied.iter().map(|&c| count(0..3, c)).collect();
    let ftop = *facial.iter().max().unwrap_or(&0);
    let narrowed: Vec<usize> = tied.iter().zip(&facial).filter(|(_, &f)| f == ftop).map(|(&c, _)| c).collect();
    if narrowed.len() == 1 {
        return narrowed[0];
    }
    votes.iter().copied().find(|v| narrowed.contains(v)).unwrap_or(narrowed[0])
}

impl TrainedSystem {
    pub fn bank(&self, channel: Channel) -> &ChannelBank {
        match channel {
            Channel::Facial => &self.facial,
            Channel::Physio => &self.physio,
        }
    }

    /// Min-max scaled, ReliefF-selected physiological features.
    pub fn physio_features(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let scaled = self.physio_scaler.transform(raw)?;
        Ok(scaled
            .into_iter()
            .zip(&self.relieff_mask)
            .filter(|(_, &keep)| keep)
            .map(|(v, _)| v)
            .collect())
    }

    pub fn window_features(&self, window: &ExtractedWindow) -> Result<WindowFeatures> {
        Ok(WindowFeatures {
            facial: self.fisher.project(&window.image)?,
            physio: self.physio_features(&window.physio)?,
        })
    }

    pub fn predict_channel(&self, channel: Channel, kind: ClassifierKind, f: &WindowFeatures) -> Result<Prediction> {
        let x = match channel {
            Channel::Facial => &f.facial,
            Channel::Physio => &f.physio,
        };
        self.bank(channel).get(kind).predict(x)
    }

    /// The six channel votes in [`VOTE_ORDER`].
    pub fn votes(&self, f: &WindowFeatures) -> Result<[usize; 6]> {
        let mut out = [0; 6];
        for (o, &(ch, kind)) in out.iter_mut().zip(&VOTE_ORDER) {
            *o = self.predict_channel(ch, kind, f)?.class;
        }
        Ok(out)
    }

    pub fn predict_decision_vote(&self, f: &WindowFeatures) -> Result<Prediction> {
        let votes = self.votes(f)?;
        let n = self.config.task.n_classes();
        let scores = (0..n).map(|c| votes.iter().filter(|&&v| v == c).count() as f64 / 6.0).collect();
        Ok(Prediction {
            class: vote(&votes, n),
            scores,
        })
    }

    pub fn predict_feature_fusion(&self, f: &WindowFeatures) -> Result<Prediction> {
        let fused = self
            .fused
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("system has no feature-fusion stage".into()))?;
        fused.model.predict(&fused.features(&f.facial, &f.physio)?)
    }

    /// Prediction under the configured mode. Single-channel modes use
    /// `config.channel_classifier`.
    pub fn predict(&self, window: &ExtractedWindow) -> Result<Prediction> {
        let f = self.window_features(window)?;
        match self.config.mode {
            Mode::FacialOnly => self.predict_channel(Channel::Facial, self.config.channel_classifier, &f),
            Mode::PhysioOnly => self.predict_channel(Channel::Physio, self.config.channel_classifier, &f),
            Mode::DecisionVote => self.predict_decision_vote(&f),
            Mode::FeatureFusion => self.predict_feature_fusion(&f),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("trained system", e))
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(context, e))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::parse(context, "missing format_version"))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                supported: FORMAT_VERSION,
            });
        }
        let system: TrainedSystem = serde_json::from_value(value).map_err(|e| Error::parse(context, e))?;
        system.check_consistency().map_err(|m| Error::parse(context, m))?;
        Ok(system)
    }

    fn check_consistency(&self) -> std::result::Result<(), String> {
        let raw = self.physio_scaler.min.len();
        if self.physio_scaler.max.len() != raw || self.relieff_mask.len() != raw || self.relieff_weights.len() != raw {
            return Err("physiological scaler, weights and mask disagree in length".into());
        }
        let selected = self.relieff_mask.iter().filter(|&&b| b).count();
        let f = &self.fisher;
        if !f.basis.components.is_consistent()
            || !f.w_lda.is_consistent()
            || f.basis.components.rows != f.width * f.height
            || f.basis.mean.len() != f.width * f.height
            || f.w_lda.rows != f.basis.components.cols
        {
            return Err("fisherface matrices are inconsistent".into());
        }
        let d = f.w_lda.cols;
        for kind in ClassifierKind::ALL {
            if self.facial.get(kind).dim() != d || self.physio.get(kind).dim() != selected {
                return Err(format!("{kind} channel model dimension mismatch"));
            }
        }
        if let Some(fs) = &self.fused {
            if fs.facial_z.mean.len() != d
                || fs.physio_z.mean.len() != selected
                || fs.pca.dim() != d + selected
                || !fs.pca.components.is_consistent()
                || fs.model.dim() != fs.pca.n_components()
            {
                return Err("fused stage dimensions are inconsistent".into());
            }
        }
        Ok(())
    }
}

pub fn save_system(system: &TrainedSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, system.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_system(path: impl AsRef<Path>) -> Result<TrainedSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedSystem::from_json(&text, &path.display().to_string())
}

/// Full pipeline on a session: extraction followed by [`train_on_windows`].
pub fn train_system(dataset: &SessionDataset, config: &FusionConfig) -> Result<TrainedSystem> {
    let ext = extract_dataset(dataset, config)?;
    let refs: Vec<&ExtractedWindow> = ext.windows.iter().collect();
    train_on_windows(&refs, config)
}

fn check_trials_per_class(windows: &[&ExtractedWindow], config: &FusionConfig) -> Result<()> {
    let n = config.task.n_classes();
    let mut trials: Vec<Vec<&str>> = vec![Vec::new(); n];
    for w in windows {
        let t = &mut trials[config.task.class_of(w.label)];
        if !t.contains(&w.trial_id.as_str()) {
            t.push(&w.trial_id);
        }
    }
    if let Some((class, t)) = trials.iter().enumerate().find(|(_, t)| t.len() < 2) {
        return Err(Error::InsufficientInstances {
            class,
            have: t.len(),
            need: 2,
        });
    }
    Ok(())
}

/// Fits every statistic and model on the given windows only.
pub fn train_on_windows(windows: &[&ExtractedWindow], config: &FusionConfig) -> Result<TrainedSystem> {
    config.validate()?;
    check_trials_per_class(windows, config).stage("class balance")?;
    let labels: Vec<usize> = windows.iter().map(|w| config.task.class_of(w.label)).collect();

    let raw: Vec<Vec<f64>> = windows.iter().map(|w| w.physio.clone()).collect();
    let physio_scaler = MinMaxScaler::fit(&raw).stage("min-max scaling")?;
    let scaled: Vec<Vec<f64>> = raw.iter().map(|r| physio_scaler.transform(r)).collect::<Result<_>>()?;
    let weights = relieff_weights(&scaled, &labels, config.relieff_k).stage("relieff")?;
    let mask = select_features(&weights, config.relieff_threshold);
    let physio_rows: Vec<Vec<f64>> = scaled
        .iter()
        .map(|r| r.iter().zip(&mask).filter(|(_, &k)| k).map(|(v, _)| *v).collect())
        .collect();

    let images: Vec<GrayImage> = windows.iter().map(|w| w.image.clone()).collect();
    let fisher = fit_fisherface(&images, &labels, config.pca_energy).stage("fisherface")?;
    let facial_rows: Vec<Vec<f64>> = images.iter().map(|im| fisher.project(im)).collect::<Result<_>>()?;

    let facial = ChannelBank::train(&facial_rows, &labels, config, 0).stage("facial classifiers")?;
    let physio = ChannelBank::train(&physio_rows, &labels, config, 1).stage("physio classifiers")?;

    let fused = if config.mode == Mode::FeatureFusion {
        let facial_z = ZScore::fit(&facial_rows)?;
        let physio_z = ZScore::fit(&physio_rows)?;
        let concat: Vec<Vec<f64>> = facial_rows
            .iter()
            .zip(&physio_rows)
            .map(|(f, p)| {
                let mut v = facial_z.transform(f)?;
                v.extend(physio_z.transform(p)?);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let pca = fit_pca(&concat, config.pca_energy, None).stage("fusion pca")?;
        let rows: Vec<Vec<f64>> = concat.iter().map(|v| pca.project(v)).collect::<Result<_>>()?;
        let model = ClassifierModel::train(
            config.fusion_classifier,
            &rows,
            &labels,
            config.task.n_classes(),
            &config.classifier_params(2),
        )
        .stage("fusion classifier")?;
        Some(FusedStage {
            facial_z,
            physio_z,
            pca,
            model,
        })
    } else {
        None
    };

    Ok(TrainedSystem {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        fisher,
        physio_scaler,
        relieff_weights: weights,
        relieff_mask: mask,
        facial,
        physio,
        fused,
    })
}
