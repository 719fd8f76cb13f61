//! Physiological feature extraction and ReliefF selection.
//!
//! A window yields 25 values in a fixed order:
//!
//! | range | source |
//! |-------|--------|
//! | 0..6   | statistics of the raw EDA window |
//! | 6..12  | statistics of the raw PPG window |
//! | 12..20 | PPG acceleration and HRV (NN50, RMSSD, SDNN, SDDSD, VLF, LF, HF) |
//! | 20..25 | EDA responses (recovery ratio, SCSR/SCVSR counts and mean amplitudes) |

mod hrv;
mod relieff;
mod scr;
mod stats;

use serde::{Deserialize, Serialize};
use std::io::Write;

pub use hrv::{
    average_acceleration, interval_statistics, ppg_features, ppg_features_from_intervals, HrvTimeDomain,
    PPGFeatureSet,
};
pub use relieff::{relieff_weights, select_features, DEFAULT_NEIGHBORS};
pub use scr::{
    detect_scrs, eda_features, eda_features_with, EDAFeatureSet, EdaFilters, SCREvent, SCR_MIN_AMPLITUDE_US,
    SCR_RISE_RANGE_S,
};
pub use stats::{statistical_features, StatisticalFeatureSet};

use crate::data::{EmotionLabel, ObservationWindow};
use crate::{Error, Result, StageContext};

pub const PHYSIO_FEATURE_COUNT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChannelTag {
    Physio,
    Facial,
    Fused,
}

/// Named feature values for one observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub channel_tag: ChannelTag,
    pub trial_id: String,
    pub offset_s: f64,
    pub label: EmotionLabel,
}

impl FeatureVector {
    pub fn new(
        names: Vec<String>,
        values: Vec<f64>,
        channel_tag: ChannelTag,
        trial_id: impl Into<String>,
        offset_s: f64,
        label: EmotionLabel,
    ) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: names.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            names,
            values,
            channel_tag,
            trial_id: trial_id.into(),
            offset_s,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Names of the 25 physiological features, in vector order.
pub fn physio_feature_names() -> Vec<String> {
    let stat = |prefix: &str| {
        StatisticalFeatureSet::NAMES
            .iter()
            .map(move |n| format!("{prefix}_{n}"))
            .collect::<Vec<_>>()
    };
    let mut names = stat("eda");
    names.extend(stat("ppg"));
    names.extend(PPGFeatureSet::NAMES.iter().map(|s| s.to_string()));
    names.extend(EDAFeatureSet::NAMES.iter().map(|s| s.to_string()));
    names
}

/// The full 25-value physiological vector of a window.
pub fn physio_vector(window: &ObservationWindow) -> Result<FeatureVector> {
    physio_vector_with(window, &EdaFilters::default())
}

pub fn physio_vector_with(window: &ObservationWindow, filters: &EdaFilters) -> Result<FeatureVector> {
    let eda_stats = statistical_features(&window.eda_slice).stage("eda statistics")?;
    let ppg_stats = statistical_features(&window.ppg_slice).stage("ppg statistics")?;
    let ppg = ppg_features(&window.ppg_slice).stage("ppg features")?;
    let eda = eda_features_with(&window.eda_slice, filters).stage("eda features")?;
    let mut values = Vec::with_capacity(PHYSIO_FEATURE_COUNT);
    values.extend(eda_stats.values());
    values.extend(ppg_stats.values());
    values.extend(ppg.values());
    values.extend(eda.values());
    FeatureVector::new(
        physio_feature_names(),
        values,
        ChannelTag::Physio,
        window.trial_id.clone(),
        window.offset_s,
        window.label,
    )
}

/// Writes vectors as CSV: header is the feature names followed by `label`.
pub fn write_feature_csv<W: Write>(mut out: W, vectors: &[FeatureVector]) -> std::io::Result<()> {
    let Some(first) = vectors.first() else {
        return Ok(());
    };
    writeln!(out, "{},label", first.names.join(","))?;
    for v in vectors {
        for x in &v.values {
            write!(out, "{x},")?;
        }
        writeln!(out, "{}", v.label)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_five_unique_names() {
        let names = physio_feature_names();
        assert_eq!(names.len(), PHYSIO_FEATURE_COUNT);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), PHYSIO_FEATURE_COUNT);
        assert_eq!(names[0], "eda_mean");
        assert_eq!(names[6], "ppg_mean");
        assert_eq!(names[24], "eda_scvsr_mean_amp_us");
    }

    #[test]
    fn csv_layout() {
        let v = FeatureVector::new(
            vec!["a".into(), "b".into()],
            vec![1.5, -2.0],
            ChannelTag::Physio,
            "t",
            0.0,
            EmotionLabel::Lalv,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[v]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,label\n1.5,-2,LALV\n");
    }

    #[test]
    fn non_finite_rejected() {
        assert!(FeatureVector::new(vec!["a".into()], vec![f64::NAN], ChannelTag::Physio, "t", 0.0, EmotionLabel::Hahv)
            .is_err());
    }
}
