//! Skin-conductance response detection on low-passed EDA.

use serde::{Deserialize, Serialize};

use crate::data::SampleSeries;
use crate::dsp::{lowpass, FilterSpec, SCSR_CUTOFF_HZ, SCVSR_CUTOFF_HZ};
use crate::Result;

/// Minimum trough-to-peak rise of a response, in microsiemens.
pub const SCR_MIN_AMPLITUDE_US: f64 = 0.01;
/// Accepted trough-to-peak rise time, in seconds.
pub const SCR_RISE_RANGE_S: (f64, f64) = (0.5, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCREvent {
    pub onset_s: f64,
    pub peak_s: f64,
    pub amplitude_us: f64,
    /// Peak to half-amplitude recovery, clamped at the end of the input.
    pub recovery_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Swing {
    Unknown,
    Rising,
    Falling,
}

/// Trough/peak pairs of a hysteresis (zig-zag) pass: an extremum is confirmed
/// once the signal has moved `threshold` away from it.
fn turning_points(y: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut state = Swing::Unknown;
    for i in 1..y.len() {
        match state {
            Swing::Unknown => {
                // `<=` places the trough at the last sample before the rise
                if y[i] <= y[lo] {
                    lo = i;
                }
                if y[i] > y[hi] {
                    hi = i;
                }
                if y[i] - y[lo] >= threshold {
                    state = Swing::Rising;
                    hi = i;
                } else if y[hi] - y[i] >= threshold {
                    state = Swing::Falling;
                    lo = i;
                }
            }
            Swing::Rising => {
                if y[i] > y[hi] {
                    hi = i;
                } else if y[hi] - y[i] >= threshold {
                    pairs.push((lo, hi));
                    state = Swing::Falling;
                    lo = i;
                }
            }
            Swing::Falling => {
                if y[i] <= y[lo] {
                    lo = i;
                } else if y[i] - y[lo] >= threshold {
                    state = Swing::Rising;
                    hi = i;
                }
            }
        }
    }
    // a rise that has peaked inside the window but not yet fallen back
    if state == Swing::Rising && hi + 1 < y.len() && y[hi] - y[lo] >= threshold {
        pairs.push((lo, hi));
    }
    pairs
}

/// The latest local minimum strictly between `lo` and `hi`, or `lo` if the
/// rise is monotone. Sub-threshold dips on a drifting baseline do not end a
/// hysteresis swing, but the response still starts at the last one.
fn last_local_minimum(y: &[f64], lo: usize, hi: usize) -> usize {
    (lo + 1..hi)
        .rev()
        .find(|&j| y[j] <= y[j - 1] && y[j] < y[j + 1])
        .unwrap_or(lo)
}

/// Detects responses as trough-to-peak rises of at least 0.01 µS lasting
/// 0.5 to 10 s. Rises whose trough is the first sample are not counted, since
/// their onset precedes the window.
pub fn detect_scrs(filtered_eda: &SampleSeries) -> Vec<SCREvent> {
    let y = &filtered_eda.samples;
    let fs = filtered_eda.rate_hz;
    let t = |i: usize| filtered_eda.start_time_s + i as f64 / fs;
    let end_s = t(y.len().saturating_sub(1));
    turning_points(y, SCR_MIN_AMPLITUDE_US)
        .into_iter()
        .map(|(lo, hi)| (last_local_minimum(y, lo, hi), hi))
        .filter(|&(lo, _)| lo > 0)
        .filter_map(|(lo, hi)| {
            let amplitude = y[hi] - y[lo];
            let rise = (hi - lo) as f64 / fs;
            if amplitude < SCR_MIN_AMPLITUDE_US || rise < SCR_RISE_RANGE_S.0 || rise > SCR_RISE_RANGE_S.1 {
                return None;
            }
            let half = y[hi] - amplitude / 2.0;
            let recovery_s = match (hi + 1..y.len()).find(|&i| y[i] <= half) {
                Some(i) => {
                    // linear interpolation between the samples straddling the crossing
                    let frac = (y[i - 1] - half) / (y[i - 1] - y[i]);
                    (i - 1 - hi) as f64 / fs + frac / fs
                }
                None => end_s - t(hi),
            };
            Some(SCREvent {
                onset_s: t(lo),
                peak_s: t(hi),
                amplitude_us: amplitude,
                recovery_s,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EDAFeatureSet {
    pub scsr_recovery_ratio: f64,
    pub scsr_count: usize,
    pub scvsr_count: usize,
    pub scsr_mean_amp_us: f64,
    pub scvsr_mean_amp_us: f64,
}

impl EDAFeatureSet {
    pub const NAMES: [&'static str; 5] = [
        "eda_scsr_recovery_ratio",
        "eda_scsr_count",
        "eda_scvsr_count",
        "eda_scsr_mean_amp_us",
        "eda_scvsr_mean_amp_us",
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.scsr_recovery_ratio,
            self.scsr_count as f64,
            self.scvsr_count as f64,
            self.scsr_mean_amp_us,
            self.scvsr_mean_amp_us,
        ]
    }
}

/// Cutoffs of the two response streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaFilters {
    pub scsr: FilterSpec,
    pub scvsr: FilterSpec,
}

impl Default for EdaFilters {
    fn default() -> Self {
        Self {
            scsr: FilterSpec::lowpass(SCSR_CUTOFF_HZ),
            scvsr: FilterSpec::lowpass(SCVSR_CUTOFF_HZ),
        }
    }
}

pub fn eda_features(window_eda: &SampleSeries) -> Result<EDAFeatureSet> {
    eda_features_with(window_eda, &EdaFilters::default())
}

pub fn eda_features_with(window_eda: &SampleSeries, filters: &EdaFilters) -> Result<EDAFeatureSet> {
    let scsr = detect_scrs(&lowpass(window_eda, &filters.scsr)?);
    let scvsr = detect_scrs(&lowpass(window_eda, &filters.scvsr)?);
    let mean_amp = |ev: &[SCREvent]| {
        if ev.is_empty() {
            0.0
        } else {
            ev.iter().map(|e| e.amplitude_us).sum::<f64>() / ev.len() as f64
        }
    };
    let recovery: f64 = scsr.iter().map(|e| e.recovery_s).sum();
    Ok(EDAFeatureSet {
        scsr_recovery_ratio: (recovery / window_eda.duration_s()).clamp(0.0, 1.0),
        scsr_count: scsr.len(),
        scvsr_count: scvsr.len(),
        scsr_mean_amp_us: mean_amp(&scsr),
        scvsr_mean_amp_us: mean_amp(&scvsr),
    })
}
