//! Pulse-derived features: waveform acceleration and heart-rate variability.

use serde::{Deserialize, Serialize};

use super::stats::{mean, mean_abs_diff, sample_std};
use crate::data::SampleSeries;
use crate::dsp::{self, band_power, PPIntervals, HF_BAND, LF_BAND, VLF_BAND};
use crate::{Error, Result};

const NN50_THRESHOLD_MS: f64 = 50.0;
const MIN_INTERVALS: usize = 8;

/// Time-domain variability of a peak-to-peak interval sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvTimeDomain {
    /// Successive differences strictly greater than 50 ms in magnitude.
    pub nn50: usize,
    pub rmssd_ms: f64,
    pub sdnn_ms: f64,
    /// Sample standard deviation of successive differences.
    pub sddsd_ms: f64,
}

pub fn interval_statistics(intervals_ms: &[f64]) -> Result<HrvTimeDomain> {
    if intervals_ms.len() < 2 {
        return Err(Error::TooShort { len: intervals_ms.len(), min: 2 });
    }
    let diffs: Vec<f64> = intervals_ms.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(HrvTimeDomain {
        nn50: diffs.iter().filter(|d| d.abs() > NN50_THRESHOLD_MS).count(),
        rmssd_ms: (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
        sdnn_ms: sample_std(intervals_ms),
        sddsd_ms: sample_std(&diffs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PPGFeatureSet {
    pub avg_acceleration: f64,
    pub nn50: f64,
    pub rmssd_ms: f64,
    pub sdnn_ms: f64,
    pub sddsd_ms: f64,
    pub vlf: f64,
    pub lf: f64,
    pub hf: f64,
}

impl PPGFeatureSet {
    pub const NAMES: [&'static str; 8] = [
        "ppg_avg_acceleration",
        "ppg_nn50",
        "ppg_rmssd_ms",
        "ppg_sdnn_ms",
        "ppg_sddsd_ms",
        "ppg_vlf",
        "ppg_lf",
        "ppg_hf",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.avg_acceleration,
            self.nn50,
            self.rmssd_ms,
            self.sdnn_ms,
            self.sddsd_ms,
            self.vlf,
            self.lf,
            self.hf,
        ]
    }
}

/// Mean |second difference| of the z-normalized waveform.
pub fn average_acceleration(ppg: &SampleSeries) -> Result<f64> {
    let x = &ppg.samples;
    if x.len() < 3 {
        return Err(Error::TooShort { len: x.len(), min: 3 });
    }
    let sd = sample_std(x);
    if sd == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let m = mean(x);
    let z: Vec<f64> = x.iter().map(|v| (v - m) / sd).collect();
    Ok(mean_abs_diff(&z, 2))
}

/// Features from already-extracted intervals plus the raw waveform.
pub fn ppg_features_from_intervals(ppg: &SampleSeries, pp: &PPIntervals) -> Result<PPGFeatureSet> {
    if pp.intervals_ms.len() < MIN_INTERVALS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_INTERVALS} pulse intervals, found {}",
            pp.intervals_ms.len()
        )));
    }
    let td = interval_statistics(&pp.intervals_ms)?;
    let psd = dsp::pp_psd(pp)?;
    Ok(PPGFeatureSet {
        avg_acceleration: average_acceleration(ppg)?,
        nn50: td.nn50 as f64,
        rmssd_ms: td.rmssd_ms,
        sdnn_ms: td.sdnn_ms,
        sddsd_ms: td.sddsd_ms,
        vlf: band_power(&psd, VLF_BAND.0, VLF_BAND.1).value,
        lf: band_power(&psd, LF_BAND.0, LF_BAND.1).value,
        hf: band_power(&psd, HF_BAND.0, HF_BAND.1).value,
    })
}

pub fn ppg_features(window_ppg: &SampleSeries) -> Result<PPGFeatureSet> {
    let pp = dsp::detect_pulse_peaks(window_ppg)?;
    ppg_features_from_intervals(window_ppg, &pp)
}
