//! Systolic peak detection on PPG and peak-to-peak interval extraction.

use serde::{Deserialize, Serialize};

use crate::data::{Channel, SampleSeries};
use crate::{Error, Result};

/// Shortest physiologically accepted interval (240 bpm).
pub const MIN_INTERVAL_MS: f64 = 250.0;
/// Longest physiologically accepted interval (30 bpm).
pub const MAX_INTERVAL_MS: f64 = 2000.0;

const THRESHOLD_WINDOW_S: f64 = 2.0;
const THRESHOLD_STD_FACTOR: f64 = 0.5;
const REFRACTORY_S: f64 = 0.33;
const MIN_DURATION_S: f64 = 10.0;

/// Peak times and the successive intervals between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PPIntervals {
    pub peak_times_s: Vec<f64>,
    pub intervals_ms: Vec<f64>,
}

impl PPIntervals {
    pub fn from_peak_times(peak_times_s: Vec<f64>) -> Result<Self> {
        if peak_times_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("peak times must be strictly increasing".into()));
        }
        let intervals_ms = peak_times_s.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect();
        Ok(Self {
            peak_times_s,
            intervals_ms,
        })
    }

    /// Builds a peak train starting at `t0` from a list of intervals.
    pub fn from_intervals(t0: f64, intervals_ms: &[f64]) -> Result<Self> {
        let mut times = Vec::with_capacity(intervals_ms.len() + 1);
        times.push(t0);
        let mut t = t0;
        for iv in intervals_ms {
            t += iv / 1000.0;
            times.push(t);
        }
        let mut pp = Self::from_peak_times(times)?;
        // keep the caller's exact interval values rather than re-differenced ones
        pp.intervals_ms = intervals_ms.to_vec();
        Ok(pp)
    }
}

#[derive(Clone, Copy)]
struct Peak {
    index: usize,
    time_s: f64,
    height: f64,
}

/// Centered rolling mean and standard deviation over `2 * half + 1` samples,
/// truncated at the edges.
fn rolling_stats(x: &[f64], half: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let center = x.iter().sum::<f64>() / n as f64;
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, &v) in x.iter().enumerate() {
        let d = v - center;
        s1[i + 1] = s1[i] + d;
        s2[i + 1] = s2[i] + d * d;
    }
    let mut mean = Vec::with_capacity(n);
    let mut std = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let m = (hi - lo) as f64;
        let mu = (s1[hi] - s1[lo]) / m;
        let var = ((s2[hi] - s2[lo]) / m - mu * mu).max(0.0);
        mean.push(mu + center);
        std.push(var.sqrt());
    }
    (mean, std)
}

/// Locates systolic peaks: local maxima above a rolling `mean + 0.5 * std`
/// threshold (2 s window), thinned by a 330 ms refractory period that keeps the
/// higher of two close peaks. Peak times are refined by parabolic interpolation.
///
/// Intervals shorter than 250 ms are removed by merging their two peaks into
/// the higher one. Intervals longer than 2 s split the train, and only the
/// longest contiguous run of peaks is kept.
pub fn detect_pulse_peaks(ppg: &SampleSeries) -> Result<PPIntervals> {
    if ppg.channel != Channel::Ppg {
        return Err(Error::InvalidInput(format!("expected a PPG series, got {}", ppg.channel)));
    }
    let min_len = (MIN_DURATION_S * ppg.rate_hz).ceil() as usize;
    if ppg.len() < min_len {
        return Err(Error::TooShort { len: ppg.len(), min: min_len });
    }
    let x = &ppg.samples;
    let fs = ppg.rate_hz;
    let half = ((THRESHOLD_WINDOW_S * fs) / 2.0).round() as usize;
    let (mean, std) = rolling_stats(x, half);
    let refractory = (REFRACTORY_S * fs).round() as usize;

    let mut peaks: Vec<Peak> = Vec::new();
    for i in 1..x.len() - 1 {
        if !(x[i] > x[i - 1] && x[i] >= x[i + 1]) {
            continue;
        }
        if x[i] <= mean[i] + THRESHOLD_STD_FACTOR * std[i] {
            continue;
        }
        let curv = x[i - 1] - 2.0 * x[i] + x[i + 1];
        let delta = if curv < 0.0 {
            (0.5 * (x[i - 1] - x[i + 1]) / curv).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let cand = Peak {
            index: i,
            time_s: ppg.start_time_s + (i as f64 + delta) / fs,
            height: x[i],
        };
        match peaks.last_mut() {
            Some(last) if i - last.index < refractory => {
                if cand.height > last.height {
                    *last = cand;
                }
            }
            _ => peaks.push(cand),
        }
    }

    // merge too-short intervals
    let mut i = 0;
    while i + 1 < peaks.len() {
        if (peaks[i + 1].time_s - peaks[i].time_s) * 1000.0 < MIN_INTERVAL_MS {
            let drop = if peaks[i + 1].height > peaks[i].height { i } else { i + 1 };
            peaks.remove(drop);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }

    // keep the longest run free of over-long gaps
    let mut best = (0, 0);
    let mut start = 0;
    for j in 0..peaks.len() {
        let gap_breaks = j + 1 == peaks.len() || (peaks[j + 1].time_s - peaks[j].time_s) * 1000.0 > MAX_INTERVAL_MS;
        if gap_breaks {
            if j + 1 - start > best.1 - best.0 {
                best = (start, j + 1);
            }
            start = j + 1;
        }
    }
    let kept: Vec<f64> = peaks[best.0..best.1].iter().map(|p| p.time_s).collect();
    if kept.len() < 2 {
        return Err(Error::TooFewPeaks);
    }
    PPIntervals::from_peak_times(kept)
}
