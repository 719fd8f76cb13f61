use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Channel, SampleSeries};
use crate::{Error, Result};

/// Bateman time constants (s).
pub const SCR_TAU1_S: f64 = 0.75;
pub const SCR_TAU2_S: f64 = 4.0;
/// Minimum spacing between planted SCR onsets (s).
pub const SCR_MIN_SPACING_S: f64 = 5.0;

const PULSE_RISE_S: f64 = 0.12;
const PULSE_DECAY_S: f64 = 0.25;
const DRIFT_FREQ_HZ: f64 = 0.005;

/// Class-conditional physiological parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysioProfile {
    pub hr_bpm: f64,
    /// Amplitude of the sinusoidal interval modulation (ms).
    pub hrv_depth_ms: f64,
    pub hrv_freq_hz: f64,
    /// Standard deviation of white jitter added to every interval (ms).
    pub beat_jitter_ms: f64,
    pub scr_rate_per_min: f64,
    /// Peak amplitude of each planted response (µS).
    pub scr_amplitude_us: f64,
    pub tonic_us: f64,
    /// Total tonic ramp over the trial (µS), sign drawn per trial.
    pub tonic_ramp_us: f64,
    /// Amplitude of the 0.005 Hz tonic oscillation (µS).
    pub tonic_wave_us: f64,
}

impl PhysioProfile {
    pub fn validate(&self) -> Result<()> {
        if !(40.0..=180.0).contains(&self.hr_bpm) {
            return Err(Error::InvalidInput(format!("mean HR {} bpm outside [40, 180]", self.hr_bpm)));
        }
        let nonneg = [
            ("hrv_depth_ms", self.hrv_depth_ms),
            ("hrv_freq_hz", self.hrv_freq_hz),
            ("beat_jitter_ms", self.beat_jitter_ms),
            ("scr_rate_per_min", self.scr_rate_per_min),
            ("scr_amplitude_us", self.scr_amplitude_us),
            ("tonic_ramp_us", self.tonic_ramp_us),
            ("tonic_wave_us", self.tonic_wave_us),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.tonic_us.is_finite() {
            return Err(Error::InvalidInput("tonic level must be finite".into()));
        }
        if self.hrv_depth_ms >= 60_000.0 / self.hr_bpm - crate::dsp::MIN_INTERVAL_MS {
            return Err(Error::InvalidInput("HRV depth too large for the heart rate".into()));
        }
        Ok(())
    }
}

/// Beats emitted by [`synth_ppg`]: pulse peak times and the intervals between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBeats {
    pub beat_times_s: Vec<f64>,
    pub intervals_ms: Vec<f64>,
}

/// A planted Bateman response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedScr {
    pub onset_s: f64,
    pub peak_s: f64,
    pub amplitude_us: f64,
    pub tau1_s: f64,
    pub tau2_s: f64,
}

impl PlantedScr {
    /// Time from peak to half amplitude on the noiseless, isolated pulse.
    pub fn half_recovery_s(&self) -> f64 {
        bateman_half_recovery(self.tau1_s, self.tau2_s)
    }
}

fn bateman_shape(t: f64, tau1: f64, tau2: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-t / tau2).exp() - (-t / tau1).exp()
    }
}

/// Time of the maximum of `exp(-t/tau2) - exp(-t/tau1)`.
pub fn bateman_peak_time(tau1: f64, tau2: f64) -> f64 {
    (tau2 / tau1).ln() * tau1 * tau2 / (tau2 - tau1)
}

pub fn bateman_peak_value(tau1: f64, tau2: f64) -> f64 {
    bateman_shape(bateman_peak_time(tau1, tau2), tau1, tau2)
}

/// Peak-to-half-amplitude time of the Bateman pulse, by bisection.
pub fn bateman_half_recovery(tau1: f64, tau2: f64) -> f64 {
    let tp = bateman_peak_time(tau1, tau2);
    let half = 0.5 * bateman_peak_value(tau1, tau2);
    let (mut lo, mut hi) = (tp, tp + 20.0 * tau2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bateman_shape(mid, tau1, tau2) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) - tp
}

fn rms_about_mean(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Adds white noise so that RMS(planted - mean) / RMS(noise) = `snr`. With
/// `snr == 0` the planted variation is replaced by noise of the same RMS;
/// an infinite `snr` adds nothing.
pub(crate) fn apply_snr(planted: &mut [f64], snr: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::InvalidInput(format!("SNR must be >= 0, got {snr}")));
    }
    if snr.is_infinite() || planted.is_empty() {
        return Ok(());
    }
    let rms = rms_about_mean(planted);
    let sd = if snr == 0.0 { rms } else { rms / snr };
    if snr == 0.0 {
        let m = planted.iter().sum::<f64>() / planted.len() as f64;
        planted.iter_mut().for_each(|v| *v = m);
    }
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for v in planted.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    Ok(())
}

/// PPG with beats spaced `60000/HR + depth * sin(2 pi f t) + jitter` ms.
/// Each beat is a raised-cosine rise peaking at the beat time followed by an
/// exponential decay.
pub fn synth_ppg(
    profile: &PhysioProfile,
    duration_s: f64,
    rate_hz: f64,
    snr: f64,
    seed: u64,
) -> Result<(SampleSeries, PlantedBeats)> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_ms = 60_000.0 / profile.hr_bpm;
    let jitter = Normal::new(0.0, profile.beat_jitter_ms).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let phase = rng.random::<f64>() * std::f64::consts::TAU;

    // first beat somewhere in the first interval, far enough in for a full rise
    let mut t = PULSE_RISE_S + rng.random::<f64>() * base_ms / 1000.0;
    let mut beats = Vec::new();
    let mut intervals = Vec::new();
    while t < duration_s {
        beats.push(t);
        let mut iv = base_ms + profile.hrv_depth_ms * (std::f64::consts::TAU * profile.hrv_freq_hz * t + phase).sin();
        if profile.beat_jitter_ms > 0.0 {
            iv += jitter.sample(&mut rng);
        }
        let iv = iv.max(crate::dsp::MIN_INTERVAL_MS + 1.0);
        if t + iv / 1000.0 < duration_s {
            intervals.push(iv);
        }
        t += iv / 1000.0;
    }

    let n = (duration_s * rate_hz).round() as usize;
    let mut y = vec![0.0; n];
    let tail = (PULSE_DECAY_S * 12.0 * rate_hz) as usize;
    for &b in &beats {
        let start = ((b - PULSE_RISE_S) * rate_hz).floor().max(0.0) as usize;
        let end = (((b * rate_hz).ceil() as usize) + tail).min(n);
        for (i, v) in y.iter_mut().enumerate().take(end).skip(start) {
            let dt = i as f64 / rate_hz - b;
            *v += if dt <= -PULSE_RISE_S {
                0.0
            } else if dt <= 0.0 {
                0.5 * (1.0 - (std::f64::consts::PI * (dt + PULSE_RISE_S) / PULSE_RISE_S).cos())
            } else {
                (-dt / PULSE_DECAY_S).exp()
            };
        }
    }
    apply_snr(&mut y, snr, &mut rng)?;
    let series = SampleSeries::new(Channel::Ppg, rate_hz, y, 0.0)?;
    Ok((
        series,
        PlantedBeats {
            beat_times_s: beats,
            intervals_ms: intervals,
        },
    ))
}

/// Onsets with exponential gaps beyond a 5 s minimum spacing, averaging
/// `rate_per_min`.
fn scr_onsets(rate_per_min: f64, duration_s: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if rate_per_min <= 0.0 {
        return Vec::new();
    }
    let mean_gap = 60.0 / rate_per_min;
    let extra = (mean_gap - SCR_MIN_SPACING_S).max(0.0);
    let exp = (extra > 0.0).then(|| Exp::new(1.0 / extra).expect("positive rate"));
    let gap = |rng: &mut ChaCha8Rng| SCR_MIN_SPACING_S + exp.map_or(0.0, |e| e.sample(rng));
    let mut out = Vec::new();
    // a uniformly placed first onset keeps the process stationary
    let mut t = rng.random::<f64>() * mean_gap;
    while t < duration_s {
        out.push(t);
        t += gap(rng);
    }
    out
}

/// Tonic level plus ramp and slow oscillation, with Bateman SCRs at Poisson
/// onsets. Per-event amplitudes vary uniformly by +-15% around the profile value.
pub fn synth_eda(
    profile: &PhysioProfile,
    duration_s: f64,
    rate_hz: f64,
    snr: f64,
    seed: u64,
) -> Result<(SampleSeries, Vec<PlantedScr>)> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ramp_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let wave_phase = rng.random::<f64>() * std::f64::consts::TAU;
    let onsets = scr_onsets(profile.scr_rate_per_min, duration_s, &mut rng);
    let peak_norm = bateman_peak_value(SCR_TAU1_S, SCR_TAU2_S);
    let tp = bateman_peak_time(SCR_TAU1_S, SCR_TAU2_S);
    let events: Vec<PlantedScr> = onsets
        .iter()
        .map(|&onset| PlantedScr {
            onset_s: onset,
            peak_s: onset + tp,
            amplitude_us: profile.scr_amplitude_us * rng.random_range(0.85..=1.15),
            tau1_s: SCR_TAU1_S,
            tau2_s: SCR_TAU2_S,
        })
        .collect();

    let n = (duration_s * rate_hz).round() as usize;
    let mut y: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate_hz;
            profile.tonic_us
                + ramp_sign * profile.tonic_ramp_us * t / duration_s
                + profile.tonic_wave_us * (std::f64::consts::TAU * DRIFT_FREQ_HZ * t + wave_phase).sin()
        })
        .collect();
    for e in &events {
        let a = e.amplitude_us / peak_norm;
        let start = (e.onset_s * rate_hz).ceil() as usize;
        for (i, v) in y.iter_mut().enumerate().skip(start) {
            *v += a * bateman_shape(i as f64 / rate_hz - e.onset_s, e.tau1_s, e.tau2_s);
        }
    }
    apply_snr(&mut y, snr, &mut rng)?;
    Ok((SampleSeries::new(Channel::Eda, rate_hz, y, 0.0)?, events))
}
