//! Welch power spectral density of the peak-to-peak interval series and
//! band-power integration.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::peaks::PPIntervals;
use crate::{Error, Result};

/// Uniform resampling rate of the interval series.
pub const HRV_RESAMPLE_HZ: f64 = 4.0;
const SEGMENT_S: f64 = 64.0;
const MIN_INTERVALS: usize = 8;
const MIN_SPAN_S: f64 = 60.0;

/// Conventional HRV frequency bands in Hz, half-open `[lo, hi)`.
pub const VLF_BAND: (f64, f64) = (0.0033, 0.04);
pub const LF_BAND: (f64, f64) = (0.04, 0.15);
pub const HF_BAND: (f64, f64) = (0.15, 0.4);

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSDEstimate {
    pub freqs_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub resolution_hz: f64,
}

impl PSDEstimate {
    /// Integral of the density over its whole support.
    pub fn total_power(&self) -> f64 {
        band_power(self, 0.0, f64::INFINITY).value
    }

    /// Frequency of the largest bin above DC.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .power
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        self.freqs_hz[i]
    }
}

/// Result of a band integral; `in_support` is false when the band does not
/// overlap the estimate's frequency range at all (the value is then 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPower {
    pub value: f64,
    pub in_support: bool,
}

/// Periodic Hann taper.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Welch estimate with a Hann taper and 50% overlap, density-scaled so that
/// the sum over bins times the resolution equals the mean over segments of
/// `sum((w x)^2) / sum(w^2)`. Segments shorter than the signal use the whole signal.
pub fn welch(x: &[f64], rate_hz: f64, segment_len: usize) -> Result<PSDEstimate> {
    let nseg = segment_len.min(x.len());
    if nseg < 2 {
        return Err(Error::TooShort { len: x.len(), min: 2 });
    }
    let step = (nseg / 2).max(1);
    let window = hann(nseg);
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nseg);
    let nbins = nseg / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut count = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); nseg];
    let mut start = 0;
    while start + nseg <= x.len() {
        for ((b, &v), &w) in buf.iter_mut().zip(&x[start..start + nseg]).zip(&window) {
            *b = Complex::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        count += 1;
        start += step;
    }
    let scale = 1.0 / (rate_hz * wss * count as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (nseg.is_multiple_of(2) && k == nseg / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let resolution_hz = rate_hz / nseg as f64;
    Ok(PSDEstimate {
        freqs_hz: (0..nbins).map(|k| k as f64 * resolution_hz).collect(),
        power,
        resolution_hz,
    })
}

/// The interval series (each interval placed at the time of its closing peak)
/// linearly interpolated onto a uniform grid from the first to the last interval.
pub fn resample_intervals(pp: &PPIntervals, rate_hz: f64) -> Vec<f64> {
    let times = &pp.peak_times_s[1..];
    let values = &pp.intervals_ms;
    if times.is_empty() {
        return Vec::new();
    }
    let t0 = times[0];
    let n = ((times[times.len() - 1] - t0) * rate_hz).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = t0 + i as f64 / rate_hz;
        while j + 2 < times.len() && times[j + 1] < t {
            j += 1;
        }
        if j + 1 >= times.len() {
            out.push(values[j]);
            continue;
        }
        let (ta, tb) = (times[j], times[j + 1]);
        let frac = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out.push(values[j] + frac * (values[j + 1] - values[j]));
    }
    out
}

/// PSD of the interval series: 4 Hz linear resampling, mean removal, Welch
/// with 64 s Hann segments at 50% overlap. Power is in ms²/Hz.
pub fn pp_psd(pp: &PPIntervals) -> Result<PSDEstimate> {
    if pp.intervals_ms.len() < MIN_INTERVALS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_INTERVALS} intervals for a spectrum, got {}",
            pp.intervals_ms.len()
        )));
    }
    let span = pp.peak_times_s[pp.peak_times_s.len() - 1] - pp.peak_times_s[0];
    if span < MIN_SPAN_S {
        return Err(Error::InvalidInput(format!(
            "intervals span {span:.1} s, need at least {MIN_SPAN_S} s"
        )));
    }
    let mut x = resample_intervals(pp, HRV_RESAMPLE_HZ);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    welch(&x, HRV_RESAMPLE_HZ, (SEGMENT_S * HRV_RESAMPLE_HZ) as usize)
}

/// Exact integral over `[lo_hz, hi_hz)` of the piecewise-linear interpolant
/// of the density. Integrals over adjacent bands add up to the integral over
/// their union.
pub fn band_power(psd: &PSDEstimate, lo_hz: f64, hi_hz: f64) -> BandPower {
    debug_assert!(lo_hz < hi_hz);
    let f = &psd.freqs_hz;
    let p = &psd.power;
    let mut value = 0.0;
    let mut in_support = false;
    let interp = |i: usize, x: f64| p[i] + (p[i + 1] - p[i]) * (x - f[i]) / (f[i + 1] - f[i]);
    for i in 0..f.len().saturating_sub(1) {
        let a = lo_hz.max(f[i]);
        let b = hi_hz.min(f[i + 1]);
        if b > a {
            in_support = true;
            value += 0.5 * (b - a) * (interp(i, a) + interp(i, b));
        }
    }
    BandPower {
        value: value.max(0.0),
        in_support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_psd() -> PSDEstimate {
        PSDEstimate {
            freqs_hz: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            power: vec![1.0, 1.0, 1.0, 1.0, 1.0],
            resolution_hz: 0.5,
        }
    }

    #[test]
    fn band_outside_support_is_zero_and_flagged() {
        let bp = band_power(&flat_psd(), 3.0, 4.0);
        assert_eq!(bp.value, 0.0);
        assert!(!bp.in_support);
    }

    #[test]
    fn band_partial_bins_integrate_linearly() {
        let psd = PSDEstimate {
            freqs_hz: vec![0.0, 1.0],
            power: vec![0.0, 2.0],
            resolution_hz: 1.0,
        };
        assert!((band_power(&psd, 0.5, 1.0).value - 0.75).abs() < 1e-15);
        assert!((psd.total_power() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parseval_on_white_noise() {
        // deterministic pseudo-noise
        let mut s = 12345u64;
        let x: Vec<f64> = (0..1000)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        let psd = welch(&x, 4.0, 256).unwrap();
        let w = hann(256);
        let wss: f64 = w.iter().map(|v| v * v).sum();
        let mut expect = 0.0;
        let mut n = 0;
        let mut st = 0;
        while st + 256 <= x.len() {
            expect += x[st..st + 256].iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum::<f64>() / wss;
            n += 1;
            st += 128;
        }
        expect /= n as f64;
        let got: f64 = psd.power.iter().sum::<f64>() * psd.resolution_hz;
        assert!((got - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn too_few_intervals() {
        let pp = PPIntervals::from_intervals(0.0, &[800.0; 5]).unwrap();
        assert!(pp_psd(&pp).is_err());
        let pp = PPIntervals::from_intervals(0.0, &[800.0; 60]).unwrap();
        assert!(pp_psd(&pp).is_err(), "48 s span is too short");
    }
}
