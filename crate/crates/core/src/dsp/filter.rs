//! Butterworth low-pass filtering, applied forward and backward for zero phase.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::data::SampleSeries;
use crate::{Error, Result};

/// Cutoff of the skin-conductance slow-response stream.
pub const SCSR_CUTOFF_HZ: f64 = 0.2;
/// Cutoff of the skin-conductance very-slow-response stream.
pub const SCVSR_CUTOFF_HZ: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl FilterSpec {
    pub fn lowpass(cutoff_hz: f64) -> Self {
        Self {
            cutoff_hz,
            order: 2,
            zero_phase: true,
        }
    }
}

/// One second-order section, `b0 + b1 z^-1 + b2 z^-2 / 1 + a1 z^-1 + a2 z^-2`.
/// First-order sections carry `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Transposed direct-form II state after settling on a unit step.
    fn step_state(&self) -> [f64; 2] {
        let gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        [gain - self.b[0], self.b[2] - self.a[1] * gain]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / rate_hz;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let nr = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let ni = -(self.b[1] * s1 + self.b[2] * s2);
        let dr = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let di = -(self.a[0] * s1 + self.a[1] * s2);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }
}

/// Digital Butterworth low-pass as cascaded sections via the bilinear
/// transform with frequency prewarping. Every section has unit DC gain.
pub fn butterworth_sections(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Vec<Biquad>> {
    let nyquist_hz = rate_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
        return Err(Error::CutoffAboveNyquist { cutoff_hz, nyquist_hz });
    }
    if order == 0 {
        return Err(Error::InvalidInput("filter order must be positive".into()));
    }
    let k = (PI * cutoff_hz / rate_hz).tan();
    let k2 = k * k;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for i in 0..order / 2 {
        // analog section s^2 + damping*s + 1 for the i-th conjugate pole pair
        let damping = 2.0 * ((2 * i + 1) as f64 * PI / (2 * order) as f64).sin();
        let d0 = 1.0 + damping * k + k2;
        sections.push(Biquad {
            b: [k2 / d0, 2.0 * k2 / d0, k2 / d0],
            a: [(2.0 * k2 - 2.0) / d0, (1.0 - damping * k + k2) / d0],
        });
    }
    if order % 2 == 1 {
        let d0 = 1.0 + k;
        sections.push(Biquad {
            b: [k / d0, k / d0, 0.0],
            a: [(k - 1.0) / d0, 0.0],
        });
    }
    Ok(sections)
}

/// Squared magnitude of the digital Butterworth design, i.e. the gain of the
/// forward-backward filter at `freq_hz`.
pub fn zero_phase_gain(order: usize, cutoff_hz: f64, freq_hz: f64, rate_hz: f64) -> f64 {
    let ratio = (PI * freq_hz / rate_hz).tan() / (PI * cutoff_hz / rate_hz).tan();
    1.0 / (1.0 + ratio.powi(2 * order as i32))
}

fn run_cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&x0) = x.first() else { return };
    for s in sections {
        // all sections have unit DC gain, so each settles on the same level x0
        let z = s.step_state().map(|v| v * x0);
        s.run(x, z);
    }
}

/// Low-pass `series`. With `spec.zero_phase` the cascade runs forward then
/// backward over an odd-reflection padded copy (3 x order samples each end),
/// each pass starting from the steady state of its first sample.
pub fn lowpass(series: &SampleSeries, spec: &FilterSpec) -> Result<SampleSeries> {
    let sections = butterworth_sections(spec.order, spec.cutoff_hz, series.rate_hz)?;
    let n = series.len();
    let min = (3 * spec.order).max(2);
    if n < min {
        return Err(Error::TooShort { len: n, min });
    }
    let x = &series.samples;
    if !spec.zero_phase {
        let mut y = x.clone();
        run_cascade(&sections, &mut y);
        return Ok(series.with_samples(y));
    }

    let pad = (3 * spec.order).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    run_cascade(&sections, &mut ext);
    ext.reverse();
    run_cascade(&sections, &mut ext);
    ext.reverse();
    Ok(series.with_samples(ext[pad..pad + n].to_vec()))
}
