use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{EmotionLabel, FrameSequence, Level};
use crate::seed::{derive, stage};
use crate::{Error, Result};

/// Highest cosine frequency (per axis) in a template pattern.
const PATTERN_FREQS: usize = 4;
const GRAY: f64 = 128.0;

/// How expression and nuisance patterns combine into per-trial mean images.
/// Gains are pixel-intensity RMS values of the corresponding pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaceDesign {
    /// Contrast of the class-independent face.
    pub base_gain: f64,
    pub valence_gain: f64,
    pub arousal_gain: f64,
    /// Per-trial expression intensity is drawn from `1 +- intensity_jitter`.
    pub intensity_jitter: f64,
    /// Per-trial Gaussian offset along the arousal pattern.
    pub arousal_jitter: f64,
    pub nuisance_modes: usize,
    /// Per-trial standard deviation of each nuisance coefficient.
    pub nuisance_sd: f64,
}

impl Default for FaceDesign {
    fn default() -> Self {
        Self {
            base_gain: 15.0,
            valence_gain: 12.0,
            arousal_gain: 2.5,
            intensity_jitter: 0.2,
            arousal_jitter: 2.5,
            nuisance_modes: 3,
            nuisance_sd: 4.0,
        }
    }
}

/// Smooth zero-mean pattern with unit RMS: a seeded combination of low-order
/// 2-D cosines.
pub fn smooth_pattern(width: usize, height: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut coef = [[0.0; PATTERN_FREQS]; PATTERN_FREQS];
    for (u, row) in coef.iter_mut().enumerate() {
        for (v, c) in row.iter_mut().enumerate() {
            if u + v > 0 {
                *c = normal.sample(&mut rng);
            }
        }
    }
    let mut p: Vec<f64> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| {
            let mut acc = 0.0;
            for (u, row) in coef.iter().enumerate() {
                let cx = (std::f64::consts::PI * u as f64 * (x as f64 + 0.5) / width as f64).cos();
                for (v, c) in row.iter().enumerate() {
                    acc += c * cx * (std::f64::consts::PI * v as f64 * (y as f64 + 0.5) / height as f64).cos();
                }
            }
            acc
        })
        .collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter_mut().for_each(|v| *v -= mean);
    let rms = (p.iter().map(|v| v * v).sum::<f64>() / p.len() as f64).sqrt();
    if rms > 0.0 {
        p.iter_mut().for_each(|v| *v /= rms);
    }
    p
}

/// The seeded patterns behind every synthetic face of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceBank {
    pub width: usize,
    pub height: usize,
    pub design: FaceDesign,
    base: Vec<f64>,
    valence: Vec<f64>,
    arousal: Vec<f64>,
    nuisance: Vec<Vec<f64>>,
}

fn sign(level: Level) -> f64 {
    match level {
        Level::High => 1.0,
        Level::Low => -1.0,
    }
}

impl FaceBank {
    pub fn new(width: usize, height: usize, design: FaceDesign, seed: u64) -> Self {
        let pat = |i: u64| smooth_pattern(width, height, derive(seed, stage::SYNTH_TEMPLATE, i));
        Self {
            width,
            height,
            base: pat(0),
            valence: pat(1),
            arousal: pat(2),
            nuisance: (0..design.nuisance_modes as u64).map(|i| pat(10 + i)).collect(),
            design,
        }
    }

    fn compose(&self, label: EmotionLabel, intensity: f64, arousal_offset: f64, nuisance: &[f64]) -> Vec<f64> {
        let d = &self.design;
        let v = sign(label.valence()) * d.valence_gain * intensity;
        let a = sign(label.arousal()) * d.arousal_gain + arousal_offset;
        (0..self.base.len())
            .map(|i| {
                let mut p = GRAY + d.base_gain * self.base[i] + v * self.valence[i] + a * self.arousal[i];
                for (c, q) in nuisance.iter().zip(&self.nuisance) {
                    p += c * q[i];
                }
                p
            })
            .collect()
    }

    /// The noiseless class template (no trial variation).
    pub fn template(&self, label: EmotionLabel) -> Vec<f64> {
        self.compose(label, 1.0, 0.0, &[])
    }

    /// RMS of the mean-removed class template, the reference for `facial_snr`.
    pub fn template_rms(&self, label: EmotionLabel) -> f64 {
        let t = self.template(label);
        let m = t.iter().sum::<f64>() / t.len() as f64;
        (t.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / t.len() as f64).sqrt()
    }

    /// A trial's mean image: template with jittered intensity, arousal offset
    /// and nuisance coefficients drawn from `rng`.
    pub fn trial_image(&self, label: EmotionLabel, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = &self.design;
        let intensity = 1.0 + d.intensity_jitter * (2.0 * rng.random::<f64>() - 1.0);
        let arousal_offset = gaussian(rng, d.arousal_jitter);
        let nuisance: Vec<f64> = (0..d.nuisance_modes).map(|_| gaussian(rng, d.nuisance_sd)).collect();
        self.compose(label, intensity, arousal_offset, &nuisance)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("positive sd").sample(rng)
    } else {
        0.0
    }
}

/// `n_frames` noisy copies of `mean_image`, rounded and clamped to 0..=255.
/// Noise is Gaussian with standard deviation `reference_rms / snr`. With
/// `snr == 0` the image is replaced by flat gray and the noise has
/// `reference_rms`; an infinite `snr` adds no noise.
pub(crate) fn render_frames(
    mean_image: &[f64],
    reference_rms: f64,
    snr: f64,
    n_frames: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<u8>>> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::InvalidInput(format!("facial SNR must be >= 0, got {snr}")));
    }
    let flat = vec![GRAY; mean_image.len()];
    let (img, sd) = if snr == 0.0 {
        (flat.as_slice(), reference_rms)
    } else if snr.is_infinite() {
        (mean_image, 0.0)
    } else {
        (mean_image, reference_rms / snr)
    };
    let normal = (sd > 0.0).then(|| Normal::new(0.0, sd).expect("positive sd"));
    Ok((0..n_frames)
        .map(|_| {
            img.iter()
                .map(|&p| {
                    let v = p + normal.map_or(0.0, |n| n.sample(rng));
                    v.round().clamp(0.0, 255.0) as u8
                })
                .collect()
        })
        .collect())
}

/// Frames of one class template with per-frame pixel noise at `facial_snr`
/// (no trial-level variation). Templates come from the default design seeded
/// by `seed`.
pub fn synth_frames(
    class_id: usize,
    n_frames: usize,
    dims: (usize, usize),
    facial_snr: f64,
    seed: u64,
) -> Result<FrameSequence> {
    let label = EmotionLabel::from_index(class_id)
        .ok_or_else(|| Error::InvalidInput(format!("class id {class_id} outside 0..4")))?;
    let bank = FaceBank::new(dims.0, dims.1, FaceDesign::default(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, stage::SYNTH_TRIAL, 1_000 + class_id as u64));
    let frames = render_frames(&bank.template(label), bank.template_rms(label), facial_snr, n_frames, &mut rng)?;
    FrameSequence::new(dims.0, dims.1, crate::data::FRAME_RATE_HZ, frames, 0.0)
}
