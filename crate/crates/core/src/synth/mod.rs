//! Synthetic sessions with known ground truth.
//!
//! The default [`SynthSpec`] is the reference session: the face carries
//! valence strongly and arousal weakly, while every physiological profile
//! parameter moves with arousal only. Either channel alone is therefore
//! incomplete for the quadrant task.

mod face;
mod signals;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::io::save_session;
pub use face::{smooth_pattern, synth_frames, FaceBank, FaceDesign};
pub use signals::{
    bateman_half_recovery, bateman_peak_time, bateman_peak_value, synth_eda, synth_ppg, PhysioProfile, PlantedBeats,
    PlantedScr, SCR_MIN_SPACING_S, SCR_TAU1_S, SCR_TAU2_S,
};

use crate::data::{EmotionLabel, FrameSequence, Level, SessionDataset, TrialRecord};
use crate::seed::{derive, stage};
use crate::{Error, Result};

/// Per-trial variation of the physiological profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileJitter {
    pub hr_sd_bpm: f64,
    /// Relative half-width of the uniform factor on HRV depth, SCR rate and amplitude.
    pub relative: f64,
    pub tonic_sd_us: f64,
}

impl Default for ProfileJitter {
    fn default() -> Self {
        Self {
            hr_sd_bpm: 2.0,
            relative: 0.1,
            tonic_sd_us: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_trials: usize,
    pub trial_s: f64,
    pub physio_rate_hz: f64,
    pub frame_rate_hz: f64,
    pub frame_width: usize,
    pub frame_height: usize,
    pub facial_snr: f64,
    pub physio_snr: f64,
    /// Profiles indexed by quadrant: HAHV, HALV, LALV, LAHV.
    pub profiles: [PhysioProfile; 4],
    pub jitter: ProfileJitter,
    pub face: FaceDesign,
}

fn high_arousal() -> PhysioProfile {
    PhysioProfile {
        hr_bpm: 88.0,
        hrv_depth_ms: 15.0,
        hrv_freq_hz: 0.25,
        beat_jitter_ms: 8.0,
        scr_rate_per_min: 7.0,
        scr_amplitude_us: 0.6,
        tonic_us: 8.0,
        tonic_ramp_us: 0.2,
        tonic_wave_us: 0.1,
    }
}

fn low_arousal() -> PhysioProfile {
    PhysioProfile {
        hr_bpm: 64.0,
        hrv_depth_ms: 80.0,
        hrv_freq_hz: 0.12,
        beat_jitter_ms: 8.0,
        scr_rate_per_min: 2.0,
        scr_amplitude_us: 0.12,
        tonic_us: 4.0,
        tonic_ramp_us: 0.2,
        tonic_wave_us: 0.1,
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        let profiles = EmotionLabel::ALL.map(|l| match l.arousal() {
            Level::High => high_arousal(),
            Level::Low => low_arousal(),
        });
        Self {
            seed: 0,
            n_trials: crate::data::TRIALS_PER_SESSION,
            trial_s: crate::data::TRIAL_S,
            physio_rate_hz: crate::data::PHYSIO_RATE_HZ,
            frame_rate_hz: crate::data::FRAME_RATE_HZ,
            frame_width: 32,
            frame_height: 32,
            facial_snr: 1.0,
            physio_snr: 1000.0,
            profiles,
            jitter: ProfileJitter::default(),
            face: FaceDesign::default(),
        }
    }
}

impl SynthSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Every quadrant gets the same profile, so physiology carries no label information.
    pub fn with_uninformative_physio(mut self) -> Self {
        self.profiles = [self.profiles[0]; 4];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 || !self.n_trials.is_multiple_of(4) {
            return Err(Error::InvalidInput(format!(
                "trial count must be a positive multiple of 4, got {}",
                self.n_trials
            )));
        }
        for (name, v) in [
            ("trial_s", self.trial_s),
            ("physio_rate_hz", self.physio_rate_hz),
            ("frame_rate_hz", self.frame_rate_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("facial_snr", self.facial_snr), ("physio_snr", self.physio_snr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::InvalidInput("frame dimensions must be positive".into()));
        }
        self.profiles.iter().try_for_each(PhysioProfile::validate)
    }
}

/// Planted values of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub trial_id: String,
    pub label: EmotionLabel,
    pub template_id: usize,
    pub profile: PhysioProfile,
    pub beats: PlantedBeats,
    pub scrs: Vec<PlantedScr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub trials: Vec<TrialTruth>,
}

/// Balanced label order, shuffled with the session seed.
fn trial_labels(spec: &SynthSpec) -> Vec<EmotionLabel> {
    let mut labels: Vec<EmotionLabel> = (0..spec.n_trials).map(|i| EmotionLabel::ALL[i % 4]).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(spec.seed, stage::SYNTH_ORDER, 0)));
    labels
}

fn jittered(profile: &PhysioProfile, jitter: &ProfileJitter, rng: &mut ChaCha8Rng) -> PhysioProfile {
    let mut rel = || 1.0 + jitter.relative * (2.0 * rng.random::<f64>() - 1.0);
    let (depth, rate, amp) = (rel(), rel(), rel());
    let normal = |rng: &mut ChaCha8Rng, sd: f64| {
        if sd > 0.0 {
            rand_distr::Distribution::sample(&rand_distr::Normal::new(0.0, sd).expect("sd > 0"), rng)
        } else {
            0.0
        }
    };
    PhysioProfile {
        hr_bpm: (profile.hr_bpm + normal(rng, jitter.hr_sd_bpm)).clamp(40.0, 180.0),
        hrv_depth_ms: profile.hrv_depth_ms * depth,
        scr_rate_per_min: profile.scr_rate_per_min * rate,
        scr_amplitude_us: profile.scr_amplitude_us * amp,
        tonic_us: profile.tonic_us + normal(rng, jitter.tonic_sd_us),
        ..*profile
    }
}

/// Generates a session and its ground truth. Trials are independent
/// functions of `(spec, trial index)` and are built in parallel.
pub fn synth_session(spec: &SynthSpec) -> Result<(SessionDataset, GroundTruth)> {
    spec.validate()?;
    let labels = trial_labels(spec);
    let bank = FaceBank::new(spec.frame_width, spec.frame_height, spec.face.clone(), spec.seed);
    let subject = format!("synth-{}", spec.seed);
    let n_frames = (spec.trial_s * spec.frame_rate_hz).round() as usize;

    let built: Vec<(TrialRecord, TrialTruth)> = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let trial_seed = |k: u64| derive(spec.seed, stage::SYNTH_TRIAL, (i as u64) << 4 | k);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(0));
            let profile = jittered(&spec.profiles[label.index()], &spec.jitter, &mut rng);
            let (ppg, beats) = synth_ppg(&profile, spec.trial_s, spec.physio_rate_hz, spec.physio_snr, trial_seed(1))?;
            let (eda, scrs) = synth_eda(&profile, spec.trial_s, spec.physio_rate_hz, spec.physio_snr, trial_seed(2))?;
            let mut frng = ChaCha8Rng::seed_from_u64(trial_seed(3));
            let image = bank.trial_image(label, &mut frng);
            let raw = face::render_frames(&image, bank.template_rms(label), spec.facial_snr, n_frames, &mut frng)?;
            let frames = FrameSequence::new(spec.frame_width, spec.frame_height, spec.frame_rate_hz, raw, 0.0)?;
            let trial_id = format!("t{i:02}");
            let record = TrialRecord::new(trial_id.clone(), subject.clone(), eda, ppg, frames, label)?;
            let truth = TrialTruth {
                trial_id,
                label,
                template_id: label.index(),
                profile,
                beats,
                scrs,
            };
            Ok((record, truth))
        })
        .collect::<Result<_>>()?;
    let (records, truths): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    Ok((
        SessionDataset::new(subject, records)?,
        GroundTruth {
            spec: spec.clone(),
            trials: truths,
        },
    ))
}
