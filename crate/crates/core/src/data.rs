//! Session data model: sampled signal channels, partial-face frame streams,
//! quadrant labels, observation windows and frame averaging.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Default physiological sampling rate of the glasses recorder.
pub const PHYSIO_RATE_HZ: f64 = 200.0;
/// Default camera frame rate.
pub const FRAME_RATE_HZ: f64 = 5.0;
/// Default stimulus (trial) length.
pub const TRIAL_S: f64 = 120.0;
/// Default number of trials per subject.
pub const TRIALS_PER_SESSION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Channel {
    Eda,
    Ppg,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Eda => "EDA",
            Channel::Ppg => "PPG",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    High,
    Low,
}

/// Arousal-valence quadrant. The declaration order is the canonical class
/// order used for tie-breaking and confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EmotionLabel {
    Hahv,
    Halv,
    Lalv,
    Lahv,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 4] = [
        EmotionLabel::Hahv,
        EmotionLabel::Halv,
        EmotionLabel::Lalv,
        EmotionLabel::Lahv,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn arousal(self) -> Level {
        match self {
            EmotionLabel::Hahv | EmotionLabel::Halv => Level::High,
            EmotionLabel::Lalv | EmotionLabel::Lahv => Level::Low,
        }
    }

    pub fn valence(self) -> Level {
        match self {
            EmotionLabel::Hahv | EmotionLabel::Lahv => Level::High,
            EmotionLabel::Halv | EmotionLabel::Lalv => Level::Low,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Hahv => "HAHV",
            EmotionLabel::Halv => "HALV",
            EmotionLabel::Lalv => "LALV",
            EmotionLabel::Lahv => "LAHV",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HAHV" => Ok(EmotionLabel::Hahv),
            "HALV" => Ok(EmotionLabel::Halv),
            "LALV" => Ok(EmotionLabel::Lalv),
            "LAHV" => Ok(EmotionLabel::Lahv),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// A uniformly sampled physiological channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub channel: Channel,
    pub rate_hz: f64,
    pub samples: Vec<f64>,
    pub start_time_s: f64,
}

impl SampleSeries {
    pub fn new(channel: Channel, rate_hz: f64, samples: Vec<f64>, start_time_s: f64) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!("sample rate must be positive, got {rate_hz}")));
        }
        if !start_time_s.is_finite() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            channel,
            rate_hz,
            samples,
            start_time_s,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Same channel and timing, new sample values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            channel: self.channel,
            rate_hz: self.rate_hz,
            samples,
            start_time_s: self.start_time_s,
        }
    }

    /// Copies `count` samples starting at `start`, padding a shortfall of at
    /// most one sample by repeating the last sample.
    fn slice_padded(&self, start: usize, count: usize) -> Option<Vec<f64>> {
        let end = start + count;
        if end <= self.samples.len() {
            return Some(self.samples[start..end].to_vec());
        }
        if end - self.samples.len() > 1 || start >= self.samples.len() {
            return None;
        }
        let mut out = self.samples[start..].to_vec();
        let last = *self.samples.last()?;
        out.resize(count, last);
        Some(out)
    }
}

/// Real-valued grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(width, height, pixels.iter().map(|&p| f64::from(p)).collect())
    }
}

/// Grayscale 8-bit frames at a fixed rate; every frame is `width * height` bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSequence {
    pub width: usize,
    pub height: usize,
    pub rate_hz: f64,
    pub frames: Vec<Vec<u8>>,
    pub start_time_s: f64,
}

impl FrameSequence {
    pub fn new(
        width: usize,
        height: usize,
        rate_hz: f64,
        frames: Vec<Vec<u8>>,
        start_time_s: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("frame dimensions must be positive".into()));
        }
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!("frame rate must be positive, got {rate_hz}")));
        }
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != width * height) {
            return Err(Error::FrameDimensionMismatch {
                context: format!("frame {i}"),
                expected: (width, height),
                found: (f.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            rate_hz,
            frames,
            start_time_s,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.rate_hz
    }
}

/// One stimulus trial with both physiological channels, the frame stream and its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub subject_id: String,
    pub eda: SampleSeries,
    pub ppg: SampleSeries,
    pub frames: FrameSequence,
    pub label: EmotionLabel,
}

impl TrialRecord {
    pub fn new(
        trial_id: impl Into<String>,
        subject_id: impl Into<String>,
        eda: SampleSeries,
        ppg: SampleSeries,
        frames: FrameSequence,
        label: EmotionLabel,
    ) -> Result<Self> {
        let trial_id = trial_id.into();
        if eda.channel != Channel::Eda || ppg.channel != Channel::Ppg {
            return Err(Error::InvalidInput(format!(
                "trial {trial_id}: expected EDA and PPG channels, got {} and {}",
                eda.channel, ppg.channel
            )));
        }
        Ok(Self {
            trial_id,
            subject_id: subject_id.into(),
            eda,
            ppg,
            frames,
            label,
        })
    }

    /// The span covered by all three streams.
    pub fn duration_s(&self) -> f64 {
        self.eda
            .duration_s()
            .min(self.ppg.duration_s())
            .min(self.frames.duration_s())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDataset {
    pub subject_id: String,
    pub trials: Vec<TrialRecord>,
}

impl SessionDataset {
    pub fn new(subject_id: impl Into<String>, trials: Vec<TrialRecord>) -> Result<Self> {
        let mut ids: Vec<&str> = trials.iter().map(|t| t.trial_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate trial id {:?}", w[0])));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            trials,
        })
    }
}

/// Observation-window geometry. Defaults: 100 s windows, 6 s apart, three per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowParams {
    pub length_s: f64,
    pub stride_s: f64,
    pub count: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self {
            length_s: 100.0,
            stride_s: 6.0,
            count: 3,
        }
    }
}

/// A time-aligned excerpt of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub trial_id: String,
    pub offset_s: f64,
    pub length_s: f64,
    pub eda_slice: SampleSeries,
    pub ppg_slice: SampleSeries,
    pub frame_slice: FrameSequence,
    pub label: EmotionLabel,
}

const TIME_EPS: f64 = 1e-9;

/// Cuts `params.count` windows at offsets `0, stride, 2*stride, ...`.
///
/// Signal slices hold `round(length * rate)` samples; frames cover the half-open
/// interval `[offset, offset + length)` with indices snapped by rounding.
pub fn slice_windows(trial: &TrialRecord, params: &WindowParams) -> Result<Vec<ObservationWindow>> {
    let valid = params.length_s > 0.0 && params.stride_s >= 0.0;
    if !valid {
        return Err(Error::InvalidInput(format!(
            "window length must be positive and stride non-negative, got {} / {}",
            params.length_s, params.stride_s
        )));
    }
    let duration = trial.duration_s();
    // a one-sample shortfall of a physiological stream is padded below
    let slack = (1.0 / trial.eda.rate_hz).max(1.0 / trial.ppg.rate_hz);
    (0..params.count)
        .map(|i| {
            let offset_s = i as f64 * params.stride_s;
            let out_of_range = || Error::WindowOutOfRange {
                offset_s,
                length_s: params.length_s,
                duration_s: duration,
            };
            if offset_s + params.length_s > duration + slack + TIME_EPS {
                return Err(out_of_range());
            }
            let signal = |s: &SampleSeries| -> Result<SampleSeries> {
                let start = (offset_s * s.rate_hz).round() as usize;
                let count = (params.length_s * s.rate_hz).round() as usize;
                let samples = s.slice_padded(start, count).ok_or_else(out_of_range)?;
                Ok(SampleSeries {
                    channel: s.channel,
                    rate_hz: s.rate_hz,
                    samples,
                    start_time_s: s.start_time_s + start as f64 / s.rate_hz,
                })
            };
            let fr = &trial.frames;
            let start = (offset_s * fr.rate_hz).round() as usize;
            let end = ((offset_s + params.length_s) * fr.rate_hz).round() as usize;
            let mut frames: Vec<Vec<u8>> = fr.frames.get(start..end.min(fr.len())).unwrap_or(&[]).to_vec();
            if end > fr.len() {
                match fr.frames.last() {
                    Some(last) if end - fr.len() <= 1 && start < fr.len() => frames.push(last.clone()),
                    _ => return Err(out_of_range()),
                }
            }
            Ok(ObservationWindow {
                trial_id: trial.trial_id.clone(),
                offset_s,
                length_s: params.length_s,
                eda_slice: signal(&trial.eda)?,
                ppg_slice: signal(&trial.ppg)?,
                frame_slice: FrameSequence {
                    width: fr.width,
                    height: fr.height,
                    rate_hz: fr.rate_hz,
                    frames,
                    start_time_s: fr.start_time_s + start as f64 / fr.rate_hz,
                },
                label: trial.label,
            })
        })
        .collect()
}

/// Per-pixel arithmetic mean of all frames in the window.
pub fn average_frame(window: &ObservationWindow) -> Result<GrayImage> {
    average_frames(&window.frame_slice)
}

pub fn average_frames(frames: &FrameSequence) -> Result<GrayImage> {
    if frames.is_empty() {
        return Err(Error::EmptyFrames);
    }
    // Integer accumulation is exact and therefore independent of frame order.
    let mut sums = vec![0u64; frames.width * frames.height];
    for frame in &frames.frames {
        for (s, &p) in sums.iter_mut().zip(frame) {
            *s += u64::from(p);
        }
    }
    let n = frames.len() as f64;
    GrayImage::new(
        frames.width,
        frames.height,
        sums.into_iter().map(|s| s as f64 / n).collect(),
    )
}
