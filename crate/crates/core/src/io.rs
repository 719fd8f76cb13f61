//! On-disk session layout.
//!
//! A session directory holds a JSON manifest, one `time_s,value` CSV per
//! physiological channel and trial, and one directory of binary PGM (P5)
//! frames per trial. Frame order is the lexicographic order of file names.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{Channel, EmotionLabel, FrameSequence, SampleSeries, SessionDataset, TrialRecord, PHYSIO_RATE_HZ};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

const RATE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subject_id: String,
    pub trials: Vec<ManifestTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub trial_id: String,
    pub label: String,
    pub eda_csv: PathBuf,
    pub ppg_csv: PathBuf,
    pub frames_dir: PathBuf,
    pub frame_rate_hz: f64,
    /// Sampling rate of both signal files; checked against the CSV time column.
    #[serde(default = "default_physio_rate")]
    pub physio_rate_hz: f64,
}

fn default_physio_rate() -> f64 {
    PHYSIO_RATE_HZ
}

/// Reads a manifest and every file it references, validating all trial invariants.
pub fn load_session(manifest_path: impl AsRef<Path>) -> Result<SessionDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(manifest_path.display().to_string(), e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let trials = manifest
        .trials
        .iter()
        .map(|t| {
            let label: EmotionLabel = t.label.parse()?;
            let eda = read_signal_csv(&base.join(&t.eda_csv), Channel::Eda, t.physio_rate_hz)?;
            let ppg = read_signal_csv(&base.join(&t.ppg_csv), Channel::Ppg, t.physio_rate_hz)?;
            let frames = read_frames_dir(&base.join(&t.frames_dir), t.frame_rate_hz)?;
            TrialRecord::new(t.trial_id.clone(), manifest.subject_id.clone(), eda, ppg, frames, label)
        })
        .collect::<Result<Vec<_>>>()?;
    SessionDataset::new(manifest.subject_id, trials)
}

/// Writes `dataset` under `dir` in the layout `load_session` reads. Returns the manifest path.
pub fn save_session(dataset: &SessionDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut trials = Vec::with_capacity(dataset.trials.len());
    for t in &dataset.trials {
        if (t.eda.rate_hz - t.ppg.rate_hz).abs() > 0.0 {
            return Err(Error::InvalidInput(format!(
                "trial {}: EDA and PPG must share one sampling rate to be saved",
                t.trial_id
            )));
        }
        let eda_csv = PathBuf::from(format!("{}_eda.csv", t.trial_id));
        let ppg_csv = PathBuf::from(format!("{}_ppg.csv", t.trial_id));
        let frames_dir = PathBuf::from("frames").join(&t.trial_id);
        write_signal_csv(&dir.join(&eda_csv), &t.eda)?;
        write_signal_csv(&dir.join(&ppg_csv), &t.ppg)?;
        write_frames_dir(&dir.join(&frames_dir), &t.frames)?;
        trials.push(ManifestTrial {
            trial_id: t.trial_id.clone(),
            label: t.label.to_string(),
            eda_csv,
            ppg_csv,
            frames_dir,
            frame_rate_hz: t.frames.rate_hz,
            physio_rate_hz: t.eda.rate_hz,
        });
    }
    let manifest = Manifest {
        subject_id: dataset.subject_id.clone(),
        trials,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse("manifest", e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_signal_csv(path: &Path, channel: Channel, declared_rate_hz: f64) -> Result<SampleSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = || path.display().to_string();
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("time_s,value") => {}
        other => return Err(Error::parse(ctx(), format!("expected header \"time_s,value\", found {other:?}"))),
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(ctx(), format!("line {}: expected two columns", lineno + 2)))?;
        let t: f64 = t.trim().parse().map_err(|e| Error::parse(ctx(), format!("line {}: {e}", lineno + 2)))?;
        let v: f64 = v.trim().parse().map_err(|e| Error::parse(ctx(), format!("line {}: {e}", lineno + 2)))?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::parse(ctx(), format!("line {}: time not increasing", lineno + 2)));
            }
        }
        times.push(t);
        values.push(v);
    }
    if times.len() >= 2 {
        let actual = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
        if ((actual - declared_rate_hz) / declared_rate_hz).abs() > RATE_REL_TOL {
            return Err(Error::RateMismatch {
                context: ctx(),
                declared_hz: declared_rate_hz,
                actual_hz: actual,
            });
        }
    }
    SampleSeries::new(channel, declared_rate_hz, values, times.first().copied().unwrap_or(0.0))
}

pub fn write_signal_csv(path: &Path, series: &SampleSeries) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 24 + 16);
    out.push_str("time_s,value\n");
    for (i, v) in series.samples.iter().enumerate() {
        let t = series.start_time_s + i as f64 / series.rate_hz;
        // `{}` on f64 prints the shortest representation that parses back exactly.
        let _ = writeln!(out, "{t},{v}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_frames_dir(dir: &Path, rate_hz: f64) -> Result<FrameSequence> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    let mut dims: Option<(usize, usize)> = None;
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        let (w, h, pixels) = decode_pgm(&bytes).map_err(|m| Error::parse(p.display().to_string(), m))?;
        match dims {
            None => dims = Some((w, h)),
            Some(d) if d != (w, h) => {
                return Err(Error::FrameDimensionMismatch {
                    context: p.display().to_string(),
                    expected: d,
                    found: (w, h),
                })
            }
            _ => {}
        }
        frames.push(pixels);
    }
    let (w, h) = dims.ok_or_else(|| Error::InvalidInput(format!("no PGM frames in {}", dir.display())))?;
    FrameSequence::new(w, h, rate_hz, frames, 0.0)
}

pub fn write_frames_dir(dir: &Path, frames: &FrameSequence) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.frames.iter().enumerate() {
        let path = dir.join(format!("{i:06}.pgm"));
        fs::write(&path, encode_pgm(frames.width, frames.height, f)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes an 8-bit binary PGM, returning `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let num = |s: String| s.parse::<usize>().map_err(|e| format!("bad header field {s:?}: {e}"));
    let w = num(token()?)?;
    let h = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval != 255 {
        return Err(format!("only 8-bit PGM supported, maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let end = start + w * h;
    if end > bytes.len() {
        return Err(format!("raster truncated: need {} bytes, have {}", w * h, bytes.len().saturating_sub(start)));
    }
    Ok((w, h, bytes[start..end].to_vec()))
}
