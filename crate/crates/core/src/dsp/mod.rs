//! Signal-conditioning primitives.

mod filter;
mod peaks;
mod spectrum;
mod stats;

pub use filter::{
    butterworth_sections, lowpass, zero_phase_gain, Biquad, FilterSpec, SCSR_CUTOFF_HZ, SCVSR_CUTOFF_HZ,
};
pub use peaks::{detect_pulse_peaks, PPIntervals, MAX_INTERVAL_MS, MIN_INTERVAL_MS};
pub use spectrum::{
    band_power, hann, pp_psd, resample_intervals, welch, BandPower, PSDEstimate, HF_BAND, HRV_RESAMPLE_HZ, LF_BAND,
    VLF_BAND,
};
pub use stats::pearson;
