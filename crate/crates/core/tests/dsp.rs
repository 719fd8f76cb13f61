use std::f64::consts::PI;

use emoglass::data::{Channel, SampleSeries};
use emoglass::dsp::{
    band_power, butterworth_sections, detect_pulse_peaks, lowpass, pearson, pp_psd, welch, zero_phase_gain,
    FilterSpec, PPIntervals, HF_BAND, LF_BAND, SCSR_CUTOFF_HZ,
};
use emoglass::synth::{synth_ppg, PhysioProfile};
use proptest::prelude::*;

fn series(fs: f64, x: Vec<f64>) -> SampleSeries {
    SampleSeries::new(Channel::Eda, fs, x, 0.0).unwrap()
}

fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn quiet(hr: f64, depth: f64, freq: f64, jitter: f64) -> PhysioProfile {
    PhysioProfile {
        hr_bpm: hr,
        hrv_depth_ms: depth,
        hrv_freq_hz: freq,
        beat_jitter_ms: jitter,
        scr_rate_per_min: 0.0,
        scr_amplitude_us: 0.0,
        tonic_us: 5.0,
        tonic_ramp_us: 0.0,
        tonic_wave_us: 0.0,
    }
}

#[test]
fn cascade_response_squared_matches_bilinear_butterworth() {
    for order in 1..=4 {
        let sections = butterworth_sections(order, 0.2, 200.0).unwrap();
        for f in [0.0, 0.05, 0.2, 0.5, 3.0, 40.0] {
            let mag: f64 = sections.iter().map(|s| s.magnitude(f, 200.0)).product();
            let warped = (PI * f / 200.0).tan() / (PI * 0.2 / 200.0).tan();
            let want = 1.0 / (1.0 + warped.powi(2 * order as i32));
            assert!((mag * mag - want).abs() < 1e-9, "order {order} f {f}: {} vs {want}", mag * mag);
            assert!((zero_phase_gain(order, 0.2, f, 200.0) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn cutoff_gain_is_one_half() {
    let fs = 200.0;
    let x = sine(SCSR_CUTOFF_HZ, fs, 400 * 200);
    let y = lowpass(&series(fs, x.clone()), &FilterSpec::lowpass(SCSR_CUTOFF_HZ)).unwrap();
    let mid = 100 * 200..300 * 200;
    let g = rms(&y.samples[mid.clone()]) / rms(&x[mid]);
    assert!((g - 0.5).abs() < 1e-3, "gain {g}");
}

#[test]
fn zero_phase_output_is_not_delayed() {
    let fs = 50.0;
    let x: Vec<f64> = (0..5000).map(|i| (-(((i as f64) - 2500.0) / 200.0).powi(2)).exp()).collect();
    let y = lowpass(&series(fs, x), &FilterSpec::lowpass(0.5)).unwrap();
    let peak = y.samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(peak, 2500);
}

#[test]
fn causal_filter_lags() {
    let fs = 50.0;
    let x: Vec<f64> = (0..5000).map(|i| (-(((i as f64) - 2500.0) / 200.0).powi(2)).exp()).collect();
    let spec = FilterSpec {
        zero_phase: false,
        ..FilterSpec::lowpass(0.5)
    };
    let y = lowpass(&series(fs, x), &spec).unwrap();
    let peak = y.samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 2500);
}

#[test]
fn constant_passes_unchanged() {
    let y = lowpass(&series(200.0, vec![3.25; 1000]), &FilterSpec::lowpass(0.08)).unwrap();
    assert!(y.samples.iter().all(|v| (v - 3.25).abs() < 1e-9));
}

#[test]
fn bad_cutoff_and_short_input_are_errors() {
    assert!(butterworth_sections(2, 120.0, 200.0).is_err());
    assert!(butterworth_sections(2, 0.0, 200.0).is_err());
    assert!(lowpass(&series(200.0, vec![1.0; 3]), &FilterSpec::lowpass(0.2)).is_err());
}

#[test]
fn welch_finds_tone_and_preserves_power() {
    let fs = 4.0;
    let x: Vec<f64> = sine(0.25, fs, 4096).iter().map(|v| 2.0 * v).collect();
    let psd = welch(&x, fs, 256).unwrap();
    assert!((psd.peak_frequency() - 0.25).abs() <= psd.resolution_hz);
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((psd.total_power() - var).abs() / var < 0.05);
}

#[test]
fn band_integrals_add() {
    let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let psd = welch(&x, 4.0, 256).unwrap();
    let whole = band_power(&psd, 0.04, 0.4).value;
    let parts = band_power(&psd, 0.04, 0.17).value + band_power(&psd, 0.17, 0.4).value;
    assert!((whole - parts).abs() < 1e-12 * whole.max(1.0));
    assert!(!band_power(&psd, 5.0, 6.0).in_support);
}

#[test]
fn interval_spectrum_places_modulation_in_its_band() {
    let intervals: Vec<f64> = (0..400).map(|i| 800.0 + 40.0 * (2.0 * PI * 0.1 * i as f64 * 0.8).sin()).collect();
    let pp = PPIntervals::from_intervals(0.5, &intervals).unwrap();
    let psd = pp_psd(&pp).unwrap();
    let lf = band_power(&psd, LF_BAND.0, LF_BAND.1).value;
    let hf = band_power(&psd, HF_BAND.0, HF_BAND.1).value;
    assert!(lf > 20.0 * hf, "lf {lf} hf {hf}");
    let short = PPIntervals::from_intervals(0.0, &[800.0; 5]).unwrap();
    assert!(pp_psd(&short).is_err());
}

#[test]
fn peaks_track_planted_beats() {
    for seed in 0..5 {
        let profile = quiet(60.0 + 10.0 * seed as f64, 30.0, 0.1, 10.0);
        let (ppg, planted) = synth_ppg(&profile, 100.0, 200.0, 20.0, seed).unwrap();
        let pp = detect_pulse_peaks(&ppg).unwrap();
        let matched = planted
            .beat_times_s
            .iter()
            .filter(|&&t| pp.peak_times_s.iter().any(|&d| (d - t).abs() < 0.02))
            .count();
        assert!(matched + 1 >= planted.beat_times_s.len(), "seed {seed}: {matched}/{}", planted.beat_times_s.len());
        assert!(pp.peak_times_s.len() <= planted.beat_times_s.len() + 1);
    }
}

#[test]
fn peak_train_rejects_disorder() {
    assert!(PPIntervals::from_peak_times(vec![1.0, 0.5]).is_err());
    let pp = PPIntervals::from_peak_times(vec![0.0, 0.8, 1.7]).unwrap();
    assert_eq!(pp.intervals_ms.len(), 2);
    assert!((pp.intervals_ms[1] - 900.0).abs() < 1e-9);
}

#[test]
fn pearson_basics() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    assert!(pearson(&x, &[1.0, 2.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filter_is_linear_and_keeps_length(
        a in prop::collection::vec(-10.0f64..10.0, 50..400),
        seed in 0u64..1000,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let b: Vec<f64> = (0..a.len()).map(|i| (((i as u64 * 2654435761 + seed) % 1000) as f64) / 100.0 - 5.0).collect();
        let spec = FilterSpec::lowpass(2.0);
        let f = |x: Vec<f64>| lowpass(&series(50.0, x), &spec).unwrap().samples;
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        let (fa, fb, fc) = (f(a.clone()), f(b), f(combo));
        prop_assert_eq!(fa.len(), a.len());
        for i in 0..a.len() {
            let want = alpha * fa[i] + beta * fb[i];
            prop_assert!((fc[i] - want).abs() < 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn psd_is_nonnegative(x in prop::collection::vec(-5.0f64..5.0, 16..300)) {
        let psd = welch(&x, 4.0, 64).unwrap();
        prop_assert!(psd.power.iter().all(|&p| p >= 0.0 && p.is_finite()));
    }
}
