use serde::{Deserialize, Serialize};

use crate::data::SampleSeries;
use crate::{Error, Result};

/// Channel-agnostic statistics of a raw window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticalFeatureSet {
    pub mean: f64,
    pub std: f64,
    pub mean_abs_d1: f64,
    pub mean_abs_d2: f64,
    pub ratio_d1_std: f64,
    pub ratio_d2_std: f64,
    /// Set when `std` is zero; both ratios are then reported as 0.
    pub degenerate: bool,
}

impl StatisticalFeatureSet {
    pub const NAMES: [&'static str; 6] = ["mean", "std", "mean_abs_d1", "mean_abs_d2", "ratio_d1_std", "ratio_d2_std"];

    pub fn values(&self) -> [f64; 6] {
        [self.mean, self.std, self.mean_abs_d1, self.mean_abs_d2, self.ratio_d1_std, self.ratio_d2_std]
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub(crate) fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub(crate) fn mean_abs_diff(x: &[f64], order: usize) -> f64 {
    match order {
        1 => mean(&x.windows(2).map(|w| (w[1] - w[0]).abs()).collect::<Vec<_>>()),
        2 => mean(&x.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).collect::<Vec<_>>()),
        _ => unreachable!("only first and second differences are used"),
    }
}

/// Mean, sample std, mean absolute first/second differences and their ratios to the std.
pub fn statistical_features(series: &SampleSeries) -> Result<StatisticalFeatureSet> {
    let x = &series.samples;
    if x.len() < 3 {
        return Err(Error::TooShort { len: x.len(), min: 3 });
    }
    let std = sample_std(x);
    let d1 = mean_abs_diff(x, 1);
    let d2 = mean_abs_diff(x, 2);
    let degenerate = std == 0.0;
    let ratio = |d: f64| if degenerate { 0.0 } else { d / std };
    Ok(StatisticalFeatureSet {
        mean: mean(x),
        std,
        mean_abs_d1: d1,
        mean_abs_d2: d2,
        ratio_d1_std: ratio(d1),
        ratio_d2_std: ratio(d2),
        degenerate,
    })
}
