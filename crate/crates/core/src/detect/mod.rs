//! Pattern detectors. Each one is a pure function over a series, a point
//! cloud or a set of aggregates and returns the type-specific details of the
//! insights it finds; scoring happens elsewhere.

mod forecast;
mod iforest;
mod outlier;
mod period;
mod relations;
mod series;
mod spectral;

pub use forecast::forecast;
pub use iforest::{
    average_path_length, detect_outliers_iforest, iforest_scores, IFOREST_THRESHOLD,
};
pub use outlier::{detect_distribution, detect_outliers_3sigma, gini};
pub use period::{compare_period, PeriodKind};
pub use relations::{detect_correlation, root_cause, ROOT_CAUSE_TOLERANCE};
pub use series::{autocorrelation, detect_changepoint, detect_seasonality, detect_trend, ols};
pub use spectral::{detect_sr_anomaly, saliency_map};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{format_time_key, ModelError};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("too few paired observations: need at least {needed}, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("parent delta is zero")]
    ZeroParentDelta,
    #[error("segment deltas sum to {sum}, parent delta is {parent}")]
    InconsistentDeltas { sum: f64, parent: f64 },
    #[error("negative mass for member `{0}`")]
    NegativeMass(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Day,
    Week,
    Month,
    Quarter,
    Year,
    Irregular,
}

/// Mean of a slice, 0 when empty.
pub(crate) fn mean(values: &[f64]) -> f64 {
    crate::stats::mean(values).unwrap_or(0.0)
}

/// Population standard deviation, 0 when empty.
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    crate::stats::std_dev(values).unwrap_or(0.0)
}

const DAY_MS: f64 = 86_400_000.0;

impl Granularity {
    /// Classifies the median spacing between consecutive timestamps.
    pub fn infer(timestamps: &[i64]) -> Granularity {
        if timestamps.len() < 2 {
            return Granularity::Irregular;
        }
        let diffs: Vec<f64> = timestamps
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / DAY_MS)
            .collect();
        let days = crate::stats::median(&diffs).unwrap_or(0.0);
        match days {
            d if (d - 1.0).abs() < 1e-9 => Granularity::Day,
            d if (d - 7.0).abs() < 1e-9 => Granularity::Week,
            d if (28.0..=31.0).contains(&d) => Granularity::Month,
            d if (89.0..=92.0).contains(&d) => Granularity::Quarter,
            d if (365.0..=366.0).contains(&d) => Granularity::Year,
            _ => Granularity::Irregular,
        }
    }
}

/// A time series with strictly ascending timestamps (epoch milliseconds).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesView {
    timestamps: Vec<i64>,
    values: Vec<f64>,
    granularity: Granularity,
}

impl SeriesView {
    pub fn new(timestamps: Vec<i64>, values: Vec<f64>) -> Result<Self, DetectError> {
        if timestamps.len() != values.len() {
            return Err(DetectError::Invalid(
                "timestamps and values differ in length".into(),
            ));
        }
        if values.is_empty() {
            return Err(DetectError::TooShort { needed: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DetectError::Invalid("non-finite value".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DetectError::Invalid(
                "timestamps must be strictly ascending".into(),
            ));
        }
        let granularity = Granularity::infer(&timestamps);
        Ok(SeriesView {
            timestamps,
            values,
            granularity,
        })
    }

    /// Daily series starting at the epoch.
    pub fn from_values(values: Vec<f64>) -> Result<Self, DetectError> {
        let ts = (0..values.len() as i64)
            .map(|i| i * DAY_MS as i64)
            .collect();
        Self::new(ts, values)
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self, i: usize) -> String {
        format_time_key(self.timestamps[i])
    }

    pub fn labels(&self) -> Vec<String> {
        self.timestamps
            .iter()
            .map(|&t| format_time_key(t))
            .collect()
    }
}

/// Emission thresholds and algorithm parameters for the detector sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub seed: u64,
    pub iforest_trees: usize,
    pub iforest_sample_size: usize,
    pub iforest_threshold: f64,
    pub sr_window: usize,
    pub trend_min_r2: f64,
    pub seasonality_min_acf: f64,
    pub max_period: usize,
    pub changepoint_min_reduction: f64,
    pub correlation_min_abs_r: f64,
    pub forecast_horizon: usize,
    /// Series detectors skip subspaces averaging fewer rows per period.
    pub min_period_support: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            seed: 42,
            iforest_trees: 100,
            iforest_sample_size: 256,
            iforest_threshold: IFOREST_THRESHOLD,
            sr_window: 3,
            trend_min_r2: 0.6,
            seasonality_min_acf: 0.5,
            max_period: 12,
            changepoint_min_reduction: 0.5,
            correlation_min_abs_r: 0.7,
            forecast_horizon: 3,
            min_period_support: 3.0,
        }
    }
}
