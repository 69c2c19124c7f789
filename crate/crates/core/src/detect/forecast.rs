//! Exponential smoothing forecasts.

use super::mean;
use super::series::detect_seasonality;
use super::{DetectError, SeriesView};
use crate::model::{ForecastDetails, ForecastMethod};

const GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Each `fit` returns the one-step-ahead squared error and the forecast.
struct Simple {
    alpha: f64,
}

impl Simple {
    fn fit(&self, y: &[f64], horizon: usize) -> (f64, Vec<f64>) {
        let mut level = y[0];
        let mut err = 0.0;
        for &v in &y[1..] {
            err += (v - level).powi(2);
            level = self.alpha * v + (1.0 - self.alpha) * level;
        }
        (err, vec![level; horizon])
    }
}

struct Holt {
    alpha: f64,
    beta: f64,
}

impl Holt {
    fn fit(&self, y: &[f64], horizon: usize) -> (f64, Vec<f64>) {
        let (mut level, mut trend) = (y[0], y[1] - y[0]);
        let mut err = 0.0;
        for &v in &y[1..] {
            let predicted = level + trend;
            err += (v - predicted).powi(2);
            let next = self.alpha * v + (1.0 - self.alpha) * predicted;
            trend = self.beta * (next - level) + (1.0 - self.beta) * trend;
            level = next;
        }
        (
            err,
            (1..=horizon).map(|h| level + h as f64 * trend).collect(),
        )
    }
}

struct HoltWinters {
    alpha: f64,
    beta: f64,
    gamma: f64,
    period: usize,
}

impl HoltWinters {
    fn fit(&self, y: &[f64], horizon: usize) -> (f64, Vec<f64>) {
        let m = self.period;
        let first = mean(&y[..m]);
        let second = mean(&y[m..2 * m]);
        let mut level = first;
        let mut trend = (second - first) / m as f64;
        let mut season: Vec<f64> = y[..m].iter().map(|v| v - first).collect();
        let mut err = 0.0;
        for (t, &v) in y.iter().enumerate().skip(m) {
            let s = season[t - m];
            let predicted = level + trend + s;
            err += (v - predicted).powi(2);
            let next = self.alpha * (v - s) + (1.0 - self.alpha) * (level + trend);
            trend = self.beta * (next - level) + (1.0 - self.beta) * trend;
            season.push(self.gamma * (v - next) + (1.0 - self.gamma) * s);
            level = next;
        }
        let n = y.len();
        let predictions = (1..=horizon)
            .map(|h| level + h as f64 * trend + season[n - m + (h - 1) % m])
            .collect();
        (err, predictions)
    }
}

fn best<I: Iterator<Item = (f64, Vec<f64>)>>(fits: I) -> Vec<f64> {
    fits.fold(None, |acc: Option<(f64, Vec<f64>)>, (e, p)| match acc {
        Some((be, _)) if be <= e || !e.is_finite() => acc,
        _ => Some((e, p)),
    })
    .map(|(_, p)| p)
    .unwrap_or_default()
}

/// Forecasts `horizon` steps ahead. Series shorter than eight points use
/// simple exponential smoothing; seasonal series use additive Holt-Winters;
/// the rest use Holt's linear method. Smoothing constants are chosen by
/// grid search on one-step-ahead squared error.
pub fn forecast(
    series: &SeriesView,
    horizon: usize,
    max_period: usize,
    min_acf: f64,
) -> Result<ForecastDetails, DetectError> {
    let y = series.values();
    if y.len() < 4 {
        return Err(DetectError::TooShort {
            needed: 4,
            got: y.len(),
        });
    }
    let last_actual = y[y.len() - 1];
    let seasonal = if y.len() >= 8 {
        let cap = max_period.min(y.len() / 3);
        if cap >= 2 {
            detect_seasonality(series, cap, min_acf)?
        } else {
            None
        }
    } else {
        None
    };
    let (method, predictions) = if y.len() < 8 {
        (
            ForecastMethod::SimpleExponential,
            best(GRID.iter().map(|&alpha| Simple { alpha }.fit(y, horizon))),
        )
    } else if let Some(s) = seasonal {
        let fits = GRID.iter().flat_map(|&alpha| {
            GRID.iter().flat_map(move |&beta| {
                GRID.iter().map(move |&gamma| {
                    HoltWinters {
                        alpha,
                        beta,
                        gamma,
                        period: s.period,
                    }
                    .fit(y, horizon)
                })
            })
        });
        (ForecastMethod::HoltWintersAdditive, best(fits))
    } else {
        let fits = GRID.iter().flat_map(|&alpha| {
            GRID.iter()
                .map(move |&beta| Holt { alpha, beta }.fit(y, horizon))
        });
        (ForecastMethod::HoltLinear, best(fits))
    };
    let predictions = if predictions.iter().all(|p| p.is_finite()) {
        predictions
    } else {
        vec![last_actual; horizon]
    };
    Ok(ForecastDetails {
        horizon,
        predictions,
        method,
        last_actual,
    })
}
