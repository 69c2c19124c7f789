use super::mean;
use super::{DetectError, SeriesView};
use crate::model::{ChangePointDetails, Direction, SeasonalityDetails, TrendDetails};

/// Least-squares line through `(i, values[i])`: slope, intercept and r².
/// r² is 0 for a constant series.
pub fn ols(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = mean(values);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 && sxx > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (slope, intercept, r2)
}

/// Linear trend over the index, reported when r² reaches `min_r2`.
pub fn detect_trend(series: &SeriesView, min_r2: f64) -> Result<Option<TrendDetails>, DetectError> {
    if series.len() < 3 {
        return Err(DetectError::TooShort {
            needed: 3,
            got: series.len(),
        });
    }
    let (slope, intercept, r2) = ols(series.values());
    if slope == 0.0 || r2 < min_r2 {
        return Ok(None);
    }
    let direction = if slope > 0.0 {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    Ok(Some(TrendDetails {
        slope,
        intercept,
        r2,
        direction,
    }))
}

/// Biased sample autocorrelation for lags `0..=max_lag`; all zeros for a
/// constant series.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Vec<f64> {
    let m = mean(values);
    let denom: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (0..=max_lag)
        .map(|k| {
            if denom == 0.0 || k >= values.len() {
                return 0.0;
            }
            values
                .iter()
                .zip(&values[k..])
                .map(|(a, b)| (a - m) * (b - m))
                .sum::<f64>()
                / denom
        })
        .collect()
}

/// Strongest autocorrelation lag in `2..=max_period`, reported when it
/// reaches `min_acf` and is a local peak of the autocorrelation function.
pub fn detect_seasonality(
    series: &SeriesView,
    max_period: usize,
    min_acf: f64,
) -> Result<Option<SeasonalityDetails>, DetectError> {
    let needed = 3 * max_period.max(2);
    if series.len() < needed {
        return Err(DetectError::TooShort {
            needed,
            got: series.len(),
        });
    }
    let acf = autocorrelation(series.values(), max_period + 1);
    let Some(period) = (2..=max_period).reduce(|best, k| if acf[k] > acf[best] { k } else { best })
    else {
        return Ok(None);
    };
    let peak = acf[period];
    if peak < min_acf || acf[period] <= acf[period - 1] || acf[period] < acf[period + 1] {
        return Ok(None);
    }
    Ok(Some(SeasonalityDetails {
        period,
        acf_peak: peak,
    }))
}

fn sse(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Single level shift maximizing the drop in squared error, reported when
/// the drop is at least `min_reduction` of the total and the two-level fit
/// beats a straight line.
pub fn detect_changepoint(
    series: &SeriesView,
    min_reduction: f64,
) -> Result<Option<ChangePointDetails>, DetectError> {
    let v = series.values();
    if v.len() < 8 {
        return Err(DetectError::TooShort {
            needed: 8,
            got: v.len(),
        });
    }
    let total = sse(v);
    if total <= 0.0 {
        return Ok(None);
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 2..=v.len() - 2 {
        let split = sse(&v[..i]) + sse(&v[i..]);
        if best.is_none_or(|(_, b)| split < b) {
            best = Some((i, split));
        }
    }
    let (index, split) = best.expect("at least one candidate split");
    let reduction = (total - split) / total;
    let (slope, intercept, _) = ols(v);
    let linear: f64 = v
        .iter()
        .enumerate()
        .map(|(i, y)| (y - slope * i as f64 - intercept).powi(2))
        .sum();
    if reduction < min_reduction || split >= linear {
        return Ok(None);
    }
    Ok(Some(ChangePointDetails {
        index,
        mean_before: mean(&v[..index]),
        mean_after: mean(&v[index..]),
        sse_reduction: reduction,
        label: None,
    }))
}
