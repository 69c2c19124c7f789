//! Spectral residual saliency.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{mean, std_dev};
use super::{DetectError, SeriesView};
use crate::model::SaliencyDetails;

const EPS: f64 = 1e-8;

/// Trailing moving average; the first `n - 1` positions average over the
/// values seen so far.
fn average_filter(values: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if i >= n {
            acc -= values[i - n];
        }
        out.push(acc / (i + 1).min(n) as f64);
    }
    out
}

/// Saliency of every point of the mean-centred series.
pub fn saliency_map(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let m = mean(values);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let amp: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
    let tiny: Vec<bool> = amp.iter().map(|&a| a <= EPS).collect();
    let log_amp: Vec<f64> = amp
        .iter()
        .zip(&tiny)
        .map(|(&a, &t)| if t { 0.0 } else { a.ln() })
        .collect();
    let smoothed = average_filter(&log_amp, window.max(1));
    for i in 0..n {
        if tiny[i] {
            buf[i] = Complex::new(0.0, 0.0);
        } else {
            let residual = (log_amp[i] - smoothed[i]).exp();
            buf[i] *= residual / amp[i];
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.norm() / n as f64).collect()
}

/// Points whose saliency exceeds the map's mean by three standard
/// deviations, in index order.
pub fn detect_sr_anomaly(
    series: &SeriesView,
    window: usize,
) -> Result<Vec<SaliencyDetails>, DetectError> {
    let needed = 2 * window.max(1);
    if series.len() < needed {
        return Err(DetectError::TooShort {
            needed,
            got: series.len(),
        });
    }
    let sal = saliency_map(series.values(), window);
    let m = mean(&sal);
    let sd = std_dev(&sal);
    if !(sd > 1e-12 * m.abs().max(1e-12)) {
        return Ok(Vec::new());
    }
    Ok(sal
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > m + 3.0 * sd)
        .map(|(i, &s)| SaliencyDetails {
            index: i,
            value: series.values()[i],
            saliency: s,
            zscore: (s - m) / sd,
            label: None,
        })
        .collect())
}
