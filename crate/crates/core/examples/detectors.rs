//! Runs every series and point detector on small synthetic inputs.
//!
//! ```text
//! cargo run -p storyline --example detectors
//! ```

use std::collections::BTreeMap;

use storyline::detect::{
    compare_period, detect_changepoint, detect_distribution, detect_outliers_3sigma,
    detect_seasonality, detect_sr_anomaly, detect_trend, forecast, iforest_scores, PeriodKind,
    SeriesView,
};
use storyline::model::parse_time_key;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tau = std::f64::consts::TAU;
    let mut seasonal: Vec<f64> = (0..48)
        .map(|t| 100.0 + 2.0 * t as f64 + 15.0 * (tau * t as f64 / 12.0).sin())
        .collect();
    seasonal[30] += 60.0;
    let series = SeriesView::from_values(seasonal.clone())?;

    println!("3-sigma outliers: {:?}", detect_outliers_3sigma(&seasonal)?);
    println!("spectral residual: {:?}", detect_sr_anomaly(&series, 3)?);
    println!("trend: {:?}", detect_trend(&series, 0.6)?);
    // a trend or a spike swamps the autocorrelation, so use a clean cycle
    let cycle: Vec<f64> = (0..72)
        .map(|t| 100.0 + 15.0 * (tau * t as f64 / 12.0).sin())
        .collect();
    println!(
        "seasonality: {:?}",
        detect_seasonality(&SeriesView::from_values(cycle)?, 12, 0.5)?
    );
    println!("forecast: {:?}", forecast(&series, 6, 12, 0.5)?);

    let step: Vec<f64> = (0..30).map(|i| if i < 18 { 5.0 } else { 12.0 }).collect();
    println!(
        "change point: {:?}",
        detect_changepoint(&SeriesView::from_values(step)?, 0.5)?
    );

    let months = (0..24)
        .map(|i| parse_time_key(&format!("{}-{:02}-01", 2022 + i / 12, i % 12 + 1)))
        .collect::<Option<Vec<i64>>>()
        .ok_or("bad month key")?;
    let monthly = SeriesView::new(months, (0..24).map(|i| 50.0 + i as f64).collect())?;
    println!(
        "year over year: {:?}",
        compare_period(&monthly, PeriodKind::YoY)
    );
    println!(
        "month over month: {:?}",
        compare_period(&monthly, PeriodKind::MoM)
    );

    let shares: BTreeMap<String, f64> = [
        ("north", 70.0),
        ("south", 10.0),
        ("east", 12.0),
        ("west", 8.0),
    ]
    .map(|(k, v)| (k.to_string(), v))
    .into();
    println!("distribution: {:?}", detect_distribution(&shares)?);

    let mut points: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i % 7) as f64 * 0.1, (i % 5) as f64 * 0.1])
        .collect();
    points.push(vec![8.0, 8.0]);
    let scores = iforest_scores(&points, 100, 256, 42)?;
    println!(
        "isolation forest: far point {:.3}, median point {:.3}",
        scores[40], scores[0]
    );
    Ok(())
}
