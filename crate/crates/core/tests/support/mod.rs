//! Random insight generation and description mutation shared by the
//! narrative tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use storyline::model::{
    ChangePointDetails, CorrelationDetails, Direction, DistributionDetails, ForecastDetails,
    ForecastMethod, ForestDetails, OutlierPointDetails, PeriodChange, RootCauseDetails,
    SaliencyDetails, SeasonalityDetails, TrendDetails,
};
use storyline::narrative::{extract_numbers, format_number, matches_within_tolerance};
use storyline::{Aggregation, Details, FilterPredicate, IndicatorSpec, Insight, Subspace};

const REGIONS: [&str; 5] = ["north", "south", "east", "west", "central"];
const PRODUCTS: [&str; 4] = ["laptop", "phone", "tablet", "monitor"];
const COLUMNS: [&str; 3] = ["revenue", "units", "cost"];

fn magnitude(rng: &mut impl Rng) -> f64 {
    let scale = 10f64.powi(rng.random_range(-2..6));
    let x = rng.random_range(0.0..10.0) * scale;
    if rng.random_bool(0.3) {
        x.round()
    } else {
        x
    }
}

fn month_label(rng: &mut impl Rng) -> String {
    format!(
        "{}-{:02}",
        rng.random_range(2018..2025),
        rng.random_range(1..=12)
    )
}

fn maybe_label(rng: &mut impl Rng) -> Option<String> {
    rng.random_bool(0.7).then(|| month_label(rng))
}

fn period_change(rng: &mut impl Rng) -> PeriodChange {
    let prior = magnitude(rng) + 1.0;
    let current = magnitude(rng);
    PeriodChange {
        current,
        prior,
        pct_change: (current - prior) / prior,
        current_label: maybe_label(rng),
        prior_label: maybe_label(rng),
    }
}

fn details(kind: usize, rng: &mut impl Rng) -> Details {
    match kind {
        0 => Details::Distribution(DistributionDetails {
            top_member: REGIONS.choose(rng).unwrap().to_string(),
            share: rng.random_range(0.2..1.0),
            gini: rng.random_range(0.0..0.9),
        }),
        1 => {
            let zscore = rng.random_range(3.0..9.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Details::OutlierPoint(OutlierPointDetails {
                index: rng.random_range(0..60),
                value: magnitude(rng),
                zscore,
                label: maybe_label(rng),
            })
        }
        2 => {
            let n = rng.random_range(1..5);
            Details::OutlierForest(ForestDetails {
                indices: (0..n).map(|_| rng.random_range(0..500)).collect(),
                anomaly_scores: (0..n).map(|_| rng.random_range(0.65..0.95)).collect(),
            })
        }
        3 => Details::TimeSeriesAnomaly(SaliencyDetails {
            index: rng.random_range(0..60),
            value: magnitude(rng),
            saliency: rng.random_range(0.1..50.0),
            zscore: rng.random_range(3.0..20.0),
            label: maybe_label(rng),
        }),
        4 => {
            let slope = magnitude(rng) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Details::Trend(TrendDetails {
                slope,
                intercept: magnitude(rng),
                r2: rng.random_range(0.3..1.0),
                direction: if slope >= 0.0 {
                    Direction::Increasing
                } else {
                    Direction::Decreasing
                },
            })
        }
        5 => Details::Seasonality(SeasonalityDetails {
            period: *[4usize, 7, 12, 24].choose(rng).unwrap(),
            acf_peak: rng.random_range(0.3..1.0),
        }),
        6 => Details::ChangePoint(ChangePointDetails {
            index: rng.random_range(1..59),
            mean_before: magnitude(rng),
            mean_after: magnitude(rng),
            sse_reduction: rng.random_range(0.3..1.0),
            label: maybe_label(rng),
        }),
        7 => {
            let horizon = rng.random_range(1..7);
            Details::Forecast(ForecastDetails {
                horizon,
                predictions: (0..horizon).map(|_| magnitude(rng)).collect(),
                method: *[
                    ForecastMethod::SimpleExponential,
                    ForecastMethod::HoltLinear,
                    ForecastMethod::HoltWintersAdditive,
                ]
                .choose(rng)
                .unwrap(),
                last_actual: magnitude(rng),
            })
        }
        8 => Details::YoY(period_change(rng)),
        9 => Details::MoM(period_change(rng)),
        10 => {
            let mut cols = COLUMNS.to_vec();
            cols.shuffle(rng);
            Details::Correlation(CorrelationDetails {
                dim_a: cols[0].to_string(),
                dim_b: cols[1].to_string(),
                pearson_r: rng.random_range(-1.0..1.0),
            })
        }
        _ => {
            let segments: BTreeMap<String, f64> = REGIONS
                .iter()
                .map(|r| (r.to_string(), rng.random_range(-500.0..500.0)))
                .collect();
            let parent: f64 = segments.values().sum();
            let (top, delta) = segments
                .iter()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(k, v)| (k.clone(), *v))
                .unwrap();
            Details::RootCause(RootCauseDetails {
                parent_delta: parent,
                contribution: if parent == 0.0 { 0.0 } else { delta / parent },
                segment_deltas: segments,
                top_segment: top,
            })
        }
    }
}

/// A structurally valid insight of a random type over a sales-like schema.
pub fn random_insight(rng: &mut impl Rng) -> Insight {
    let kind = rng.random_range(0..12);
    let mut predicates = Vec::new();
    if rng.random_bool(0.5) {
        predicates.push(FilterPredicate::equals(
            "region",
            *REGIONS.choose(rng).unwrap(),
        ));
    }
    if rng.random_bool(0.3) {
        predicates.push(FilterPredicate::equals(
            "product",
            *PRODUCTS.choose(rng).unwrap(),
        ));
    }
    let temporal = matches!(kind, 3..=9);
    let breakdown = if temporal { "order_month" } else { "channel" };
    let aggregation = *[Aggregation::Sum, Aggregation::Mean, Aggregation::Count]
        .choose(rng)
        .unwrap();
    Insight::new(
        "sales",
        Subspace::new(predicates, None).unwrap(),
        vec![breakdown.to_string()],
        vec![IndicatorSpec::new(
            *COLUMNS.choose(rng).unwrap(),
            aggregation,
        )],
        details(kind, rng),
        None,
    )
}

/// Byte spans of the numbers `extract_numbers` reads, each with a flag for
/// a trailing percent sign.
pub fn number_spans(text: &str) -> Vec<(usize, usize, bool)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if !b[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < b.len()
            && (b[i].is_ascii_digit()
                || (b[i] == b','
                    && b.get(i + 1..i + 4)
                        .is_some_and(|g| g.iter().all(u8::is_ascii_digit))
                    && !b.get(i + 4).is_some_and(u8::is_ascii_digit)))
        {
            i += 1;
        }
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        let pct = b.get(i) == Some(&b'%');
        out.push((start, i, pct));
        if pct {
            i += 1;
        }
    }
    out
}

const FACTORS: [f64; 10] = [1.37, 0.61, 1.83, 0.29, 2.71, 3.9, 0.13, 5.3, 7.7, 11.3];

/// Rewrites one randomly chosen number of `text` to a value more than 1%
/// away from the original and from every number in `allowed`. Returns the
/// new text and the injected value, or `None` when `text` has no numbers.
pub fn mutate_number(text: &str, allowed: &[f64], rng: &mut impl Rng) -> Option<(String, f64)> {
    let spans = number_spans(text);
    let &(start, end, pct) = spans.choose(rng)?;
    let literal: f64 = text[start..end].replace(',', "").parse().ok()?;
    for f in FACTORS {
        let candidate = if literal == 0.0 { f } else { literal * f };
        let rendered = format_number(candidate);
        let mutated = format!("{}{}{}", &text[..start], rendered, &text[end..]);
        let value = extract_numbers(&rendered).first().copied()? / if pct { 100.0 } else { 1.0 };
        let original = literal / if pct { 100.0 } else { 1.0 };
        let far = |a: f64| !matches_within_tolerance(value, a);
        if far(original) && allowed.iter().all(|&a| far(a)) {
            return Some((mutated, value));
        }
    }
    None
}
