//! Deterministic per-type sentences and the keyword classifier that reads
//! an insight type back out of free text.

use super::numbers::{
    format_number as num, format_percent as pct, format_signed_percent as signed_pct,
};
use crate::model::{Aggregation, Details, Direction, IndicatorSpec, Insight, InsightType};

pub fn indicator_phrase(ind: &IndicatorSpec) -> String {
    let what = match ind.aggregation {
        Aggregation::Sum => "total",
        Aggregation::Mean => "average",
        Aggregation::Count => "count of",
        Aggregation::Min => "minimum",
        Aggregation::Max => "maximum",
    };
    format!("{what} {}", ind.column)
}

fn scope(insight: &Insight) -> String {
    if insight.subspace.is_root() {
        "all data".into()
    } else {
        insight
            .subspace
            .predicates()
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Sentence describing `insight`, built only from its own fields.
pub fn render(insight: &Insight) -> String {
    let ind = insight
        .indicators
        .first()
        .map(indicator_phrase)
        .unwrap_or_else(|| "the data".into());
    let by = insight
        .breakdowns
        .first()
        .cloned()
        .unwrap_or_else(|| "records".into());
    let scope = scope(insight);
    match &insight.details {
        Details::Distribution(d) => format!(
            "Across {by} in {scope}, {} holds the largest share of {ind} at {}, with a Gini coefficient of {}.",
            d.top_member,
            pct(d.share),
            num(d.gini)
        ),
        Details::OutlierPoint(d) => {
            let side = if d.zscore >= 0.0 { "above" } else { "below" };
            let at = d.label.as_deref().map(|l| format!(" for {l}")).unwrap_or_default();
            format!(
                "In {scope}, {ind}{at} was {}, an outlier {} standard deviations {side} typical across {by}.",
                num(d.value),
                num(d.zscore.abs())
            )
        }
        Details::OutlierForest(d) => {
            let top = d.anomaly_scores.iter().copied().fold(0.0, f64::max);
            format!(
                "Isolation forest scoring flags unusual records in {scope}, with isolation scores up to {}.",
                num(top)
            )
        }
        Details::TimeSeriesAnomaly(d) => {
            let at = d.label.as_deref().map(|l| format!(" on {l}")).unwrap_or_default();
            format!(
                "In {scope}, {ind} was anomalous{at} at {}, with spectral saliency {} standard deviations above the norm.",
                num(d.value),
                num(d.zscore)
            )
        }
        Details::Trend(d) => {
            let dir = match d.direction {
                Direction::Increasing => "an increasing",
                Direction::Decreasing => "a decreasing",
            };
            format!(
                "In {scope}, {ind} shows {dir} trend over {by}, changing by {} per period (R-squared {}).",
                num(d.slope.abs()),
                num(d.r2)
            )
        }
        Details::Seasonality(d) => format!(
            "In {scope}, {ind} follows a seasonal cycle repeating every {} periods of {by} (autocorrelation {}).",
            d.period,
            num(d.acf_peak)
        ),
        Details::ChangePoint(d) => {
            let at = d.label.as_deref().map(|l| format!(" at {l}")).unwrap_or_default();
            format!(
                "In {scope}, {ind} shifted level{at}, moving from an average of {} to {}.",
                num(d.mean_before),
                num(d.mean_after)
            )
        }
        Details::Forecast(d) => {
            let target = d.predictions.last().copied().unwrap_or(d.last_actual);
            format!(
                "Using {}, {ind} in {scope} is forecast to reach {} within {} periods, from {} at the latest observation.",
                d.method.display_name(),
                num(target),
                d.horizon,
                num(d.last_actual)
            )
        }
        Details::YoY(d) | Details::MoM(d) => {
            let kind = if insight.insight_type == InsightType::YoY { "year-over-year" } else { "month-over-month" };
            let when = |label: &Option<String>| label.as_deref().map(|l| format!(" in {l}")).unwrap_or_default();
            format!(
                "In {scope}, {ind} changed {} {kind}, from {}{} to {}{}.",
                signed_pct(d.pct_change),
                num(d.prior),
                when(&d.prior_label),
                num(d.current),
                when(&d.current_label)
            )
        }
        Details::Correlation(d) => {
            let sign = if d.pearson_r >= 0.0 { "positively" } else { "negatively" };
            format!(
                "In {scope}, {} and {} are {sign} correlated (Pearson r {}).",
                d.dim_a,
                d.dim_b,
                num(d.pearson_r)
            )
        }
        Details::RootCause(d) => format!(
            "In {scope}, the change of {} in {ind} is driven mainly by {}, contributing {} of it.",
            num(d.parent_delta),
            d.top_segment,
            pct(d.contribution)
        ),
    }
}

/// Keyword rules, checked in order; the first match decides.
const KEYWORDS: &[(&str, InsightType)] = &[
    ("year-over-year", InsightType::YoY),
    ("month-over-month", InsightType::MoM),
    ("forecast", InsightType::Forecast),
    ("isolation", InsightType::OutlierForest),
    ("saliency", InsightType::TimeSeriesAnomaly),
    ("anomalous", InsightType::TimeSeriesAnomaly),
    ("outlier", InsightType::OutlierPoint),
    ("standard deviations", InsightType::OutlierPoint),
    ("seasonal", InsightType::Seasonality),
    ("shifted level", InsightType::ChangePoint),
    ("level shift", InsightType::ChangePoint),
    ("change point", InsightType::ChangePoint),
    ("correlat", InsightType::Correlation),
    ("driven", InsightType::RootCause),
    ("contribut", InsightType::RootCause),
    ("trend", InsightType::Trend),
    ("share", InsightType::Distribution),
    ("distribution", InsightType::Distribution),
];

/// The insight type a text talks about, judged by keywords.
pub fn classify_type(text: &str) -> Option<InsightType> {
    let lower = text.to_lowercase();
    KEYWORDS
        .iter()
        .find(|(k, _)| lower.contains(k))
        .map(|&(_, t)| t)
}
