use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::aggregate::IndicatorSpec;
use super::filter::Subspace;
use super::ModelError;
use crate::json::to_canonical_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InsightType {
    #[serde(rename = "distribution")]
    Distribution,
    #[serde(rename = "outlier_point")]
    OutlierPoint,
    #[serde(rename = "outlier_forest")]
    OutlierForest,
    #[serde(rename = "time_series_anomaly")]
    TimeSeriesAnomaly,
    #[serde(rename = "trend")]
    Trend,
    #[serde(rename = "seasonality")]
    Seasonality,
    #[serde(rename = "change_point")]
    ChangePoint,
    #[serde(rename = "forecast")]
    Forecast,
    #[serde(rename = "yoy")]
    YoY,
    #[serde(rename = "mom")]
    MoM,
    #[serde(rename = "correlation")]
    Correlation,
    #[serde(rename = "root_cause")]
    RootCause,
}

impl InsightType {
    pub const ALL: [InsightType; 12] = [
        InsightType::Distribution,
        InsightType::OutlierPoint,
        InsightType::OutlierForest,
        InsightType::TimeSeriesAnomaly,
        InsightType::Trend,
        InsightType::Seasonality,
        InsightType::ChangePoint,
        InsightType::Forecast,
        InsightType::YoY,
        InsightType::MoM,
        InsightType::Correlation,
        InsightType::RootCause,
    ];

    /// Serialized name, e.g. `outlier_point`.
    pub fn as_str(self) -> &'static str {
        match self {
            InsightType::Distribution => "distribution",
            InsightType::OutlierPoint => "outlier_point",
            InsightType::OutlierForest => "outlier_forest",
            InsightType::TimeSeriesAnomaly => "time_series_anomaly",
            InsightType::Trend => "trend",
            InsightType::Seasonality => "seasonality",
            InsightType::ChangePoint => "change_point",
            InsightType::Forecast => "forecast",
            InsightType::YoY => "yoy",
            InsightType::MoM => "mom",
            InsightType::Correlation => "correlation",
            InsightType::RootCause => "root_cause",
        }
    }

    /// Human-readable name, e.g. `outlier point`.
    pub fn display_name(self) -> &'static str {
        match self {
            InsightType::Distribution => "distribution",
            InsightType::OutlierPoint => "outlier point",
            InsightType::OutlierForest => "outlier forest",
            InsightType::TimeSeriesAnomaly => "time series anomaly",
            InsightType::Trend => "trend",
            InsightType::Seasonality => "seasonality",
            InsightType::ChangePoint => "change point",
            InsightType::Forecast => "forecast",
            InsightType::YoY => "year over year",
            InsightType::MoM => "month over month",
            InsightType::Correlation => "correlation",
            InsightType::RootCause => "root cause",
        }
    }

    /// Types whose evidence is a time series.
    pub fn is_temporal(self) -> bool {
        matches!(
            self,
            InsightType::TimeSeriesAnomaly
                | InsightType::Trend
                | InsightType::Seasonality
                | InsightType::ChangePoint
                | InsightType::Forecast
                | InsightType::YoY
                | InsightType::MoM
        )
    }
}

impl fmt::Display for InsightType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    SimpleExponential,
    HoltLinear,
    HoltWintersAdditive,
}

impl ForecastMethod {
    pub fn display_name(self) -> &'static str {
        match self {
            ForecastMethod::SimpleExponential => "simple exponential smoothing",
            ForecastMethod::HoltLinear => "Holt linear",
            ForecastMethod::HoltWintersAdditive => "Holt-Winters",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionDetails {
    pub top_member: String,
    pub share: f64,
    pub gini: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierPointDetails {
    pub index: usize,
    pub value: f64,
    pub zscore: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestDetails {
    pub indices: Vec<usize>,
    pub anomaly_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyDetails {
    pub index: usize,
    pub value: f64,
    pub saliency: f64,
    /// Saliency standardized against the whole saliency map.
    pub zscore: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendDetails {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalityDetails {
    pub period: usize,
    pub acf_peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointDetails {
    pub index: usize,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Fraction of the total sum of squares removed by the split.
    pub sse_reduction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDetails {
    pub horizon: usize,
    pub predictions: Vec<f64>,
    pub method: ForecastMethod,
    pub last_actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodChange {
    pub current: f64,
    pub prior: f64,
    pub pct_change: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDetails {
    pub dim_a: String,
    pub dim_b: String,
    pub pearson_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCauseDetails {
    pub parent_delta: f64,
    pub segment_deltas: BTreeMap<String, f64>,
    pub top_segment: String,
    pub contribution: f64,
}

/// Type-specific payload of an insight.
#[derive(Debug, Clone, PartialEq)]
pub enum Details {
    Distribution(DistributionDetails),
    OutlierPoint(OutlierPointDetails),
    OutlierForest(ForestDetails),
    TimeSeriesAnomaly(SaliencyDetails),
    Trend(TrendDetails),
    Seasonality(SeasonalityDetails),
    ChangePoint(ChangePointDetails),
    Forecast(ForecastDetails),
    YoY(PeriodChange),
    MoM(PeriodChange),
    Correlation(CorrelationDetails),
    RootCause(RootCauseDetails),
}

impl Details {
    pub fn insight_type(&self) -> InsightType {
        match self {
            Details::Distribution(_) => InsightType::Distribution,
            Details::OutlierPoint(_) => InsightType::OutlierPoint,
            Details::OutlierForest(_) => InsightType::OutlierForest,
            Details::TimeSeriesAnomaly(_) => InsightType::TimeSeriesAnomaly,
            Details::Trend(_) => InsightType::Trend,
            Details::Seasonality(_) => InsightType::Seasonality,
            Details::ChangePoint(_) => InsightType::ChangePoint,
            Details::Forecast(_) => InsightType::Forecast,
            Details::YoY(_) => InsightType::YoY,
            Details::MoM(_) => InsightType::MoM,
            Details::Correlation(_) => InsightType::Correlation,
            Details::RootCause(_) => InsightType::RootCause,
        }
    }

    /// Parses a payload whose schema is selected by `kind`.
    pub fn from_value(kind: InsightType, value: serde_json::Value) -> serde_json::Result<Self> {
        use serde_json::from_value as de;
        Ok(match kind {
            InsightType::Distribution => Details::Distribution(de(value)?),
            InsightType::OutlierPoint => Details::OutlierPoint(de(value)?),
            InsightType::OutlierForest => Details::OutlierForest(de(value)?),
            InsightType::TimeSeriesAnomaly => Details::TimeSeriesAnomaly(de(value)?),
            InsightType::Trend => Details::Trend(de(value)?),
            InsightType::Seasonality => Details::Seasonality(de(value)?),
            InsightType::ChangePoint => Details::ChangePoint(de(value)?),
            InsightType::Forecast => Details::Forecast(de(value)?),
            InsightType::YoY => Details::YoY(de(value)?),
            InsightType::MoM => Details::MoM(de(value)?),
            InsightType::Correlation => Details::Correlation(de(value)?),
            InsightType::RootCause => Details::RootCause(de(value)?),
        })
    }

    /// Indices into the evidence series referenced by this payload.
    pub fn flagged_indices(&self) -> Vec<usize> {
        match self {
            Details::OutlierPoint(d) => vec![d.index],
            Details::TimeSeriesAnomaly(d) => vec![d.index],
            Details::ChangePoint(d) => vec![d.index],
            Details::OutlierForest(d) => d.indices.clone(),
            _ => Vec::new(),
        }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            Details::Distribution(d) => vec![d.share, d.gini],
            Details::OutlierPoint(d) => vec![d.value, d.zscore],
            Details::OutlierForest(d) => d.anomaly_scores.clone(),
            Details::TimeSeriesAnomaly(d) => vec![d.value, d.saliency, d.zscore],
            Details::Trend(d) => vec![d.slope, d.intercept, d.r2],
            Details::Seasonality(d) => vec![d.acf_peak],
            Details::ChangePoint(d) => vec![d.mean_before, d.mean_after, d.sse_reduction],
            Details::Forecast(d) => {
                let mut v = d.predictions.clone();
                v.push(d.last_actual);
                v
            }
            Details::YoY(d) | Details::MoM(d) => vec![d.current, d.prior, d.pct_change],
            Details::Correlation(d) => vec![d.pearson_r],
            Details::RootCause(d) => {
                let mut v: Vec<f64> = d.segment_deltas.values().copied().collect();
                v.extend([d.parent_delta, d.contribution]);
                v
            }
        }
    }

    /// Checks that every numeric field is finite, bounded fields stay in
    /// range, and indices fall inside a series of `series_len` points.
    pub fn validate(&self, series_len: Option<usize>) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidInsight(m.to_string()));
        if self.numbers().iter().any(|x| !x.is_finite()) {
            return bad("non-finite detail field");
        }
        if let Some(n) = series_len {
            if self.flagged_indices().iter().any(|&i| i >= n) {
                return bad("index out of range");
            }
        }
        match self {
            Details::Distribution(d)
                if !(0.0..=1.0).contains(&d.share) || !(0.0..=1.0).contains(&d.gini) =>
            {
                bad("share and gini must lie in [0,1]")
            }
            Details::OutlierForest(d) if d.indices.len() != d.anomaly_scores.len() => {
                bad("forest indices and scores differ in length")
            }
            Details::Trend(d) if !(0.0..=1.0).contains(&d.r2) => bad("r2 outside [0,1]"),
            Details::Correlation(d) if d.pearson_r.abs() > 1.0 => bad("|r| > 1"),
            Details::Forecast(d) if d.predictions.len() != d.horizon => {
                bad("prediction count differs from horizon")
            }
            Details::RootCause(d) if !d.segment_deltas.contains_key(&d.top_segment) => {
                bad("top segment missing from segment deltas")
            }
            _ => Ok(()),
        }
    }
}

impl Serialize for Details {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Details::Distribution(d) => d.serialize(s),
            Details::OutlierPoint(d) => d.serialize(s),
            Details::OutlierForest(d) => d.serialize(s),
            Details::TimeSeriesAnomaly(d) => d.serialize(s),
            Details::Trend(d) => d.serialize(s),
            Details::Seasonality(d) => d.serialize(s),
            Details::ChangePoint(d) => d.serialize(s),
            Details::Forecast(d) => d.serialize(s),
            Details::YoY(d) | Details::MoM(d) => d.serialize(s),
            Details::Correlation(d) => d.serialize(s),
            Details::RootCause(d) => d.serialize(s),
        }
    }
}

/// The five scoring facets plus their combination, each in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub importance: f64,
    pub significance: f64,
    pub surprise: f64,
    pub fatigue_penalty: f64,
    pub interpretability: f64,
    pub composite: f64,
}

impl ScoreVector {
    pub fn components(&self) -> [f64; 6] {
        [
            self.importance,
            self.significance,
            self.surprise,
            self.fatigue_penalty,
            self.interpretability,
            self.composite,
        ]
    }
}

/// A chart coordinate: a number or a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePoint {
    pub x: Coord,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
}

/// The data an insight was derived from, kept for charting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub x_field: String,
    pub y_field: String,
    pub points: Vec<EvidencePoint>,
}

impl Evidence {
    pub fn labelled(x_field: &str, y_field: &str, labels: &[String], values: &[f64]) -> Self {
        Evidence {
            x_field: x_field.to_string(),
            y_field: y_field.to_string(),
            points: labels
                .iter()
                .zip(values)
                .map(|(l, &y)| EvidencePoint {
                    x: Coord::Text(l.clone()),
                    y,
                    series: None,
                })
                .collect(),
        }
    }

    /// Number of points in the primary (unnamed) series.
    pub fn primary_len(&self) -> usize {
        self.points.iter().filter(|p| p.series.is_none()).count()
    }
}

/// A typed, scored pattern found in a subspace of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Insight {
    pub id: String,
    #[serde(rename = "type")]
    pub insight_type: InsightType,
    pub datamodel: String,
    pub subspace: Subspace,
    pub breakdowns: Vec<String>,
    pub indicators: Vec<IndicatorSpec>,
    pub details: Details,
    pub score: ScoreVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
}

#[derive(Deserialize)]
struct RawInsight {
    id: String,
    #[serde(rename = "type")]
    insight_type: InsightType,
    datamodel: String,
    subspace: Subspace,
    breakdowns: Vec<String>,
    indicators: Vec<IndicatorSpec>,
    details: serde_json::Value,
    score: ScoreVector,
    #[serde(default)]
    evidence: Option<Evidence>,
}

impl<'de> Deserialize<'de> for Insight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawInsight::deserialize(d)?;
        let details =
            Details::from_value(raw.insight_type, raw.details).map_err(serde::de::Error::custom)?;
        Ok(Insight {
            id: raw.id,
            insight_type: raw.insight_type,
            datamodel: raw.datamodel,
            subspace: raw.subspace,
            breakdowns: raw.breakdowns,
            indicators: raw.indicators,
            details,
            score: raw.score,
            evidence: raw.evidence,
        })
    }
}

impl Insight {
    /// Builds an unscored insight; the id is a content hash of everything
    /// except score and evidence.
    pub fn new(
        datamodel: impl Into<String>,
        subspace: Subspace,
        breakdowns: Vec<String>,
        indicators: Vec<IndicatorSpec>,
        details: Details,
        evidence: Option<Evidence>,
    ) -> Self {
        let mut insight = Insight {
            id: String::new(),
            insight_type: details.insight_type(),
            datamodel: datamodel.into(),
            subspace,
            breakdowns,
            indicators,
            details,
            score: ScoreVector::default(),
            evidence,
        };
        insight.id = insight.content_id();
        insight
    }

    fn content_id(&self) -> String {
        let body = serde_json::json!({
            "type": self.insight_type,
            "datamodel": self.datamodel,
            "subspace": self.subspace,
            "breakdowns": self.breakdowns,
            "indicators": self.indicators,
            "details": self.details,
        });
        let digest = Sha256::digest(
            to_canonical_string(&body)
                .expect("insight serializes")
                .as_bytes(),
        );
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Topic used for fatigue accounting: breakdowns, indicators and type.
    pub fn topic(&self) -> String {
        to_canonical_string(&(&self.breakdowns, &self.indicators, self.insight_type))
            .expect("topic serializes")
    }

    /// Canonical JSON form, used for deterministic tie-breaking.
    pub fn canonical(&self) -> String {
        to_canonical_string(self).expect("insight serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.details.insight_type() != self.insight_type {
            return Err(ModelError::InvalidInsight(
                "details do not match type".into(),
            ));
        }
        if self
            .score
            .components()
            .iter()
            .any(|c| !(0.0..=1.0).contains(c))
        {
            return Err(ModelError::InvalidInsight(
                "score component outside [0,1]".into(),
            ));
        }
        self.details
            .validate(self.evidence.as_ref().map(Evidence::primary_len))
    }
}
