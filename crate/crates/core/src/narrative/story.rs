use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::InsightDescription;
use crate::model::{Coord, Details, Insight, InsightType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Line,
    Bar,
    Scatter,
    Histogram,
}

/// A minimal declarative chart: a mark, the fields it encodes and the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub insight_id: String,
    pub mark: Mark,
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub data: Vec<BTreeMap<String, Value>>,
    /// Row positions of flagged points.
    #[serde(default)]
    pub annotations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataStory {
    pub dataset: String,
    pub summary: String,
    pub findings: Vec<InsightDescription>,
    pub source_insights: Vec<Insight>,
    pub charts: Vec<ChartSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoryFormat {
    Markdown,
    Json,
}

fn mark_for(kind: InsightType) -> Mark {
    match kind {
        InsightType::Correlation => Mark::Scatter,
        InsightType::OutlierForest => Mark::Histogram,
        InsightType::Distribution | InsightType::RootCause | InsightType::OutlierPoint => Mark::Bar,
        _ => Mark::Line,
    }
}

fn coord(c: &Coord) -> Value {
    match c {
        Coord::Number(n) => json!(n),
        Coord::Text(t) => json!(t),
    }
}

/// Chart for one insight, drawn from its evidence when present and from its
/// details otherwise.
pub fn chart_for(insight: &Insight) -> ChartSpec {
    let mark = mark_for(insight.insight_type);
    let annotations = insight.details.flagged_indices();
    if let Some(ev) = insight.evidence.as_ref().filter(|e| !e.points.is_empty()) {
        let has_series = ev.points.iter().any(|p| p.series.is_some());
        let data = ev
            .points
            .iter()
            .map(|p| {
                let mut row = BTreeMap::from([
                    (ev.x_field.clone(), coord(&p.x)),
                    (ev.y_field.clone(), json!(p.y)),
                ]);
                if has_series {
                    row.insert(
                        "series".into(),
                        json!(p.series.as_deref().unwrap_or("actual")),
                    );
                }
                row
            })
            .collect();
        let annotations = if insight.insight_type == InsightType::OutlierForest {
            Vec::new()
        } else {
            annotations
                .into_iter()
                .filter(|&i| i < ev.primary_len())
                .collect()
        };
        return ChartSpec {
            insight_id: insight.id.clone(),
            mark,
            x: ev.x_field.clone(),
            y: ev.y_field.clone(),
            series: has_series.then(|| "series".to_string()),
            data,
            annotations,
        };
    }
    let pairs: Vec<(String, f64)> = match &insight.details {
        Details::RootCause(d) => d
            .segment_deltas
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
        Details::OutlierForest(d) => d
            .indices
            .iter()
            .zip(&d.anomaly_scores)
            .map(|(i, s)| (format!("row {i}"), *s))
            .collect(),
        Details::Forecast(d) => d
            .predictions
            .iter()
            .enumerate()
            .map(|(h, p)| (format!("t+{}", h + 1), *p))
            .collect(),
        other => {
            let v = serde_json::to_value(other).unwrap_or(Value::Null);
            v.as_object()
                .map(|o| {
                    o.iter()
                        .filter_map(|(k, x)| x.as_f64().map(|f| (k.clone(), f)))
                        .collect()
                })
                .unwrap_or_default()
        }
    };
    ChartSpec {
        insight_id: insight.id.clone(),
        mark: if mark == Mark::Scatter || mark == Mark::Histogram {
            Mark::Bar
        } else {
            mark
        },
        x: "label".into(),
        y: "value".into(),
        series: None,
        data: pairs
            .into_iter()
            .map(|(k, v)| {
                BTreeMap::from([
                    ("label".to_string(), json!(k)),
                    ("value".to_string(), json!(v)),
                ])
            })
            .collect(),
        annotations: Vec::new(),
    }
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

/// Markdown with summary, findings, charts and source sections, or the
/// canonical JSON form of the story.
pub fn render_story(story: &DataStory, format: StoryFormat) -> String {
    match format {
        StoryFormat::Json => crate::json::to_canonical_pretty(story).expect("story serializes"),
        StoryFormat::Markdown => {
            let mut md = String::new();
            let _ = writeln!(md, "# Data story: {}\n", story.dataset);
            let _ = writeln!(md, "## Summary\n\n{}\n", story.summary);
            let _ = writeln!(md, "## Findings\n");
            for (i, f) in story.findings.iter().enumerate() {
                let _ = writeln!(md, "{}. {}", i + 1, f.text);
            }
            let _ = writeln!(md, "\n## Charts\n");
            for (i, c) in story.charts.iter().enumerate() {
                let body = crate::json::to_canonical_pretty(c).expect("chart serializes");
                let _ = writeln!(
                    md,
                    "### Chart {} ({})\n\n```json\n{}\n```\n",
                    i + 1,
                    c.insight_id,
                    body
                );
            }
            let _ = writeln!(md, "## Source insights\n");
            let _ = writeln!(
                md,
                "| # | id | type | subspace | breakdown | indicator | composite |"
            );
            let _ = writeln!(
                md,
                "|---|----|------|----------|-----------|-----------|-----------|"
            );
            for (i, s) in story.source_insights.iter().enumerate() {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} | {} | {:.4} |",
                    i + 1,
                    s.id,
                    s.insight_type,
                    escape_cell(&s.subspace.to_string()),
                    escape_cell(&s.breakdowns.join(", ")),
                    escape_cell(
                        &s.indicators
                            .iter()
                            .map(|x| x.label())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                    s.score.composite
                );
            }
            md
        }
    }
}
