//! The offline flow: ingest, trim, enumerate, detect, score, rank and
//! narrate, plus artifact I/O.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, Months, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{enumerate_subspaces, CubeError, EnumerationBudget, SubspaceCube};
use crate::detect::{
    compare_period, detect_changepoint, detect_correlation, detect_distribution,
    detect_outliers_3sigma, detect_seasonality, detect_sr_anomaly, detect_trend, forecast,
    iforest_scores, root_cause, DetectorConfig, Granularity, PeriodKind, SeriesView,
};
use crate::eval::RankAnnotation;
use crate::ingest::{
    load_csv, resolve_source, trim_dimensions, DatasetConfig, IngestError, TrimReport,
};
use crate::json::{to_canonical_pretty, to_canonical_string};
use crate::model::{
    matching_rows, parse_time_key, ColumnKind, Coord, DataTable, Details, Evidence, EvidencePoint,
    IndicatorSpec, Insight, InsightType, Subspace,
};
use crate::narrative::{
    render_story, DataStory, LlmBackendConfig, NarrativeError, Narrator, StoryFormat,
};
use crate::score::{rank, score_insights, top_k, FatigueState, ScoringWeights};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Narrative(#[from] NarrativeError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// Missing or unreadable files and malformed documents, as opposed to
    /// failures inside an analysis stage.
    pub fn is_io_or_format(&self) -> bool {
        match self {
            PipelineError::Io { .. } | PipelineError::Format { .. } => true,
            PipelineError::Ingest(e) => {
                matches!(
                    e,
                    IngestError::Io { .. }
                        | IngestError::MalformedCsv(_)
                        | IngestError::UnparseableCell { .. }
                )
            }
            PipelineError::Cube(e) => matches!(e, CubeError::Io(_) | CubeError::Format(_)),
            _ => false,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn default_top_k() -> usize {
    10
}

/// Everything `analyze` needs; a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    #[serde(flatten)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub budget: EnumerationBudget,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub scoring: ScoringWeights,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub narrative: LlmBackendConfig,
}

impl AnalyzeConfig {
    pub fn new(dataset: DatasetConfig) -> Self {
        AnalyzeConfig {
            dataset,
            budget: EnumerationBudget::default(),
            detectors: DetectorConfig::default(),
            scoring: ScoringWeights::default(),
            top_k: default_top_k(),
            narrative: LlmBackendConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.scoring
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.narrative.validate()?;
        if self.top_k == 0 {
            return Err(PipelineError::Config("top_k must be positive".into()));
        }
        Ok(())
    }

    /// Reads a config document, or the `config` member of a run manifest.
    /// Relative source paths resolve against the document's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let value = match value.get("config") {
            Some(inner) if value.get("seeds").is_some() => inner.clone(),
            _ => value,
        };
        let mut cfg: AnalyzeConfig =
            serde_json::from_value(value).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        resolve_source(&mut cfg.dataset, path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub ingest_ms: f64,
    pub enumerate_ms: f64,
    pub detect_ms: f64,
    pub score_ms: f64,
    pub story_ms: f64,
    pub total_ms: f64,
}

/// Provenance of one `analyze` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset: String,
    pub config: AnalyzeConfig,
    pub seeds: BTreeMap<String, u64>,
    pub rows: usize,
    pub columns_kept: Vec<String>,
    pub columns_dropped: Vec<String>,
    pub subspaces: usize,
    pub cube_truncated: bool,
    pub insights: usize,
    pub timings: Timings,
    pub outputs: Vec<String>,
}

/// Result of the offline flow.
#[derive(Debug, Clone)]
pub struct AnalysisRun {
    pub config: AnalyzeConfig,
    pub table: DataTable,
    pub trim_report: TrimReport,
    pub cube: SubspaceCube,
    /// Every detected insight, scored and in ranking order.
    pub pool: Vec<Insight>,
    /// The story's insights, with evidence attached.
    pub top: Vec<Insight>,
    pub story: DataStory,
    pub timings: Timings,
}

pub const OUTPUT_FILES: &[&str] = &[
    "insights.jsonl",
    "ranking.jsonl",
    "story.md",
    "story.json",
    "story.txt",
    "cube.jsonl",
    "trim_report.json",
    "manifest.json",
];

fn ms_since(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

/// Runs the offline flow with the narrator the config asks for.
pub fn run_analysis(cfg: &AnalyzeConfig) -> Result<AnalysisRun> {
    let narrator = Narrator::from_config(&cfg.narrative)?;
    run_analysis_with(cfg, &narrator)
}

pub fn run_analysis_with(cfg: &AnalyzeConfig, narrator: &Narrator) -> Result<AnalysisRun> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let raw = load_csv(&cfg.dataset)?;
    let (table, trim_report) = trim_dimensions(&raw, &cfg.dataset);
    timings.ingest_ms = ms_since(t);

    let t = Instant::now();
    let indicators = cfg.dataset.effective_indicators(&table);
    if indicators.is_empty() {
        return Err(PipelineError::Config(
            "no indicators: the table has no numerical columns left".into(),
        ));
    }
    let cube = enumerate_subspaces(&table, &indicators, &cfg.budget)?;
    timings.enumerate_ms = ms_since(t);

    let t = Instant::now();
    let mut pool = detect_all(&table, &cube, &cfg.detectors);
    timings.detect_ms = ms_since(t);

    let t = Instant::now();
    score_insights(&mut pool, &cube, &cfg.scoring);
    rank(&mut pool);
    timings.score_ms = ms_since(t);

    let t = Instant::now();
    let mut top = top_k(
        &pool,
        cfg.top_k,
        cfg.scoring.fatigue_cap,
        &FatigueState::default(),
    );
    for i in &mut top {
        attach_evidence(i, &cube, Some(&table));
    }
    let story = narrator.assemble_story(table.name(), &top)?;
    timings.story_ms = ms_since(t);
    timings.total_ms = ms_since(start);

    Ok(AnalysisRun {
        config: cfg.clone(),
        table,
        trim_report,
        cube,
        pool,
        top,
        story,
        timings,
    })
}

/// Plain-text story: the summary followed by one finding per line.
pub fn story_plain_text(story: &DataStory) -> String {
    let mut s = story.summary.clone();
    s.push_str("\n\n");
    for f in &story.findings {
        s.push_str(&f.text);
        s.push('\n');
    }
    s
}

pub fn write_jsonl<'a>(path: &Path, insights: impl IntoIterator<Item = &'a Insight>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for i in insights {
        let line = to_canonical_string(i).expect("insight serializes");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_insights(path: &Path) -> Result<Vec<Insight>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            })
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

impl AnalysisRun {
    pub fn manifest(&self) -> RunManifest {
        let kept = self
            .table
            .columns()
            .iter()
            .map(|c| c.name.clone())
            .collect();
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: self.table.name().to_string(),
            config: self.config.clone(),
            seeds: BTreeMap::from([("iforest".to_string(), self.config.detectors.seed)]),
            rows: self.table.num_rows(),
            columns_kept: kept,
            columns_dropped: self
                .trim_report
                .dropped_names()
                .into_iter()
                .map(str::to_string)
                .collect(),
            subspaces: self.cube.len(),
            cube_truncated: self.cube.truncated(),
            insights: self.pool.len(),
            timings: self.timings.clone(),
            outputs: OUTPUT_FILES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Writes every artifact in [`OUTPUT_FILES`] into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_jsonl(&dir.join("insights.jsonl"), &self.pool)?;
        let ids: Vec<&str> = self.pool.iter().map(|i| i.id.as_str()).collect();
        let ranking = RankAnnotation::from_order(&ids)
            .map_err(|e| PipelineError::Config(format!("duplicate insight ids: {e}")))?;
        write_text(&dir.join("ranking.jsonl"), &ranking.to_jsonl())?;
        write_text(
            &dir.join("story.md"),
            &render_story(&self.story, StoryFormat::Markdown),
        )?;
        write_text(
            &dir.join("story.json"),
            &render_story(&self.story, StoryFormat::Json),
        )?;
        write_text(&dir.join("story.txt"), &story_plain_text(&self.story))?;
        let cube_path = dir.join("cube.jsonl");
        let file = fs::File::create(&cube_path).map_err(io_err(&cube_path))?;
        self.cube.write_jsonl(BufWriter::new(file))?;
        write_text(
            &dir.join("trim_report.json"),
            &to_canonical_pretty(&self.trim_report).expect("report serializes"),
        )?;
        write_text(
            &dir.join("manifest.json"),
            &to_canonical_pretty(&self.manifest()).expect("manifest serializes"),
        )
    }
}

pub fn read_cube(path: &Path) -> Result<SubspaceCube> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(SubspaceCube::read_jsonl(BufReader::new(file))?)
}

/// `analyze` end to end: run and write artifacts.
pub fn analyze_to_dir(cfg: &AnalyzeConfig, out: &Path) -> Result<AnalysisRun> {
    let run = run_analysis(cfg)?;
    run.write_artifacts(out)?;
    Ok(run)
}

// ---------------------------------------------------------------------------
// Detector sweep

struct Series {
    labels: Vec<String>,
    view: SeriesView,
}

/// Indicator values over a time breakdown in chronological order. Additive
/// indicators count absent periods as zero; the rest skip them.
fn time_series(
    cube: &SubspaceCube,
    subspace: &Subspace,
    indicator: &IndicatorSpec,
    time_dim: &str,
) -> Option<Series> {
    let groups = cube
        .get(subspace)?
        .aggregates
        .get(&indicator.label())?
        .by
        .get(time_dim)?;
    let mut points: Vec<(i64, String, f64)> = if indicator.aggregation.is_additive() {
        cube.domain(time_dim)?
            .iter()
            .filter_map(|k| {
                Some((
                    parse_time_key(k)?,
                    k.clone(),
                    groups.get(k).copied().unwrap_or(0.0),
                ))
            })
            .collect()
    } else {
        groups
            .iter()
            .filter_map(|(k, &v)| Some((parse_time_key(k)?, k.clone(), v)))
            .collect()
    };
    points.sort_by_key(|p| p.0);
    let (ts, rest): (Vec<i64>, Vec<(String, f64)>) =
        points.into_iter().map(|(t, k, v)| (t, (k, v))).unzip();
    let (labels, values): (Vec<String>, Vec<f64>) = rest.into_iter().unzip();
    let view = SeriesView::new(ts, values).ok()?;
    Some(Series { labels, view })
}

struct Emitter<'a> {
    dataset: &'a str,
    out: Vec<Insight>,
    seen: BTreeSet<String>,
}

impl Emitter<'_> {
    fn emit(
        &mut self,
        subspace: &Subspace,
        breakdowns: Vec<String>,
        indicators: Vec<IndicatorSpec>,
        details: Details,
    ) {
        if details.validate(None).is_err() {
            return;
        }
        let scoped = subspace
            .with_breakdown(breakdowns.first().map(String::as_str))
            .unwrap_or_else(|_| subspace.clone());
        let insight = Insight::new(self.dataset, scoped, breakdowns, indicators, details, None);
        if self.seen.insert(insight.id.clone()) {
            self.out.push(insight);
        }
    }
}

/// Runs every applicable detector on every enumerated subspace.
pub fn detect_all(table: &DataTable, cube: &SubspaceCube, cfg: &DetectorConfig) -> Vec<Insight> {
    let mut em = Emitter {
        dataset: table.name(),
        out: Vec::new(),
        seen: BTreeSet::new(),
    };
    let categorical: Vec<String> = cube.enumerated_dimensions().map(str::to_string).collect();
    let time_dims = cube.time_dimensions().to_vec();
    let numeric: Vec<String> = table
        .names_of_kind(ColumnKind::Numerical)
        .into_iter()
        .map(str::to_string)
        .collect();

    for entry in cube.entries() {
        let s = &entry.subspace;
        for ind in cube.indicators() {
            let Some(aggs) = entry.aggregates.get(&ind.label()) else {
                continue;
            };

            for t in &time_dims {
                let periods = cube.domain(t).map_or(0, <[String]>::len).max(1);
                if (entry.rows as f64) < cfg.min_period_support * periods as f64 {
                    continue;
                }
                if let Some(series) = time_series(cube, s, ind, t) {
                    detect_series(&mut em, s, ind, t, &series, cfg);
                    if ind.aggregation.is_additive() && s.depth() < cube.max_depth() {
                        detect_root_cause(&mut em, cube, s, ind, t, &series, &categorical);
                    }
                }
            }

            for d in categorical.iter().filter(|d| s.predicate_on(d).is_none()) {
                let Some(groups) = aggs.by.get(d) else {
                    continue;
                };
                if groups.len() < 2 {
                    continue;
                }
                if ind.aggregation.is_additive() {
                    if let Ok(details) = detect_distribution(groups) {
                        em.emit(
                            s,
                            vec![d.clone()],
                            vec![ind.clone()],
                            Details::Distribution(details),
                        );
                    }
                }
                let (members, values): (Vec<&String>, Vec<f64>) =
                    groups.iter().map(|(k, &v)| (k, v)).unzip();
                for mut o in detect_outliers_3sigma(&values).unwrap_or_default() {
                    o.label = Some(members[o.index].clone());
                    em.emit(
                        s,
                        vec![d.clone()],
                        vec![ind.clone()],
                        Details::OutlierPoint(o),
                    );
                }
            }
        }

        if entry.rows >= 8 && !numeric.is_empty() {
            detect_rows(&mut em, table, s, &numeric, cfg);
        }
    }
    em.out
}

fn detect_series(
    em: &mut Emitter,
    s: &Subspace,
    ind: &IndicatorSpec,
    t: &str,
    series: &Series,
    cfg: &DetectorConfig,
) {
    let by = || vec![t.to_string()];
    let ind1 = || vec![ind.clone()];
    let v = &series.view;
    if let Ok(Some(d)) = detect_trend(v, cfg.trend_min_r2) {
        em.emit(s, by(), ind1(), Details::Trend(d));
    }
    if let Ok(Some(d)) = detect_seasonality(v, cfg.max_period, cfg.seasonality_min_acf) {
        em.emit(s, by(), ind1(), Details::Seasonality(d));
    }
    if let Ok(Some(mut d)) = detect_changepoint(v, cfg.changepoint_min_reduction) {
        d.label = Some(series.labels[d.index].clone());
        em.emit(s, by(), ind1(), Details::ChangePoint(d));
    }
    for mut d in detect_sr_anomaly(v, cfg.sr_window).unwrap_or_default() {
        d.label = Some(series.labels[d.index].clone());
        em.emit(s, by(), ind1(), Details::TimeSeriesAnomaly(d));
    }
    for mut o in detect_outliers_3sigma(v.values()).unwrap_or_default() {
        o.label = Some(series.labels[o.index].clone());
        em.emit(s, by(), ind1(), Details::OutlierPoint(o));
    }
    if let Ok(d) = forecast(
        v,
        cfg.forecast_horizon,
        cfg.max_period,
        cfg.seasonality_min_acf,
    ) {
        if cfg.forecast_horizon > 0 {
            em.emit(s, by(), ind1(), Details::Forecast(d));
        }
    }
    if let Some(d) = compare_period(v, PeriodKind::YoY) {
        em.emit(s, by(), ind1(), Details::YoY(d));
    }
    if let Some(d) = compare_period(v, PeriodKind::MoM) {
        em.emit(s, by(), ind1(), Details::MoM(d));
    }
}

/// Attributes the latest period-over-period change of an additive
/// indicator to the members of each unfiltered categorical dimension.
fn detect_root_cause(
    em: &mut Emitter,
    cube: &SubspaceCube,
    s: &Subspace,
    ind: &IndicatorSpec,
    t: &str,
    series: &Series,
    categorical: &[String],
) {
    let vals = series.view.values();
    let n = vals.len();
    if n < 2 {
        return;
    }
    let parent_delta = vals[n - 1] - vals[n - 2];
    if parent_delta == 0.0 {
        return;
    }
    let (last, prev) = (&series.labels[n - 1], &series.labels[n - 2]);
    for d in categorical.iter().filter(|d| s.predicate_on(d).is_none()) {
        let Some(members) = cube.enumerated_members(d) else {
            continue;
        };
        if cube.domain(d).map(<[String]>::len) != Some(members.len()) {
            continue;
        }
        let mut deltas = BTreeMap::new();
        for m in members {
            let Ok(child) = s.with_member(d, m) else {
                continue;
            };
            let Some(groups) = cube
                .get(&child)
                .and_then(|e| e.aggregates.get(&ind.label()))
                .and_then(|a| a.by.get(t))
            else {
                deltas.insert(m.clone(), 0.0);
                continue;
            };
            let at = |k: &String| groups.get(k).copied().unwrap_or(0.0);
            deltas.insert(m.clone(), at(last) - at(prev));
        }
        if let Ok(details) = root_cause(parent_delta, &deltas) {
            em.emit(
                s,
                vec![d.clone(), t.to_string()],
                vec![ind.clone()],
                Details::RootCause(details),
            );
        }
    }
}

/// Row-level detectors: pairwise correlation of numerical columns and an
/// isolation forest over the numerical row vectors.
fn detect_rows(
    em: &mut Emitter,
    table: &DataTable,
    s: &Subspace,
    numeric: &[String],
    cfg: &DetectorConfig,
) {
    let Ok(rows) = matching_rows(table, s.predicates()) else {
        return;
    };
    let sub = table.select_rows(&rows);
    for (i, a) in numeric.iter().enumerate() {
        for b in &numeric[i + 1..] {
            if let Ok(Some(d)) = detect_correlation(&sub, a, b, cfg.correlation_min_abs_r) {
                let inds = vec![IndicatorSpec::sum(a.clone()), IndicatorSpec::sum(b.clone())];
                em.emit(s, Vec::new(), inds, Details::Correlation(d));
            }
        }
    }
    let cols: Vec<&[Option<f64>]> = numeric
        .iter()
        .filter_map(|c| sub.column(c)?.numbers())
        .collect();
    let points: Vec<Vec<f64>> = (0..sub.num_rows())
        .filter_map(|r| cols.iter().map(|c| c[r]).collect::<Option<Vec<f64>>>())
        .collect();
    if let Ok(scores) = iforest_scores(
        &points,
        cfg.iforest_trees,
        cfg.iforest_sample_size,
        cfg.seed,
    ) {
        let (indices, anomaly_scores): (Vec<usize>, Vec<f64>) = scores
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > cfg.iforest_threshold)
            .map(|(i, &x)| (i, x))
            .unzip();
        if !indices.is_empty() {
            let inds = numeric
                .iter()
                .map(|c| IndicatorSpec::sum(c.clone()))
                .collect();
            let d = crate::model::ForestDetails {
                indices,
                anomaly_scores,
            };
            em.emit(s, Vec::new(), inds, Details::OutlierForest(d));
        }
    }
}

// ---------------------------------------------------------------------------
// Evidence

const MAX_SCATTER_POINTS: usize = 500;

fn future_labels(series: &SeriesView, horizon: usize) -> Vec<String> {
    let ts = series.timestamps();
    let last = *ts.last().expect("nonempty series");
    let months = match series.granularity() {
        Granularity::Month => Some(1),
        Granularity::Quarter => Some(3),
        Granularity::Year => Some(12),
        _ => None,
    };
    let step = if ts.len() > 1 {
        ts[ts.len() - 1] - ts[ts.len() - 2]
    } else {
        86_400_000
    };
    (1..=horizon)
        .map(|h| {
            let at = match (months, DateTime::<Utc>::from_timestamp_millis(last)) {
                (Some(m), Some(dt)) => dt
                    .checked_add_months(Months::new(m * h as u32))
                    .map_or(last + step * h as i64, |d| d.timestamp_millis()),
                _ => last + step * h as i64,
            };
            crate::model::format_time_key(at)
        })
        .collect()
}

/// Rebuilds the chart data behind an insight from the cube (and the table,
/// for row-level insights). Leaves the insight untouched when the data is
/// unavailable.
pub fn attach_evidence(insight: &mut Insight, cube: &SubspaceCube, table: Option<&DataTable>) {
    if insight.evidence.is_some() {
        return;
    }
    let evidence = match insight.insight_type {
        InsightType::Correlation => table.and_then(|t| scatter_evidence(insight, t)),
        InsightType::OutlierForest => None,
        InsightType::RootCause => {
            let Details::RootCause(d) = &insight.details else {
                return;
            };
            let dim = insight
                .breakdowns
                .first()
                .cloned()
                .unwrap_or_else(|| "segment".into());
            let (labels, values): (Vec<String>, Vec<f64>) = d
                .segment_deltas
                .iter()
                .map(|(k, v)| (k.clone(), *v))
                .unzip();
            Some(Evidence::labelled(&dim, "delta", &labels, &values))
        }
        _ => {
            let (Some(ind), Some(b)) = (insight.indicators.first(), insight.breakdowns.first())
            else {
                return;
            };
            let y = ind.label();
            if cube.time_dimensions().iter().any(|t| t == b) {
                time_series(cube, &insight.subspace, ind, b).map(|series| {
                    let mut ev = Evidence::labelled(b, &y, &series.labels, series.view.values());
                    if let Details::Forecast(f) = &insight.details {
                        let labels = future_labels(&series.view, f.predictions.len());
                        ev.points
                            .extend(labels.into_iter().zip(&f.predictions).map(|(l, &p)| {
                                EvidencePoint {
                                    x: Coord::Text(l),
                                    y: p,
                                    series: Some("forecast".into()),
                                }
                            }));
                    }
                    ev
                })
            } else {
                cube.get(&insight.subspace)
                    .and_then(|e| e.aggregates.get(&y))
                    .and_then(|a| a.by.get(b))
                    .map(|g| {
                        let (labels, values): (Vec<String>, Vec<f64>) =
                            g.iter().map(|(k, v)| (k.clone(), *v)).unzip();
                        Evidence::labelled(b, &y, &labels, &values)
                    })
            }
        }
    };
    if let Some(ev) = evidence {
        let len = ev.primary_len();
        if insight.details.validate(Some(len)).is_ok() {
            insight.evidence = Some(ev);
        }
    }
}

fn scatter_evidence(insight: &Insight, table: &DataTable) -> Option<Evidence> {
    let Details::Correlation(d) = &insight.details else {
        return None;
    };
    let rows = matching_rows(table, insight.subspace.predicates()).ok()?;
    let (a, b) = (table.column(&d.dim_a)?, table.column(&d.dim_b)?);
    let (xa, xb) = (a.numbers()?, b.numbers()?);
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&r| a.is_observed(r) && b.is_observed(r))
        .filter_map(|&r| Some((xa[r]?, xb[r]?)))
        .collect();
    let stride = pairs.len().div_ceil(MAX_SCATTER_POINTS).max(1);
    Some(Evidence {
        x_field: d.dim_a.clone(),
        y_field: d.dim_b.clone(),
        points: pairs
            .into_iter()
            .step_by(stride)
            .map(|(x, y)| EvidencePoint {
                x: Coord::Number(x),
                y,
                series: None,
            })
            .collect(),
    })
}
