//! CSV loading, kind inference, imputation and dimension trimming.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{Column, ColumnData, ColumnKind, DataTable, IndicatorSpec, ModelError};
use crate::stats;

/// Sentinel member that replaces missing categorical cells.
pub const MISSING_MEMBER: &str = "⟨missing⟩";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("declared column `{0}` does not exist")]
    UnknownColumn(String),
    #[error("column `{column}` row {row}: cannot parse `{value}` as {kind:?}")]
    UnparseableCell {
        column: String,
        row: usize,
        value: String,
        kind: ColumnKind,
    },
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrimThresholds {
    /// Columns with a larger pre-imputation null fraction are dropped.
    pub null_rate_max: f64,
    /// Indicator columns observed in a smaller fraction of depth-1 cells are dropped.
    pub coverage_min: f64,
    /// Numerical columns correlated above this |r| with an earlier column are dropped.
    pub correlation_max: f64,
}

impl Default for TrimThresholds {
    fn default() -> Self {
        TrimThresholds {
            null_rate_max: 0.5,
            coverage_min: 0.0,
            correlation_max: 0.98,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Dataset identifier; defaults to the source file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: PathBuf,
    #[serde(default)]
    pub format: SourceFormat,
    /// Explicit kinds; other columns are inferred.
    #[serde(default)]
    pub column_kinds: BTreeMap<String, ColumnKind>,
    /// chrono pattern for time cells, e.g. `%Y-%m-%d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_format: Option<String>,
    /// Declared indicators; when empty every numerical column is summed.
    #[serde(default)]
    pub indicators: Vec<IndicatorSpec>,
    #[serde(default)]
    pub trim: TrimThresholds,
}

impl DatasetConfig {
    pub fn new(source: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            name: None,
            source: source.into(),
            format: SourceFormat::Csv,
            column_kinds: BTreeMap::new(),
            time_format: None,
            indicators: Vec::new(),
            trim: TrimThresholds::default(),
        }
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.source
                .file_stem()
                .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
        })
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let t = &self.trim;
        for (name, v) in [
            ("null_rate_max", t.null_rate_max),
            ("coverage_min", t.coverage_min),
            ("correlation_max", t.correlation_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(IngestError::InvalidConfig(format!(
                    "{name} must lie in [0,1], got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Indicators in effect for `table`: the declared ones, or a Sum over
    /// every numerical column when none are declared.
    pub fn effective_indicators(&self, table: &DataTable) -> Vec<IndicatorSpec> {
        if self.indicators.is_empty() {
            table
                .names_of_kind(ColumnKind::Numerical)
                .into_iter()
                .map(IndicatorSpec::sum)
                .collect()
        } else {
            self.indicators
                .iter()
                .filter(|i| table.column(&i.column).is_some())
                .cloned()
                .collect()
        }
    }
}

/// Why a column was removed by [`trim_dimensions`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    NullRate,
    Coverage,
    CorrelatedWith(String),
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::NullRate => f.write_str("NullRate"),
            DropReason::Coverage => f.write_str("Coverage"),
            DropReason::CorrelatedWith(c) => write!(f, "Correlated-with:{c}"),
        }
    }
}

impl Serialize for DropReason {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DropReason {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "NullRate" => Ok(DropReason::NullRate),
            "Coverage" => Ok(DropReason::Coverage),
            other => other
                .strip_prefix("Correlated-with:")
                .map(|c| DropReason::CorrelatedWith(c.to_string()))
                .ok_or_else(|| serde::de::Error::custom(format!("unknown drop reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub column: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrimReport {
    pub dropped: Vec<DroppedColumn>,
    /// Imputed cell counts per column.
    pub imputations: BTreeMap<String, usize>,
}

impl TrimReport {
    pub fn dropped_names(&self) -> Vec<&str> {
        self.dropped.iter().map(|d| d.column.as_str()).collect()
    }
}

struct TimeParser {
    pattern: Option<String>,
}

impl TimeParser {
    const DEFAULT_DATETIME: [&'static str; 3] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y/%m/%d %H:%M:%S",
    ];
    const DEFAULT_DATE: [&'static str; 3] = ["%Y-%m-%d", "%Y/%m/%d", "%d.%m.%Y"];

    fn parse(&self, s: &str) -> Option<i64> {
        if let Some(p) = &self.pattern {
            return NaiveDateTime::parse_from_str(s, p)
                .map(|dt| dt.and_utc().timestamp_millis())
                .ok()
                .or_else(|| {
                    NaiveDate::parse_from_str(s, p).ok().map(|d| {
                        d.and_hms_opt(0, 0, 0)
                            .expect("midnight")
                            .and_utc()
                            .timestamp_millis()
                    })
                });
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(dt.timestamp_millis());
        }
        for p in Self::DEFAULT_DATETIME {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, p) {
                return Some(dt.and_utc().timestamp_millis());
            }
        }
        for p in Self::DEFAULT_DATE {
            if let Ok(d) = NaiveDate::parse_from_str(s, p) {
                return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
            }
        }
        // year-month, e.g. 2024-03
        if s.len() == 7 && s.as_bytes()[4] == b'-' {
            if let Ok(d) = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d") {
                return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
            }
        }
        None
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn infer_kind(cells: &[Option<&str>], times: &TimeParser) -> ColumnKind {
    let present: Vec<&str> = cells.iter().flatten().copied().collect();
    if present.is_empty() {
        ColumnKind::Categorical
    } else if present.iter().all(|c| times.parse(c).is_some()) {
        ColumnKind::Time
    } else if present.iter().all(|c| parse_number(c).is_some()) {
        ColumnKind::Numerical
    } else {
        ColumnKind::Categorical
    }
}

/// Reads the configured CSV file into a typed, imputed table.
pub fn load_csv(config: &DatasetConfig) -> Result<DataTable, IngestError> {
    let mut file = File::open(&config.source).map_err(|source| IngestError::Io {
        path: config.source.clone(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: config.source.clone(),
            source,
        })?;
    parse_csv(&text, config)
}

/// Same as [`load_csv`] but over in-memory CSV text.
pub fn parse_csv(text: &str, config: &DatasetConfig) -> Result<DataTable, IngestError> {
    config.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::MalformedCsv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(IngestError::MalformedCsv("missing header row".into()));
    }
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::MalformedCsv(e.to_string()))?;
        for (col, cell) in raw.iter_mut().zip(record.iter()) {
            col.push(cell.trim().to_string());
        }
    }
    let rows = raw.first().map_or(0, Vec::len);
    if rows == 0 {
        return Err(IngestError::EmptyTable);
    }
    for name in config.column_kinds.keys() {
        if !headers.contains(name) {
            return Err(IngestError::UnknownColumn(name.clone()));
        }
    }
    for ind in &config.indicators {
        if !headers.contains(&ind.column) {
            return Err(IngestError::UnknownColumn(ind.column.clone()));
        }
    }

    let times = TimeParser {
        pattern: config.time_format.clone(),
    };
    let mut columns = Vec::with_capacity(headers.len());
    for (name, cells) in headers.iter().zip(&raw) {
        let opt: Vec<Option<&str>> = cells
            .iter()
            .map(|c| if c.is_empty() { None } else { Some(c.as_str()) })
            .collect();
        let kind = config
            .column_kinds
            .get(name)
            .copied()
            .unwrap_or_else(|| infer_kind(&opt, &times));
        let unparseable = |row: usize, value: &str| IngestError::UnparseableCell {
            column: name.clone(),
            row,
            value: value.to_string(),
            kind,
        };
        let column = match kind {
            ColumnKind::Time => {
                let mut out = Vec::with_capacity(rows);
                for (r, c) in opt.iter().enumerate() {
                    out.push(match c {
                        None => None,
                        Some(s) => Some(times.parse(s).ok_or_else(|| unparseable(r, s))?),
                    });
                }
                Column::time(name.clone(), out)
            }
            ColumnKind::Numerical => {
                let mut out = Vec::with_capacity(rows);
                for (r, c) in opt.iter().enumerate() {
                    out.push(match c {
                        None => None,
                        Some(s) => Some(parse_number(s).ok_or_else(|| unparseable(r, s))?),
                    });
                }
                impute_numeric(name, out)
            }
            ColumnKind::Categorical => impute_categorical(name, &opt),
        };
        columns.push(column);
    }
    Ok(DataTable::new(config.dataset_name(), columns)?)
}

fn impute_numeric(name: &str, mut cells: Vec<Option<f64>>) -> Column {
    let observed: Vec<f64> = cells.iter().flatten().copied().collect();
    let mut imputed_rows = Vec::new();
    if let Some(median) = stats::median(&observed) {
        for (r, c) in cells.iter_mut().enumerate() {
            if c.is_none() {
                *c = Some(median);
                imputed_rows.push(r);
            }
        }
    }
    Column {
        name: name.to_string(),
        data: ColumnData::Numerical(cells),
        imputed_rows,
    }
}

fn impute_categorical(name: &str, cells: &[Option<&str>]) -> Column {
    let mut imputed_rows = Vec::new();
    let values = cells
        .iter()
        .enumerate()
        .map(|(r, c)| match c {
            Some(s) => Some(s.to_string()),
            None => {
                imputed_rows.push(r);
                Some(MISSING_MEMBER.to_string())
            }
        })
        .collect();
    Column {
        name: name.to_string(),
        data: ColumnData::Categorical(values),
        imputed_rows,
    }
}

/// Fraction of depth-1 cells (one per member of each categorical
/// dimension) holding at least one real observation of `column`.
fn coverage(table: &DataTable, column: &Column) -> f64 {
    let dims: Vec<&Column> = table
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Categorical)
        .collect();
    if dims.is_empty() {
        let any = (0..table.num_rows()).any(|r| column.is_observed(r));
        return if any { 1.0 } else { 0.0 };
    }
    let (mut cells, mut covered) = (0usize, 0usize);
    for dim in dims {
        let mut members: BTreeMap<String, bool> = BTreeMap::new();
        for r in 0..table.num_rows() {
            if let Some(m) = dim.data.group_key(r) {
                let seen = members.entry(m).or_insert(false);
                *seen |= column.is_observed(r);
            }
        }
        cells += members.len();
        covered += members.values().filter(|&&v| v).count();
    }
    if cells == 0 {
        0.0
    } else {
        covered as f64 / cells as f64
    }
}

fn observed_pairs(a: &Column, b: &Column) -> (Vec<f64>, Vec<f64>) {
    let (Some(x), Some(y)) = (a.numbers(), b.numbers()) else {
        return (Vec::new(), Vec::new());
    };
    (0..x.len())
        .filter(|&r| a.is_observed(r) && b.is_observed(r))
        .filter_map(|r| Some((x[r]?, y[r]?)))
        .unzip()
}

/// Runs the three trimming passes in order: null rate, indicator coverage,
/// then pairwise correlation between numerical columns (the later-declared
/// column of a correlated pair is dropped).
pub fn trim_dimensions(table: &DataTable, config: &DatasetConfig) -> (DataTable, TrimReport) {
    let mut report = TrimReport {
        dropped: Vec::new(),
        imputations: table
            .columns()
            .iter()
            .map(|c| (c.name.clone(), c.imputed_rows.len()))
            .collect(),
    };
    let thresholds = config.trim;

    let null_drops: Vec<&str> = table
        .columns()
        .iter()
        .filter(|c| c.raw_null_rate() > thresholds.null_rate_max)
        .map(|c| c.name.as_str())
        .collect();
    for name in &null_drops {
        report.dropped.push(DroppedColumn {
            column: name.to_string(),
            reason: DropReason::NullRate,
        });
    }
    let table = table.without_columns(&null_drops);

    let indicator_columns: HashSet<String> = config
        .effective_indicators(&table)
        .into_iter()
        .map(|i| i.column)
        .filter(|c| {
            table
                .column(c)
                .is_some_and(|c| c.kind() == ColumnKind::Numerical)
        })
        .collect();
    let coverage_drops: Vec<String> = table
        .columns()
        .iter()
        .filter(|c| indicator_columns.contains(&c.name))
        .filter(|c| coverage(&table, c) < thresholds.coverage_min)
        .map(|c| c.name.clone())
        .collect();
    for name in &coverage_drops {
        report.dropped.push(DroppedColumn {
            column: name.clone(),
            reason: DropReason::Coverage,
        });
    }
    let names: Vec<&str> = coverage_drops.iter().map(String::as_str).collect();
    let table = table.without_columns(&names);

    let numeric: Vec<&Column> = table
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Numerical)
        .collect();
    let mut kept: Vec<&Column> = Vec::new();
    let mut corr_drops: Vec<&str> = Vec::new();
    for col in numeric {
        let partner = kept.iter().find(|k| {
            let (x, y) = observed_pairs(k, col);
            stats::pearson(&x, &y).is_some_and(|r| r.abs() > thresholds.correlation_max)
        });
        match partner {
            Some(k) => {
                report.dropped.push(DroppedColumn {
                    column: col.name.clone(),
                    reason: DropReason::CorrelatedWith(k.name.clone()),
                });
                corr_drops.push(&col.name);
            }
            None => kept.push(col),
        }
    }
    let out = table.without_columns(&corr_drops);
    (out, report)
}

/// Loads and trims in one step, for callers that only need the result.
pub fn load_and_trim(config: &DatasetConfig) -> Result<(DataTable, TrimReport), IngestError> {
    let table = load_csv(config)?;
    Ok(trim_dimensions(&table, config))
}

/// Resolves a relative source path against `base`.
pub fn resolve_source(config: &mut DatasetConfig, base: &Path) {
    if config.source.is_relative() {
        config.source = base.join(&config.source);
    }
}
