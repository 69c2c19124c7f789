use std::collections::HashSet;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Time,
    Categorical,
    Numerical,
}

/// Typed cell storage. Time cells are UTC epoch milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Time(Vec<Option<i64>>),
    Categorical(Vec<Option<String>>),
    Numerical(Vec<Option<f64>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Time(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numerical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Time(_) => ColumnKind::Time,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
            ColumnData::Numerical(_) => ColumnKind::Numerical,
        }
    }

    pub fn is_null(&self, row: usize) -> bool {
        match self {
            ColumnData::Time(v) => v[row].is_none(),
            ColumnData::Categorical(v) => v[row].is_none(),
            ColumnData::Numerical(v) => v[row].is_none(),
        }
    }

    pub fn null_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_null(r)).count()
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Time(v) => ColumnData::Time(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
            ColumnData::Numerical(v) => ColumnData::Numerical(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    /// Group key of a cell: categorical members as-is, timestamps as
    /// fixed-width ISO strings (so lexicographic order is chronological).
    /// Numerical columns have no group key.
    pub fn group_key(&self, row: usize) -> Option<String> {
        match self {
            ColumnData::Time(v) => v[row].map(format_time_key),
            ColumnData::Categorical(v) => v[row].clone(),
            ColumnData::Numerical(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
    /// Rows whose value was filled in by imputation, ascending.
    pub imputed_rows: Vec<usize>,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        Column {
            name: name.into(),
            data,
            imputed_rows: Vec::new(),
        }
    }

    pub fn time(name: impl Into<String>, cells: Vec<Option<i64>>) -> Self {
        Column::new(name, ColumnData::Time(cells))
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, cells: Vec<Option<S>>) -> Self {
        Column::new(
            name,
            ColumnData::Categorical(cells.into_iter().map(|c| c.map(Into::into)).collect()),
        )
    }

    pub fn numerical(name: impl Into<String>, cells: Vec<Option<f64>>) -> Self {
        Column::new(name, ColumnData::Numerical(cells))
    }

    pub fn kind(&self) -> ColumnKind {
        self.data.kind()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// True when the row holds a real observation (not null, not imputed).
    pub fn is_observed(&self, row: usize) -> bool {
        !self.data.is_null(row) && self.imputed_rows.binary_search(&row).is_err()
    }

    /// Null fraction before imputation.
    pub fn raw_null_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (self.data.null_count() + self.imputed_rows.len()) as f64 / self.len() as f64
    }

    pub fn numbers(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numerical(v) => Some(v),
            _ => None,
        }
    }
}

/// An immutable N x M table.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    name: String,
    rows: usize,
    columns: Vec<Column>,
}

impl DataTable {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, ModelError> {
        let rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for col in &columns {
            if col.len() != rows {
                return Err(ModelError::Invariant(format!(
                    "column `{}` has {} cells, expected {rows}",
                    col.name,
                    col.len()
                )));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(ModelError::Invariant(format!(
                    "duplicate column `{}`",
                    col.name
                )));
            }
            if let ColumnData::Numerical(v) = &col.data {
                if v.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(ModelError::Invariant(format!(
                        "column `{}` holds a non-finite value",
                        col.name
                    )));
                }
            }
            if col.imputed_rows.iter().any(|&r| r >= rows)
                || col.imputed_rows.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(ModelError::Invariant(format!(
                    "column `{}` has an invalid imputation mask",
                    col.name
                )));
            }
        }
        Ok(DataTable {
            name: name.into(),
            rows,
            columns,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Column, ModelError> {
        self.column(name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))
    }

    /// Names of columns of the given kind, in declaration order.
    pub fn names_of_kind(&self, kind: ColumnKind) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.kind() == kind)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// New table holding the given rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let imputed_rows = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| c.imputed_rows.binary_search(r).is_ok())
                    .map(|(i, _)| i)
                    .collect();
                Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                    imputed_rows,
                }
            })
            .collect();
        DataTable {
            name: self.name.clone(),
            rows: rows.len(),
            columns,
        }
    }

    /// New table without the named columns.
    pub fn without_columns(&self, names: &[&str]) -> DataTable {
        let columns = self
            .columns
            .iter()
            .filter(|c| !names.contains(&c.name.as_str()))
            .cloned()
            .collect();
        DataTable {
            name: self.name.clone(),
            rows: self.rows,
            columns,
        }
    }
}

const DAY_MS: i64 = 86_400_000;

/// Renders a timestamp as `YYYY-MM-DD` when it falls on a UTC midnight and as
/// `YYYY-MM-DDTHH:MM:SS.mmmZ` otherwise.
pub fn format_time_key(ms: i64) -> String {
    let dt = DateTime::<Utc>::from_timestamp_millis(ms).unwrap_or_default();
    if ms.rem_euclid(DAY_MS) == 0 {
        dt.format("%Y-%m-%d").to_string()
    } else {
        dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
    }
}

/// Inverse of [`format_time_key`].
pub fn parse_time_key(key: &str) -> Option<i64> {
    if let Ok(d) = NaiveDate::parse_from_str(key, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
    }
    NaiveDateTime::parse_from_str(key, "%Y-%m-%dT%H:%M:%S%.3fZ")
        .ok()
        .map(|dt| dt.and_utc().timestamp_millis())
}
