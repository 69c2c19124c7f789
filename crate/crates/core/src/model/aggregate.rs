use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::table::{ColumnData, ColumnKind, DataTable};
use super::ModelError;

/// Key used for the single group of an ungrouped aggregation.
pub const ALL_KEY: &str = "⟨all⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
    Count,
    Min,
    Max,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::Mean => "mean",
            Aggregation::Count => "count",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
        }
    }

    /// Aggregations whose group values add up to the parent value.
    pub fn is_additive(self) -> bool {
        matches!(self, Aggregation::Sum | Aggregation::Count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub column: String,
    pub aggregation: Aggregation,
}

impl IndicatorSpec {
    pub fn new(column: impl Into<String>, aggregation: Aggregation) -> Self {
        IndicatorSpec {
            column: column.into(),
            aggregation,
        }
    }

    pub fn sum(column: impl Into<String>) -> Self {
        Self::new(column, Aggregation::Sum)
    }

    /// Stable label such as `sum(sales)`.
    pub fn label(&self) -> String {
        format!("{}({})", self.aggregation.name(), self.column)
    }

    pub fn validate(&self, table: &DataTable) -> Result<(), ModelError> {
        let col = table.require(&self.column)?;
        if self.aggregation != Aggregation::Count && col.kind() != ColumnKind::Numerical {
            return Err(ModelError::TypeMismatch {
                dimension: self.column.clone(),
                detail: format!("{} needs a numerical column", self.aggregation.name()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for IndicatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Running state for one group.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    pub present: bool,
    pub count: usize,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl Accumulator {
    pub fn touch(&mut self) {
        self.present = true;
    }

    pub fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.count += 1;
        self.sum += x;
    }

    pub fn push_count(&mut self) {
        self.count += 1;
    }

    pub fn finish(&self, agg: Aggregation) -> Option<f64> {
        if !self.present {
            return None;
        }
        match agg {
            Aggregation::Sum => Some(self.sum),
            Aggregation::Count => Some(self.count as f64),
            _ if self.count == 0 => None,
            Aggregation::Mean => Some(self.sum / self.count as f64),
            Aggregation::Min => Some(self.min),
            Aggregation::Max => Some(self.max),
        }
    }
}

/// Feeds row `r` of the indicator column into `acc`.
pub(crate) fn accumulate(acc: &mut Accumulator, data: &ColumnData, agg: Aggregation, r: usize) {
    acc.touch();
    match (data, agg) {
        (ColumnData::Numerical(v), _) => {
            if let Some(x) = v[r] {
                if agg == Aggregation::Count {
                    acc.push_count();
                } else {
                    acc.push(x);
                }
            }
        }
        (other, Aggregation::Count) => {
            if !other.is_null(r) {
                acc.push_count();
            }
        }
        _ => {}
    }
}

/// Aggregates `indicator` over the given rows, optionally grouped.
///
/// Groups are the non-null values of `group_by` seen in `rows`. Nulls are
/// excluded from every aggregate; Mean, Min and Max of a group without
/// observations are absent from the result.
pub fn aggregate_rows(
    table: &DataTable,
    rows: &[usize],
    indicator: &IndicatorSpec,
    group_by: Option<&str>,
) -> Result<BTreeMap<String, f64>, ModelError> {
    indicator.validate(table)?;
    let data = &table.require(&indicator.column)?.data;
    let mut groups: BTreeMap<String, Accumulator> = BTreeMap::new();
    match group_by {
        None => {
            let acc = groups.entry(ALL_KEY.to_string()).or_default();
            acc.touch();
            for &r in rows {
                accumulate(acc, data, indicator.aggregation, r);
            }
        }
        Some(dim) => {
            let key_col = table
                .column(dim)
                .ok_or_else(|| ModelError::UnknownColumn(dim.to_string()))?;
            if key_col.kind() == ColumnKind::Numerical {
                return Err(ModelError::TypeMismatch {
                    dimension: dim.to_string(),
                    detail: "cannot group by a numerical column".into(),
                });
            }
            for &r in rows {
                if let Some(key) = key_col.data.group_key(r) {
                    accumulate(
                        groups.entry(key).or_default(),
                        data,
                        indicator.aggregation,
                        r,
                    );
                }
            }
        }
    }
    Ok(groups
        .into_iter()
        .filter_map(|(k, acc)| acc.finish(indicator.aggregation).map(|v| (k, v)))
        .collect())
}

/// Exact group-by aggregation over the whole table.
pub fn aggregate(
    table: &DataTable,
    indicator: &IndicatorSpec,
    group_by: Option<&str>,
) -> Result<BTreeMap<String, f64>, ModelError> {
    let rows: Vec<usize> = (0..table.num_rows()).collect();
    aggregate_rows(table, &rows, indicator, group_by)
}
