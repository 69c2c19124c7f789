use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::table::{format_time_key, parse_time_key, ColumnData, DataTable};
use super::ModelError;

/// A predicate operand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn text(s: impl Into<String>) -> Self {
        Scalar::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            Scalar::Number(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Number(n) => write!(f, "{n}"),
            Scalar::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Comparator {
    Equals {
        value: Scalar,
    },
    InSet {
        values: Vec<Scalar>,
    },
    /// Half-open interval `[start, end)` in epoch milliseconds.
    TimeRange {
        start: i64,
        end: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPredicate {
    pub dimension: String,
    #[serde(flatten)]
    pub comparator: Comparator,
}

impl FilterPredicate {
    pub fn equals(dimension: impl Into<String>, value: impl Into<String>) -> Self {
        FilterPredicate {
            dimension: dimension.into(),
            comparator: Comparator::Equals {
                value: Scalar::Text(value.into()),
            },
        }
    }

    pub fn in_set<S: Into<String>>(
        dimension: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        FilterPredicate {
            dimension: dimension.into(),
            comparator: Comparator::InSet {
                values: values.into_iter().map(|v| Scalar::Text(v.into())).collect(),
            },
        }
    }

    pub fn time_range(dimension: impl Into<String>, start: i64, end: i64) -> Self {
        FilterPredicate {
            dimension: dimension.into(),
            comparator: Comparator::TimeRange { start, end },
        }
    }

    /// Member of a categorical `Equals` predicate.
    pub fn equals_member(&self) -> Option<&str> {
        match &self.comparator {
            Comparator::Equals { value } => value.as_text(),
            _ => None,
        }
    }

    fn compile<'t>(&self, table: &'t DataTable) -> Result<Compiled<'t>, ModelError> {
        let col = table
            .column(&self.dimension)
            .ok_or_else(|| ModelError::UnknownDimension(self.dimension.clone()))?;
        let mismatch = |detail: &str| ModelError::TypeMismatch {
            dimension: self.dimension.clone(),
            detail: detail.to_string(),
        };
        let time_of = |s: &Scalar| -> Result<i64, ModelError> {
            match s {
                Scalar::Number(n) if n.fract() == 0.0 => Ok(*n as i64),
                Scalar::Text(t) => {
                    parse_time_key(t).ok_or_else(|| mismatch("unparseable timestamp"))
                }
                _ => Err(mismatch("timestamp operand must be an integer")),
            }
        };
        let text_of = |s: &Scalar| -> Result<String, ModelError> {
            s.as_text()
                .map(str::to_string)
                .ok_or_else(|| mismatch("categorical operand must be text"))
        };
        let num_of = |s: &Scalar| -> Result<f64, ModelError> {
            match s {
                Scalar::Number(n) => Ok(*n),
                Scalar::Text(_) => Err(mismatch("numerical operand must be a number")),
            }
        };
        let test = match (&col.data, &self.comparator) {
            (_, Comparator::TimeRange { .. }) if !matches!(col.data, ColumnData::Time(_)) => {
                return Err(mismatch("time range on a non-time dimension"))
            }
            (ColumnData::Time(_), Comparator::TimeRange { start, end }) => {
                Test::TimeRange(*start, *end)
            }
            (ColumnData::Time(_), Comparator::Equals { value }) => {
                Test::TimeIn(vec![time_of(value)?])
            }
            (ColumnData::Time(_), Comparator::InSet { values }) => {
                Test::TimeIn(values.iter().map(time_of).collect::<Result<_, _>>()?)
            }
            (ColumnData::Categorical(_), Comparator::Equals { value }) => {
                Test::TextIn(BTreeSet::from([text_of(value)?]))
            }
            (ColumnData::Categorical(_), Comparator::InSet { values }) => {
                Test::TextIn(values.iter().map(text_of).collect::<Result<_, _>>()?)
            }
            (ColumnData::Numerical(_), Comparator::Equals { value }) => {
                Test::NumIn(vec![num_of(value)?])
            }
            (ColumnData::Numerical(_), Comparator::InSet { values }) => {
                Test::NumIn(values.iter().map(num_of).collect::<Result<_, _>>()?)
            }
            (_, Comparator::TimeRange { .. }) => unreachable!(),
        };
        Ok(Compiled {
            data: &col.data,
            test,
        })
    }
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.comparator {
            Comparator::Equals { value } => write!(f, "{}={}", self.dimension, value),
            Comparator::InSet { values } => {
                let parts: Vec<String> = values.iter().map(ToString::to_string).collect();
                write!(f, "{} in {{{}}}", self.dimension, parts.join(", "))
            }
            Comparator::TimeRange { start, end } => write!(
                f,
                "{} from {} until {}",
                self.dimension,
                format_time_key(*start),
                format_time_key(*end)
            ),
        }
    }
}

enum Test {
    TimeRange(i64, i64),
    TimeIn(Vec<i64>),
    TextIn(BTreeSet<String>),
    NumIn(Vec<f64>),
}

struct Compiled<'a> {
    data: &'a ColumnData,
    test: Test,
}

impl Compiled<'_> {
    fn matches(&self, row: usize) -> bool {
        match (self.data, &self.test) {
            (ColumnData::Time(v), Test::TimeRange(s, e)) => {
                v[row].is_some_and(|t| *s <= t && t < *e)
            }
            (ColumnData::Time(v), Test::TimeIn(set)) => v[row].is_some_and(|t| set.contains(&t)),
            (ColumnData::Categorical(v), Test::TextIn(set)) => {
                v[row].as_ref().is_some_and(|s| set.contains(s))
            }
            (ColumnData::Numerical(v), Test::NumIn(set)) => {
                v[row].is_some_and(|x| set.contains(&x))
            }
            _ => false,
        }
    }
}

/// Row indices satisfying every predicate, ascending.
pub fn matching_rows(
    table: &DataTable,
    predicates: &[FilterPredicate],
) -> Result<Vec<usize>, ModelError> {
    let compiled = predicates
        .iter()
        .map(|p| p.compile(table))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..table.num_rows())
        .filter(|&r| compiled.iter().all(|c| c.matches(r)))
        .collect())
}

/// The rows of `table` satisfying the conjunction of `predicates`.
///
/// Null cells never satisfy a predicate.
pub fn apply_filter(
    table: &DataTable,
    predicates: &[FilterPredicate],
) -> Result<DataTable, ModelError> {
    if predicates.is_empty() {
        return Ok(table.clone());
    }
    let rows = matching_rows(table, predicates)?;
    Ok(table.select_rows(&rows))
}

/// A conjunction of predicates on distinct dimensions plus an optional
/// breakdown dimension. Predicates are kept sorted by dimension name, so
/// equal subspaces serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSubspace")]
pub struct Subspace {
    predicates: Vec<FilterPredicate>,
    breakdown: Option<String>,
}

#[derive(Deserialize)]
struct RawSubspace {
    #[serde(default)]
    predicates: Vec<FilterPredicate>,
    #[serde(default)]
    breakdown: Option<String>,
}

impl TryFrom<RawSubspace> for Subspace {
    type Error = ModelError;

    fn try_from(raw: RawSubspace) -> Result<Self, Self::Error> {
        Subspace::new(raw.predicates, raw.breakdown)
    }
}

impl Subspace {
    pub fn new(
        mut predicates: Vec<FilterPredicate>,
        breakdown: Option<String>,
    ) -> Result<Self, ModelError> {
        predicates.sort_by(|a, b| a.dimension.cmp(&b.dimension));
        let mut dims = HashSet::new();
        for p in &predicates {
            if !dims.insert(p.dimension.as_str()) {
                return Err(ModelError::InvalidSubspace(format!(
                    "dimension `{}` filtered twice",
                    p.dimension
                )));
            }
        }
        if let Some(b) = &breakdown {
            if dims.contains(b.as_str()) {
                return Err(ModelError::InvalidSubspace(format!(
                    "breakdown `{b}` is also a filter dimension"
                )));
            }
        }
        Ok(Subspace {
            predicates,
            breakdown,
        })
    }

    pub fn root() -> Self {
        Subspace {
            predicates: Vec::new(),
            breakdown: None,
        }
    }

    /// Subspace built from categorical equality filters.
    pub fn from_members<'a>(
        members: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ModelError> {
        Subspace::new(
            members
                .into_iter()
                .map(|(d, m)| FilterPredicate::equals(d, m))
                .collect(),
            None,
        )
    }

    pub fn predicates(&self) -> &[FilterPredicate] {
        &self.predicates
    }

    pub fn breakdown(&self) -> Option<&str> {
        self.breakdown.as_deref()
    }

    pub fn depth(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_root(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn predicate_on(&self, dimension: &str) -> Option<&FilterPredicate> {
        self.predicates.iter().find(|p| p.dimension == dimension)
    }

    pub fn with_breakdown(&self, breakdown: Option<&str>) -> Result<Self, ModelError> {
        Subspace::new(self.predicates.clone(), breakdown.map(str::to_string))
    }

    /// Same filters and breakdown with the `dimension` predicate dropped.
    pub fn without(&self, dimension: &str) -> Subspace {
        Subspace {
            predicates: self
                .predicates
                .iter()
                .filter(|p| p.dimension != dimension)
                .cloned()
                .collect(),
            breakdown: self.breakdown.clone(),
        }
    }

    /// Adds (or replaces) a categorical equality filter.
    pub fn with_member(&self, dimension: &str, member: &str) -> Result<Self, ModelError> {
        let mut preds: Vec<_> = self
            .predicates
            .iter()
            .filter(|p| p.dimension != dimension)
            .cloned()
            .collect();
        preds.push(FilterPredicate::equals(dimension, member));
        Subspace::new(preds, self.breakdown.clone())
    }

    /// Checks that every referenced dimension exists and operands type-check.
    pub fn validate(&self, table: &DataTable) -> Result<(), ModelError> {
        for p in &self.predicates {
            p.compile(table)?;
        }
        if let Some(b) = &self.breakdown {
            if table.column(b).is_none() {
                return Err(ModelError::UnknownDimension(b.clone()));
            }
        }
        Ok(())
    }

    /// Canonical string of the filter part only; used as the cube lookup key.
    pub fn filter_key(&self) -> String {
        crate::json::to_canonical_string(&self.predicates).expect("predicates serialize")
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.predicates.is_empty() {
            return f.write_str("all data");
        }
        let parts: Vec<String> = self.predicates.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(", "))
    }
}
