//! The shared data model: typed tables, filters, subspaces, indicators and
//! the insight record every other module produces or consumes.

pub(crate) mod aggregate;
mod filter;
mod insight;
mod table;

pub use aggregate::{aggregate, aggregate_rows, Aggregation, IndicatorSpec, ALL_KEY};
pub use filter::{apply_filter, matching_rows, Comparator, FilterPredicate, Scalar, Subspace};
pub use insight::{
    ChangePointDetails, Coord, CorrelationDetails, Details, Direction, DistributionDetails,
    Evidence, EvidencePoint, ForecastDetails, ForecastMethod, ForestDetails, Insight, InsightType,
    OutlierPointDetails, PeriodChange, RootCauseDetails, SaliencyDetails, ScoreVector,
    SeasonalityDetails, TrendDetails,
};
pub use table::{format_time_key, parse_time_key, Column, ColumnData, ColumnKind, DataTable};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("type mismatch on `{dimension}`: {detail}")]
    TypeMismatch { dimension: String, detail: String },
    #[error("table invariant violated: {0}")]
    Invariant(String),
    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),
    #[error("invalid insight: {0}")]
    InvalidInsight(String),
}
