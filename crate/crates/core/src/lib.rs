//! Insight mining over multidimensional tables.
//!
//! The crate is organised as an offline pipeline followed by an online loop:
//!
//! * [`ingest`] loads CSV files into a typed [`model::DataTable`], imputes
//!   missing cells and trims unhelpful dimensions.
//! * [`cube`] enumerates filter subspaces and precomputes their aggregates.
//! * [`detect`] runs the statistical detectors that turn series and
//!   distributions into typed insight payloads.
//! * [`score`] assigns the five scoring facets and ranks the pool.
//! * [`narrative`] turns ranked insights into descriptions and data stories,
//!   either from templates or through a chat-completion endpoint.
//! * [`agent`] re-ranks a precomputed pool against a user's editing context.
//! * [`eval`] holds the ranking and text-overlap metrics.
//! * [`pipeline`] wires the offline stages together.
//!
//! Runnable walkthroughs for each stage live in the crate's `examples/`
//! directory.

pub mod agent;
pub mod cube;
pub mod detect;
pub mod eval;
pub mod ingest;
pub mod json;
pub mod model;
pub mod narrative;
pub mod pipeline;
pub mod score;
pub mod stats;

pub use model::{
    Aggregation, Column, ColumnData, ColumnKind, Comparator, DataTable, Details, FilterPredicate,
    IndicatorSpec, Insight, InsightType, Scalar, ScoreVector, Subspace,
};
