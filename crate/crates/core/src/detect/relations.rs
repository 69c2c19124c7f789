use std::collections::BTreeMap;

use super::DetectError;
use crate::model::{ColumnKind, CorrelationDetails, DataTable, ModelError, RootCauseDetails};
use crate::stats::pearson;

/// Relative tolerance when checking that segment deltas add up.
pub const ROOT_CAUSE_TOLERANCE: f64 = 1e-6;

/// Pearson correlation between two numerical columns over rows where both
/// cells were observed; reported when `|r|` reaches `min_abs_r`.
pub fn detect_correlation(
    table: &DataTable,
    a: &str,
    b: &str,
    min_abs_r: f64,
) -> Result<Option<CorrelationDetails>, DetectError> {
    let (ca, cb) = (table.require(a)?, table.require(b)?);
    for c in [ca, cb] {
        if c.kind() != ColumnKind::Numerical {
            return Err(ModelError::TypeMismatch {
                dimension: c.name.clone(),
                detail: "correlation needs numbers".into(),
            }
            .into());
        }
    }
    let (xa, xb) = (
        ca.numbers().expect("numerical"),
        cb.numbers().expect("numerical"),
    );
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..table.num_rows())
        .filter(|&r| ca.is_observed(r) && cb.is_observed(r))
        .filter_map(|r| Some((xa[r]?, xb[r]?)))
        .unzip();
    if xs.len() < 8 {
        return Err(DetectError::TooFewPairs {
            needed: 8,
            got: xs.len(),
        });
    }
    Ok(pearson(&xs, &ys)
        .filter(|r| r.abs() >= min_abs_r)
        .map(|r| CorrelationDetails {
            dim_a: a.to_string(),
            dim_b: b.to_string(),
            pearson_r: r.clamp(-1.0, 1.0),
        }))
}

/// Share of a parent change attributable to each segment. The top segment
/// has the largest share; ties go to the lexicographically smallest member.
pub fn root_cause(
    parent_delta: f64,
    segment_deltas: &BTreeMap<String, f64>,
) -> Result<RootCauseDetails, DetectError> {
    if parent_delta == 0.0 {
        return Err(DetectError::ZeroParentDelta);
    }
    if segment_deltas.is_empty() {
        return Err(DetectError::Invalid("no segments".into()));
    }
    let sum: f64 = segment_deltas.values().sum();
    if (sum - parent_delta).abs() > ROOT_CAUSE_TOLERANCE * parent_delta.abs() {
        return Err(DetectError::InconsistentDeltas {
            sum,
            parent: parent_delta,
        });
    }
    let mut top: Option<(&String, f64)> = None;
    for (m, d) in segment_deltas {
        let c = d / parent_delta;
        if top.is_none_or(|(_, best)| c > best) {
            top = Some((m, c));
        }
    }
    let (top_segment, contribution) = top.expect("nonempty");
    Ok(RootCauseDetails {
        parent_delta,
        segment_deltas: segment_deltas.clone(),
        top_segment: top_segment.clone(),
        contribution,
    })
}
