use chrono::{DateTime, Months};
use serde::{Deserialize, Serialize};

use super::{Granularity, SeriesView};
use crate::model::PeriodChange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeriodKind {
    YoY,
    MoM,
}

impl PeriodKind {
    fn months(self) -> u32 {
        match self {
            PeriodKind::YoY => 12,
            PeriodKind::MoM => 1,
        }
    }
}

/// Compares the last value with the value exactly one year (or month)
/// earlier. Absent when the series has no point at that timestamp, the
/// prior value is zero, or the spacing is irregular.
pub fn compare_period(series: &SeriesView, kind: PeriodKind) -> Option<PeriodChange> {
    if series.granularity() == Granularity::Irregular {
        return None;
    }
    let ts = series.timestamps();
    let last = series.len() - 1;
    let now = DateTime::from_timestamp_millis(ts[last])?;
    let before = now
        .checked_sub_months(Months::new(kind.months()))?
        .timestamp_millis();
    let j = ts.binary_search(&before).ok()?;
    let (current, prior) = (series.values()[last], series.values()[j]);
    if prior == 0.0 {
        return None;
    }
    Some(PeriodChange {
        current,
        prior,
        pct_change: (current - prior) / prior.abs(),
        current_label: Some(series.label(last)),
        prior_label: Some(series.label(j)),
    })
}
