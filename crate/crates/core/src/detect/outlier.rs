use std::collections::BTreeMap;

use super::DetectError;
use super::{mean, std_dev};
use crate::model::{DistributionDetails, OutlierPointDetails};

/// Flags every value more than three population standard deviations from
/// the mean, in index order.
pub fn detect_outliers_3sigma(values: &[f64]) -> Result<Vec<OutlierPointDetails>, DetectError> {
    if values.len() < 4 {
        return Err(DetectError::TooShort {
            needed: 4,
            got: values.len(),
        });
    }
    let m = mean(values);
    let sd = std_dev(values);
    if sd == 0.0 || !sd.is_finite() {
        return Ok(Vec::new());
    }
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &x)| (x - m).abs() > 3.0 * sd)
        .map(|(index, &value)| OutlierPointDetails {
            index,
            value,
            zscore: (value - m) / sd,
            label: None,
        })
        .collect())
}

/// Gini coefficient of a nonnegative mass vector; 0 for an all-zero vector.
pub fn gini(masses: &[f64]) -> f64 {
    let n = masses.len() as f64;
    let total: f64 = masses.iter().sum();
    if masses.is_empty() || total == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    for a in masses {
        for b in masses {
            diff += (a - b).abs();
        }
    }
    diff / (2.0 * n * total)
}

/// Largest member share and the Gini coefficient of the masses.
pub fn detect_distribution(
    aggregates: &BTreeMap<String, f64>,
) -> Result<DistributionDetails, DetectError> {
    if aggregates.len() < 2 {
        return Err(DetectError::TooShort {
            needed: 2,
            got: aggregates.len(),
        });
    }
    if let Some((m, _)) = aggregates.iter().find(|(_, &v)| v < 0.0 || !v.is_finite()) {
        return Err(DetectError::NegativeMass(m.clone()));
    }
    let total: f64 = aggregates.values().sum();
    let (top, top_value) = aggregates
        .iter()
        .fold(None, |best: Option<(&String, f64)>, (k, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((k, v)),
        })
        .expect("at least two members");
    let share = if total == 0.0 {
        1.0 / aggregates.len() as f64
    } else {
        top_value / total
    };
    let masses: Vec<f64> = aggregates.values().copied().collect();
    Ok(DistributionDetails {
        top_member: top.clone(),
        share,
        gini: gini(&masses),
    })
}
