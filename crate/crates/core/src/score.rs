//! Insight scoring and top-k selection.
//!
//! Each insight receives importance, significance, surprise and
//! interpretability scores in `[0,1]`. Their weighted sum is gated by a
//! per-topic fatigue cap and scaled by a per-type feedback weight learned
//! from accept/reject signals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::cube::{distribution_of, sibling_subspaces, SubspaceCube};
use crate::model::{Details, IndicatorSpec, Insight, InsightType, ScoreVector, Subspace};
use crate::stats::average_ranks;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("values sum to zero")]
    ZeroSum,
    #[error("index {index} out of range for {len} values")]
    OutOfRange { index: usize, len: usize },
    #[error("distribution lengths differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("distribution is not normalized")]
    NotNormalized,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Importance of `values[index]`: its distance from the mean as
/// a share of the total, scaled by its ascending rank over `n + 1`.
pub fn importance(values: &[f64], index: usize) -> Result<f64, ScoreError> {
    if index >= values.len() {
        return Err(ScoreError::OutOfRange {
            index,
            len: values.len(),
        });
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(ScoreError::ZeroSum);
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(0.0);
    }
    let mean = total / values.len() as f64;
    let rank = average_ranks(values)[index];
    Ok(((values[index] - mean).abs() / total * rank / (values.len() + 1) as f64).clamp(0.0, 1.0))
}

fn check_distribution(p: &[f64]) -> Result<(), ScoreError> {
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(ScoreError::NotNormalized);
    }
    Ok(())
}

/// Jensen-Shannon divergence in bits.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &y)| x * (2.0 * x / (x + y)).log2())
            .sum()
    };
    (0.5 * (kl_to_mid(p, q) + kl_to_mid(q, p))).clamp(0.0, 1.0)
}

/// Mean Jensen-Shannon divergence between `native` and each sibling.
pub fn surprise(native: &[f64], siblings: &[Vec<f64>]) -> Result<f64, ScoreError> {
    check_distribution(native)?;
    for s in siblings {
        if s.len() != native.len() {
            return Err(ScoreError::DimensionMismatch(native.len(), s.len()));
        }
        check_distribution(s)?;
    }
    if siblings.is_empty() {
        return Ok(0.0);
    }
    Ok(siblings
        .iter()
        .map(|s| js_divergence(native, s))
        .sum::<f64>()
        / siblings.len() as f64)
}

/// `2Φ(|z|) − 1`: the probability mass within `|z|` standard deviations.
pub fn two_sided_confidence(z: f64) -> f64 {
    erf(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Strength of the detected pattern, mapped into `[0,1]` per type.
pub fn significance(details: &Details) -> f64 {
    let s = match details {
        Details::OutlierPoint(d) => two_sided_confidence(d.zscore),
        Details::TimeSeriesAnomaly(d) => two_sided_confidence(d.zscore),
        Details::OutlierForest(d) => {
            let top = d.anomaly_scores.iter().copied().fold(0.0, f64::max);
            (top - 0.5) / 0.5
        }
        Details::Trend(d) => d.r2,
        Details::Seasonality(d) => d.acf_peak,
        Details::Correlation(d) => d.pearson_r.abs(),
        Details::ChangePoint(d) => d.sse_reduction,
        Details::RootCause(d) => d.contribution,
        Details::Distribution(d) => d.gini,
        Details::YoY(d) | Details::MoM(d) => d.pct_change.abs(),
        Details::Forecast(d) => {
            let last = d.predictions.last().copied().unwrap_or(d.last_actual);
            if d.last_actual == 0.0 {
                if last == 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                (last - d.last_actual).abs() / d.last_actual.abs()
            }
        }
    };
    if s.is_finite() {
        s.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// How easy a pattern type is to read, independent of its strength.
pub fn clarity(kind: InsightType) -> f64 {
    use InsightType::*;
    match kind {
        Distribution | YoY | MoM | Trend => 1.0,
        OutlierPoint | ChangePoint | Seasonality => 0.8,
        Correlation | RootCause | TimeSeriesAnomaly => 0.6,
        OutlierForest | Forecast => 0.4,
    }
}

pub fn interpretability(details: &Details, significance: f64) -> f64 {
    (0.5 * significance + 0.5 * clarity(details.insight_type())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringWeights {
    pub importance: f64,
    pub significance: f64,
    pub surprise: f64,
    pub interpretability: f64,
    /// Maximum insights per topic in one ranking.
    pub fatigue_cap: usize,
    /// Multiplier applied to a type's feedback weight on each rejection.
    pub feedback_decay: f64,
}

impl Default for ScoringWeights {
    fn default() -> Self {
        ScoringWeights {
            importance: 0.25,
            significance: 0.25,
            surprise: 0.25,
            interpretability: 0.25,
            fatigue_cap: 2,
            feedback_decay: 0.8,
        }
    }
}

impl ScoringWeights {
    pub fn validate(&self) -> Result<(), ScoreError> {
        let w = [
            self.importance,
            self.significance,
            self.surprise,
            self.interpretability,
        ];
        if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ScoreError::InvalidWeights(
                "weights must be nonnegative and sum to 1".into(),
            ));
        }
        if self.fatigue_cap == 0 {
            return Err(ScoreError::InvalidWeights(
                "fatigue cap must be at least 1".into(),
            ));
        }
        if !(self.feedback_decay > 0.0 && self.feedback_decay < 1.0) {
            return Err(ScoreError::InvalidWeights(
                "feedback decay must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Accept,
    Reject,
}

/// Per-session memory of emitted topics and per-type feedback weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FatigueState {
    #[serde(default)]
    pub topic_counts: BTreeMap<String, usize>,
    #[serde(default)]
    pub type_weights: BTreeMap<InsightType, f64>,
}

impl FatigueState {
    pub fn feedback_weight(&self, kind: InsightType) -> f64 {
        self.type_weights.get(&kind).copied().unwrap_or(1.0)
    }

    pub fn topic_count(&self, topic: &str) -> usize {
        self.topic_counts.get(topic).copied().unwrap_or(0)
    }

    pub fn record_emitted(&mut self, insight: &Insight) {
        *self.topic_counts.entry(insight.topic()).or_default() += 1;
    }

    /// Reject multiplies the type weight by `decay`; accept divides by it,
    /// capped at 2, and counts the topic as emitted.
    pub fn apply_feedback(&mut self, insight: &Insight, feedback: Feedback, decay: f64) {
        let w = self.feedback_weight(insight.insight_type);
        let next = match feedback {
            Feedback::Reject => w * decay,
            Feedback::Accept => {
                self.record_emitted(insight);
                (w / decay).min(2.0)
            }
        };
        self.type_weights
            .insert(insight.insight_type, next.max(f64::MIN_POSITIVE));
    }
}

/// 1 once the insight's topic has been emitted `cap` times, else 0.
pub fn fatigue_penalty(insight: &Insight, state: &FatigueState, cap: usize) -> f64 {
    if state.topic_count(&insight.topic()) >= cap {
        1.0
    } else {
        0.0
    }
}

pub fn compose(score: &ScoreVector, weights: &ScoringWeights, feedback_weight: f64) -> f64 {
    let sum = weights.importance * score.importance
        + weights.significance * score.significance
        + weights.surprise * score.surprise
        + weights.interpretability * score.interpretability;
    (feedback_weight * (1.0 - score.fatigue_penalty) * sum).clamp(0.0, 1.0)
}

/// Ranking order: composite descending, then significance descending, then
/// canonical serialization ascending.
pub fn rank_cmp(a: &Insight, b: &Insight) -> Ordering {
    b.score
        .composite
        .total_cmp(&a.score.composite)
        .then(b.score.significance.total_cmp(&a.score.significance))
        .then_with(|| a.canonical().cmp(&b.canonical()))
}

/// Sorts a pool into ranking order.
pub fn rank(insights: &mut [Insight]) {
    let mut keyed: Vec<(String, Insight)> = insights
        .iter()
        .map(|i| (i.canonical(), i.clone()))
        .collect();
    keyed.sort_by(|(ka, a), (kb, b)| {
        b.score
            .composite
            .total_cmp(&a.score.composite)
            .then(b.score.significance.total_cmp(&a.score.significance))
            .then_with(|| ka.cmp(kb))
    });
    for (slot, (_, i)) in insights.iter_mut().zip(keyed) {
        *slot = i;
    }
}

/// The `k` best insights in ranking order, admitting at most `cap` per
/// topic (topics already counted in `state` use up their allowance).
pub fn top_k(insights: &[Insight], k: usize, cap: usize, state: &FatigueState) -> Vec<Insight> {
    let mut pool = insights.to_vec();
    rank(&mut pool);
    let mut used: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(k.min(pool.len()));
    for i in pool {
        if out.len() == k {
            break;
        }
        let topic = i.topic();
        let n = used
            .entry(topic.clone())
            .or_insert_with(|| state.topic_count(&topic));
        if *n >= cap {
            continue;
        }
        *n += 1;
        out.push(i);
    }
    out
}

/// Importance of a subspace for one indicator: the mean, over its filter
/// dimensions, of its importance among its siblings. The root scores 1.
pub fn subspace_importance(
    subspace: &Subspace,
    indicator: &IndicatorSpec,
    cube: &SubspaceCube,
) -> f64 {
    if subspace.is_root() {
        return 1.0;
    }
    let label = indicator.label();
    let total_of = |s: &Subspace| {
        cube.get(s)
            .and_then(|e| e.aggregates.get(&label))
            .and_then(|a| a.total)
            .unwrap_or(0.0)
    };
    let mut scores = Vec::new();
    for p in subspace.predicates() {
        let Ok(siblings) = sibling_subspaces(subspace, &p.dimension, cube) else {
            continue;
        };
        let mut values = vec![total_of(subspace)];
        values.extend(siblings.iter().map(total_of));
        if values.iter().any(|&v| v < 0.0) {
            scores.push(0.0);
            continue;
        }
        scores.push(importance(&values, 0).unwrap_or(0.0));
    }
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Surprise of a subspace's distribution over `breakdown` relative to its
/// siblings along each filter dimension, averaged over dimensions.
pub fn subspace_surprise(
    subspace: &Subspace,
    indicator: &IndicatorSpec,
    breakdown: &str,
    cube: &SubspaceCube,
) -> f64 {
    let Ok(native) = distribution_of(subspace, indicator, breakdown, cube) else {
        return 0.0;
    };
    let mut per_dim = Vec::new();
    for p in subspace.predicates() {
        let Ok(siblings) = sibling_subspaces(subspace, &p.dimension, cube) else {
            continue;
        };
        let dists: Result<Vec<Vec<f64>>, _> = siblings
            .iter()
            .map(|s| distribution_of(s, indicator, breakdown, cube))
            .collect();
        if let Ok(dists) = dists {
            per_dim.push(surprise(&native, &dists).unwrap_or(0.0));
        }
    }
    if per_dim.is_empty() {
        0.0
    } else {
        per_dim.iter().sum::<f64>() / per_dim.len() as f64
    }
}

/// Fills every score facet of the insights from the cube. Fatigue is left
/// at zero; it applies when rankings are served.
pub fn score_insights(insights: &mut [Insight], cube: &SubspaceCube, weights: &ScoringWeights) {
    let mut imp_cache: HashMap<(String, String), f64> = HashMap::new();
    let mut srp_cache: HashMap<(String, String, String), f64> = HashMap::new();
    for ins in insights.iter_mut() {
        let (imp, srp) = match ins.indicators.first() {
            Some(ind) => {
                let key = (ins.subspace.filter_key(), ind.label());
                let imp = *imp_cache
                    .entry(key.clone())
                    .or_insert_with(|| subspace_importance(&ins.subspace, ind, cube));
                let srp = match ins.breakdowns.first() {
                    Some(b) => *srp_cache
                        .entry((key.0, key.1, b.clone()))
                        .or_insert_with(|| subspace_surprise(&ins.subspace, ind, b, cube)),
                    None => 0.0,
                };
                (imp, srp)
            }
            None => (0.0, 0.0),
        };
        let sig = significance(&ins.details);
        let mut sv = ScoreVector {
            importance: imp,
            significance: sig,
            surprise: srp,
            fatigue_penalty: 0.0,
            interpretability: interpretability(&ins.details, sig),
            composite: 0.0,
        };
        sv.composite = compose(&sv, weights, 1.0);
        ins.score = sv;
    }
}
