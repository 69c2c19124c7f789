//! Online re-ranking of a precomputed insight pool against the user's
//! editing context.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{Comparator, Insight};
use crate::narrative::{chart_for, ChartSpec, InsightDescription, Narrator};
use crate::score::{fatigue_penalty, FatigueState, Feedback};

/// What the user is currently writing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EditingContext {
    pub draft_text: String,
    pub cursor_section: Option<String>,
    pub recent_edits: Vec<String>,
    pub profile_tags: Vec<String>,
    pub scenario_prompt: Option<String>,
}

impl EditingContext {
    /// Keeps only the most recent `max_edits` edits.
    pub fn truncate_edits(&mut self, max_edits: usize) {
        let n = self.recent_edits.len();
        if n > max_edits {
            self.recent_edits.drain(..n - max_edits);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Weight of context relevance against the offline composite.
    pub alpha: f64,
    pub decay: f64,
    pub k: usize,
    pub max_edits: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            alpha: 0.5,
            decay: 0.8,
            k: 5,
            max_edits: 20,
        }
    }
}

/// Token counts.
pub type TokenBag = BTreeMap<String, f64>;

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he",
    "her", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me", "more", "most",
    "my", "no", "not", "of", "on", "or", "our", "out", "over", "she", "so", "some", "than", "that",
    "the", "their", "them", "then", "there", "these", "they", "this", "those", "to", "up", "us",
    "was", "we", "were", "what", "when", "which", "while", "who", "why", "will", "with", "would",
    "you", "your",
];

/// Lowercase alphanumeric words with stop-words removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOP_WORDS.contains(&w.as_str()))
        .collect()
}

fn add(bag: &mut TokenBag, text: &str, weight: f64) {
    for t in tokenize(text) {
        *bag.entry(t).or_default() += weight;
    }
}

fn heading_text(line: &str) -> Option<&str> {
    let t = line.trim();
    t.starts_with('#').then(|| t.trim_start_matches('#').trim())
}

/// Weighted tokens of the context: the cursor section of the draft counts
/// three times, recent edits, tags and the scenario prompt twice, the rest
/// of the draft once.
pub fn parse_context(ctx: &EditingContext) -> TokenBag {
    let mut bag = TokenBag::new();
    let cursor = ctx
        .cursor_section
        .as_deref()
        .map(|s| s.trim().to_lowercase());
    let mut in_cursor = false;
    for line in ctx.draft_text.lines() {
        let trimmed = line.trim();
        let is_cursor_heading = cursor.as_deref().is_some_and(|c| {
            trimmed.to_lowercase() == c
                || heading_text(trimmed).is_some_and(|h| h.to_lowercase() == c)
        });
        if is_cursor_heading {
            in_cursor = true;
        } else if heading_text(trimmed).is_some() {
            in_cursor = false;
        }
        add(&mut bag, line, if in_cursor { 3.0 } else { 1.0 });
    }
    for e in &ctx.recent_edits {
        add(&mut bag, e, 2.0);
    }
    for t in &ctx.profile_tags {
        add(&mut bag, t, 2.0);
    }
    if let Some(p) = &ctx.scenario_prompt {
        add(&mut bag, p, 2.0);
    }
    bag
}

/// Tokens describing an insight: breakdowns, indicators, filter members
/// and type name.
pub fn insight_tokens(insight: &Insight) -> TokenBag {
    let mut bag = data_tokens(insight);
    add(&mut bag, insight.insight_type.as_str(), 1.0);
    bag
}

fn data_tokens(insight: &Insight) -> TokenBag {
    let mut bag = TokenBag::new();
    for b in &insight.breakdowns {
        add(&mut bag, b, 1.0);
    }
    for i in &insight.indicators {
        add(&mut bag, &i.column, 1.0);
    }
    for p in insight.subspace.predicates() {
        match &p.comparator {
            Comparator::Equals { value } => add(&mut bag, &value.to_string(), 1.0),
            Comparator::InSet { values } => values
                .iter()
                .for_each(|v| add(&mut bag, &v.to_string(), 1.0)),
            Comparator::TimeRange { .. } => {}
        }
    }
    bag
}

fn normalized(bag: &TokenBag) -> TokenBag {
    let total: f64 = bag.values().sum();
    if total <= 0.0 {
        return TokenBag::new();
    }
    bag.iter().map(|(k, v)| (k.clone(), v / total)).collect()
}

/// Weighted Jaccard similarity `Σ min / Σ max` of two L1-normalized bags.
pub fn weighted_jaccard(a: &TokenBag, b: &TokenBag) -> f64 {
    let (a, b) = (normalized(a), normalized(b));
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
        let (x, y) = (
            a.get(k).copied().unwrap_or(0.0),
            b.get(k).copied().unwrap_or(0.0),
        );
        num += x.min(y);
        den += x.max(y);
    }
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn relevance(insight: &Insight, tokens: &TokenBag) -> f64 {
    weighted_jaccard(&insight_tokens(insight), tokens)
}

/// Fraction of an insight's data tokens (breakdowns, indicators, members)
/// that the context mentions.
pub fn insight_coverage(insight: &Insight, tokens: &TokenBag) -> f64 {
    let own = data_tokens(insight);
    let total: f64 = own.values().sum();
    if total == 0.0 {
        return 0.0;
    }
    own.iter()
        .filter(|(k, _)| tokens.get(*k).is_some_and(|&v| v > 0.0))
        .map(|(_, v)| v)
        .sum::<f64>()
        / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub insight: Insight,
    pub relevance: f64,
    pub final_score: f64,
    pub description: InsightDescription,
    pub chart: ChartSpec,
}

/// Blend of relevance and offline composite, scaled by the type's feedback
/// weight and zeroed for exhausted topics.
pub fn final_score(
    insight: &Insight,
    relevance: f64,
    alpha: f64,
    state: &FatigueState,
    cap: usize,
) -> f64 {
    let blend = alpha * relevance + (1.0 - alpha) * insight.score.composite;
    let gate = 1.0 - fatigue_penalty(insight, state, cap);
    (state.feedback_weight(insight.insight_type) * gate * blend).clamp(0.0, 1.0)
}

/// The `k` best insights for this context, at most `cap` per topic.
pub fn rerank(
    pool: &[Insight],
    tokens: &TokenBag,
    cfg: &AgentConfig,
    state: &FatigueState,
    cap: usize,
) -> Vec<Suggestion> {
    let mut scored: Vec<(f64, f64, String, &Insight)> = pool
        .iter()
        .map(|i| {
            let rel = relevance(i, tokens);
            (
                final_score(i, rel, cfg.alpha, state, cap),
                rel,
                i.canonical(),
                i,
            )
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.3.score.significance.total_cmp(&a.3.score.significance))
            .then_with(|| a.2.cmp(&b.2))
    });
    let narrator = Narrator::template();
    let mut used: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (fs, rel, _, ins) in scored {
        if out.len() == cfg.k {
            break;
        }
        let topic = ins.topic();
        let n = used
            .entry(topic.clone())
            .or_insert_with(|| state.topic_count(&topic));
        if *n >= cap {
            continue;
        }
        *n += 1;
        out.push(Suggestion {
            insight: ins.clone(),
            relevance: rel,
            final_score: fs,
            description: narrator
                .describe(ins)
                .expect("template descriptions are infallible"),
            chart: chart_for(ins),
        });
    }
    out
}

/// Feedback folded into a copy of `state`.
pub fn apply_feedback(
    event: Feedback,
    insight: &Insight,
    state: &FatigueState,
    decay: f64,
) -> FatigueState {
    let mut next = state.clone();
    next.apply_feedback(insight, event, decay);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Aggregation, Details, DistributionDetails, IndicatorSpec, Subspace};
    use crate::score::top_k;

    fn insight(breakdown: &str, column: &str, composite: f64) -> Insight {
        let mut i = Insight::new(
            "d",
            Subspace::root(),
            vec![breakdown.into()],
            vec![IndicatorSpec::new(column, Aggregation::Sum)],
            Details::Distribution(DistributionDetails {
                top_member: "x".into(),
                share: 0.5,
                gini: 0.1,
            }),
            None,
        );
        i.score.composite = composite;
        i
    }

    #[test]
    fn empty_context() {
        assert!(parse_context(&EditingContext::default()).is_empty());
        assert_eq!(
            relevance(&insight("region", "sales", 0.5), &TokenBag::new()),
            0.0
        );
    }

    #[test]
    fn cursor_section_weighting() {
        let ctx = EditingContext {
            draft_text: "Sales by Region".into(),
            cursor_section: Some("Sales by Region".into()),
            ..Default::default()
        };
        let bag = parse_context(&ctx);
        assert_eq!(
            bag,
            TokenBag::from([("region".into(), 3.0), ("sales".into(), 3.0)])
        );
        let ctx = EditingContext {
            draft_text: "# Intro\nhello world\n# Costs\nfreight rose".into(),
            cursor_section: Some("Costs".into()),
            ..Default::default()
        };
        let bag = parse_context(&ctx);
        assert_eq!(bag["hello"], 1.0);
        assert_eq!(bag["freight"], 3.0);
        assert_eq!(bag["costs"], 3.0);
    }

    #[test]
    fn edits_count_twice() {
        let ctx = EditingContext {
            recent_edits: vec!["revenue dipped".into()],
            ..Default::default()
        };
        assert_eq!(
            parse_context(&ctx),
            TokenBag::from([("dipped".into(), 2.0), ("revenue".into(), 2.0)])
        );
    }

    #[test]
    fn full_and_partial_overlap() {
        let i = insight("region", "sales", 0.5);
        let ctx = TokenBag::from([("region".into(), 1.0), ("sales".into(), 1.0)]);
        assert_eq!(insight_coverage(&i, &ctx), 1.0);
        let disjoint = TokenBag::from([("weather".into(), 1.0)]);
        assert_eq!(relevance(&i, &disjoint), 0.0);
        // insight bag {region, sales, distribution} each 1/3; context {region 1/2, weather 1/2}
        let half = TokenBag::from([("region".into(), 1.0), ("weather".into(), 1.0)]);
        let expected = (1.0 / 3.0) / (0.5 + 1.0 / 3.0 + 1.0 / 3.0 + 0.5);
        assert!((relevance(&i, &half) - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_matches_offline_top_k() {
        let pool: Vec<Insight> = (0..8)
            .map(|n| insight(&format!("b{n}"), "v", n as f64 / 10.0))
            .collect();
        let tokens = TokenBag::from([("b3".into(), 1.0)]);
        let cfg = AgentConfig {
            alpha: 0.0,
            k: 5,
            ..Default::default()
        };
        let st = FatigueState::default();
        let got: Vec<String> = rerank(&pool, &tokens, &cfg, &st, 2)
            .into_iter()
            .map(|s| s.insight.id)
            .collect();
        let want: Vec<String> = top_k(&pool, 5, 2, &st).into_iter().map(|i| i.id).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn relevance_breaks_equal_composites() {
        let pool = vec![
            insight("channel", "units", 0.5),
            insight("region", "sales", 0.5),
        ];
        let tokens = TokenBag::from([("region".into(), 1.0), ("sales".into(), 1.0)]);
        let out = rerank(
            &pool,
            &tokens,
            &AgentConfig::default(),
            &FatigueState::default(),
            2,
        );
        assert_eq!(out[0].insight.id, pool[1].id);
        assert!(out[0].final_score > out[1].final_score);
    }

    #[test]
    fn feedback_formula() {
        let i = insight("region", "sales", 0.5);
        let st = FatigueState::default();
        assert!(
            (apply_feedback(Feedback::Reject, &i, &st, 0.8).feedback_weight(i.insight_type) - 0.8)
                .abs()
                < 1e-12
        );
        assert!(
            (apply_feedback(Feedback::Accept, &i, &st, 0.8).feedback_weight(i.insight_type) - 1.25)
                .abs()
                < 1e-12
        );
        let mut high = FatigueState::default();
        high.type_weights.insert(i.insight_type, 1.9);
        assert_eq!(
            apply_feedback(Feedback::Accept, &i, &high, 0.8).feedback_weight(i.insight_type),
            2.0
        );
    }

    #[test]
    fn edit_window() {
        let mut ctx = EditingContext {
            recent_edits: (0..30).map(|i| i.to_string()).collect(),
            ..Default::default()
        };
        ctx.truncate_edits(20);
        assert_eq!(ctx.recent_edits.len(), 20);
        assert_eq!(ctx.recent_edits[0], "10");
    }
}
