//! Insight descriptions and data stories.
//!
//! Descriptions come from deterministic templates or from a chat-completion
//! backend. Remote text is only adopted when it names the right insight type
//! and every number in it matches a value carried by the insight; otherwise
//! the template sentence is used and the fallback is recorded.

pub mod mock;
mod numbers;
mod remote;
mod story;
mod template;

pub use numbers::{extract_numbers, format_number, format_percent, matches_within_tolerance};
pub use remote::{ChatBackend, ChatCompletionClient, ChatMessage};
pub use story::{chart_for, render_story, ChartSpec, DataStory, Mark, StoryFormat};
pub use template::{classify_type, indicator_phrase};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{Insight, InsightType};

#[derive(Debug, Error)]
pub enum NarrativeError {
    #[error("language model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no template for insight type {0}")]
    TemplateMissing(InsightType),
    #[error("cannot build a story from zero insights")]
    EmptyInput,
    #[error("narrative configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NarrativeMode {
    #[default]
    Template,
    Remote,
}

impl std::str::FromStr for NarrativeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "template" => Ok(NarrativeMode::Template),
            "remote" => Ok(NarrativeMode::Remote),
            other => Err(format!(
                "unknown narrative mode `{other}` (expected template or remote)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmBackendConfig {
    pub mode: NarrativeMode,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
}

impl Default for LlmBackendConfig {
    fn default() -> Self {
        LlmBackendConfig {
            mode: NarrativeMode::Template,
            endpoint: None,
            model: None,
            api_key_env: None,
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 200,
        }
    }
}

impl LlmBackendConfig {
    /// Fills endpoint, model and token variable from `LLM_ENDPOINT`,
    /// `LLM_MODEL` and `LLM_API_KEY_ENV` where not already set.
    pub fn with_env(mut self) -> Self {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        self.endpoint = self.endpoint.or_else(|| get("LLM_ENDPOINT"));
        self.model = self.model.or_else(|| get("LLM_MODEL"));
        self.api_key_env = self.api_key_env.or_else(|| get("LLM_API_KEY_ENV"));
        self
    }

    pub fn validate(&self) -> Result<(), NarrativeError> {
        if self.mode == NarrativeMode::Remote && (self.endpoint.is_none() || self.model.is_none()) {
            return Err(NarrativeError::Config(
                "remote mode requires an endpoint and a model".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    Template,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightDescription {
    pub insight_id: String,
    pub text: String,
    pub mentioned_numbers: Vec<f64>,
    pub mentioned_type: Option<InsightType>,
    pub source: DescriptionSource,
    /// Set when remote text failed the faithfulness check.
    pub fallback: bool,
}

impl InsightDescription {
    fn new(insight: &Insight, text: String, source: DescriptionSource, fallback: bool) -> Self {
        InsightDescription {
            insight_id: insight.id.clone(),
            mentioned_numbers: extract_numbers(&text),
            mentioned_type: classify_for(&text, insight),
            text,
            source,
            fallback,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaithfulnessIssue {
    TypeMismatch {
        expected: InsightType,
        found: Option<InsightType>,
    },
    NumberMismatch {
        number: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Faithfulness {
    pub passed: bool,
    pub issues: Vec<FaithfulnessIssue>,
}

fn collect_values(v: &Value, numbers: &mut Vec<f64>, strings: &mut Vec<String>) {
    match v {
        Value::Number(n) => numbers.extend(n.as_f64()),
        Value::String(s) => strings.push(s.clone()),
        Value::Array(a) => a.iter().for_each(|x| collect_values(x, numbers, strings)),
        Value::Object(o) => o.values().for_each(|x| collect_values(x, numbers, strings)),
        _ => {}
    }
}

/// Numbers and strings an insight carries, excluding its id, score and
/// evidence.
fn insight_values(insight: &Insight) -> (Vec<f64>, Vec<String>) {
    let body = serde_json::json!({
        "datamodel": insight.datamodel,
        "subspace": insight.subspace,
        "breakdowns": insight.breakdowns,
        "indicators": insight.indicators,
        "details": insight.details,
    });
    let (mut numbers, mut strings) = (Vec::new(), Vec::new());
    collect_values(&body, &mut numbers, &mut strings);
    (numbers, strings)
}

/// Every number a faithful description may mention.
pub fn allowed_numbers(insight: &Insight) -> Vec<f64> {
    let (mut numbers, strings) = insight_values(insight);
    for s in &strings {
        numbers.extend(extract_numbers(s));
    }
    if let crate::model::Details::Forecast(d) = &insight.details {
        numbers.push(d.horizon as f64);
    }
    numbers
}

/// Type classification that ignores names taken from the data, so a member
/// called "forecast" cannot masquerade as a type keyword.
fn classify_for(text: &str, insight: &Insight) -> Option<InsightType> {
    let (_, mut strings) = insight_values(insight);
    strings.retain(|s| s.len() > 2);
    strings.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut cleaned = text.to_string();
    for s in &strings {
        cleaned = remove_word(&cleaned, s);
    }
    classify_type(&cleaned)
}

/// Removes occurrences of `needle` that are not part of a longer word.
fn remove_word(text: &str, needle: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(needle) {
        let before = rest[..pos].chars().next_back();
        let after = rest[pos + needle.len()..].chars().next();
        let bounded = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
        out.push_str(&rest[..pos]);
        if bounded(before) && bounded(after) {
            out.push(' ');
        } else {
            out.push_str(needle);
        }
        rest = &rest[pos + needle.len()..];
    }
    out.push_str(rest);
    out
}

/// Checks that the description names the insight's type and that every
/// number in it matches a value the insight carries within 1%.
pub fn verify_faithfulness(description: &InsightDescription, insight: &Insight) -> Faithfulness {
    let mut issues = Vec::new();
    if description.mentioned_type != Some(insight.insight_type) {
        issues.push(FaithfulnessIssue::TypeMismatch {
            expected: insight.insight_type,
            found: description.mentioned_type,
        });
    }
    let allowed = allowed_numbers(insight);
    for &n in &description.mentioned_numbers {
        if !allowed.iter().any(|&a| matches_within_tolerance(n, a)) {
            issues.push(FaithfulnessIssue::NumberMismatch { number: n });
        }
    }
    Faithfulness {
        passed: issues.is_empty(),
        issues,
    }
}

const INSTRUCTIONS: &str = "You write one or two sentences for a business report describing a \
single data insight. Use only numbers that appear in the insight JSON or the reference sentence, \
formatted the same way. Name the kind of pattern using the wording of the reference sentence. \
Reply with the sentences only.";

/// Produces descriptions and stories in template or remote mode.
pub struct Narrator {
    backend: Option<Box<dyn ChatBackend>>,
}

impl Narrator {
    pub fn template() -> Self {
        Narrator { backend: None }
    }

    pub fn remote(backend: Box<dyn ChatBackend>) -> Self {
        Narrator {
            backend: Some(backend),
        }
    }

    pub fn from_config(cfg: &LlmBackendConfig) -> Result<Self, NarrativeError> {
        cfg.validate()?;
        match cfg.mode {
            NarrativeMode::Template => Ok(Self::template()),
            NarrativeMode::Remote => Ok(Self::remote(Box::new(ChatCompletionClient::new(cfg)?))),
        }
    }

    pub fn mode(&self) -> NarrativeMode {
        if self.backend.is_some() {
            NarrativeMode::Remote
        } else {
            NarrativeMode::Template
        }
    }

    pub fn describe(&self, insight: &Insight) -> Result<InsightDescription, NarrativeError> {
        let text = template::render(insight);
        let templated =
            InsightDescription::new(insight, text.clone(), DescriptionSource::Template, false);
        let Some(backend) = &self.backend else {
            return Ok(templated);
        };
        let mut body =
            serde_json::to_value(insight).map_err(|e| NarrativeError::Config(e.to_string()))?;
        if let Value::Object(o) = &mut body {
            o.remove("evidence");
            o.remove("score");
        }
        let prompt = format!(
            "Insight JSON:\n{}\n\nReference sentence:\n{}",
            crate::json::to_canonical_string(&body)
                .map_err(|e| NarrativeError::Config(e.to_string()))?,
            text
        );
        let reply =
            backend.complete(&[ChatMessage::system(INSTRUCTIONS), ChatMessage::user(prompt)])?;
        let candidate = InsightDescription::new(
            insight,
            reply.trim().to_string(),
            DescriptionSource::Remote,
            false,
        );
        if !candidate.text.is_empty() && verify_faithfulness(&candidate, insight).passed {
            Ok(candidate)
        } else {
            Ok(InsightDescription {
                fallback: true,
                ..templated
            })
        }
    }

    /// Rewrites a summary remotely; keeps the template summary when the
    /// rewrite mentions numbers that none of the summarized insights carry.
    fn summarize(
        &self,
        template_summary: String,
        top: &[Insight],
    ) -> Result<String, NarrativeError> {
        let Some(backend) = &self.backend else {
            return Ok(template_summary);
        };
        let reply = backend.complete(&[
            ChatMessage::system(
                "Rewrite this report summary as one fluent paragraph. Keep every number exactly as written \
                 and add no new numbers.",
            ),
            ChatMessage::user(template_summary.clone()),
        ])?;
        let mut allowed: Vec<f64> = top.iter().flat_map(allowed_numbers).collect();
        allowed.extend(extract_numbers(&template_summary));
        let ok = !reply.trim().is_empty()
            && extract_numbers(&reply)
                .iter()
                .all(|&n| allowed.iter().any(|&a| matches_within_tolerance(n, a)));
        Ok(if ok {
            reply.trim().to_string()
        } else {
            template_summary
        })
    }

    /// One finding and one chart per insight, in the given order, plus a
    /// summary built from the first three findings.
    pub fn assemble_story(
        &self,
        dataset: &str,
        ranked: &[Insight],
    ) -> Result<DataStory, NarrativeError> {
        if ranked.is_empty() {
            return Err(NarrativeError::EmptyInput);
        }
        let findings = ranked
            .iter()
            .map(|i| self.describe(i))
            .collect::<Result<Vec<_>, _>>()?;
        let lead: Vec<&str> = findings.iter().take(3).map(|f| f.text.as_str()).collect();
        let summary = format!(
            "The analysis of {dataset} surfaced {} ranked insights. Leading findings: {}",
            ranked.len(),
            lead.join(" ")
        );
        let summary = self.summarize(summary, &ranked[..ranked.len().min(3)])?;
        Ok(DataStory {
            dataset: dataset.to_string(),
            summary,
            findings,
            source_insights: ranked.to_vec(),
            charts: ranked.iter().map(chart_for).collect(),
        })
    }
}

/// Describes one insight with a backend built from `cfg`.
pub fn describe_insight(
    insight: &Insight,
    cfg: &LlmBackendConfig,
) -> Result<InsightDescription, NarrativeError> {
    Narrator::from_config(cfg)?.describe(insight)
}

/// Builds a story with a backend built from `cfg`.
pub fn assemble_story(
    dataset: &str,
    ranked: &[Insight],
    cfg: &LlmBackendConfig,
) -> Result<DataStory, NarrativeError> {
    Narrator::from_config(cfg)?.assemble_story(dataset, ranked)
}
