//! Ranking and text-overlap metrics, and a harness that scores produced
//! runs against annotated ground truth.
//!
//! Annotation directory layout, per dataset `<ds>`:
//!
//! * `<ds>.ranking.jsonl`: one `{"id": ..., "rank": ...}` object per line,
//!   ranks a permutation of `1..=n`.
//! * `<ds>.reference*.txt`: zero or more reference stories.
//!
//! Produced directory layout: `<ds>/ranking.jsonl` in the same format,
//! `<ds>/story.txt` and optionally `<ds>/story.json`, as written by
//! [`crate::pipeline::run_analysis`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::narrative::{verify_faithfulness, DataStory};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("rankings cover different item sets")]
    ItemSetMismatch,
    #[error("candidate text is empty")]
    EmptyCandidate,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, EvalError>;

/// Items with ranks forming a bijection onto `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, usize>", into = "BTreeMap<String, usize>")]
pub struct RankAnnotation {
    ranks: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankLine {
    pub id: String,
    pub rank: usize,
}

impl TryFrom<BTreeMap<String, usize>> for RankAnnotation {
    type Error = EvalError;

    fn try_from(ranks: BTreeMap<String, usize>) -> Result<Self> {
        RankAnnotation::new(ranks)
    }
}

impl From<RankAnnotation> for BTreeMap<String, usize> {
    fn from(a: RankAnnotation) -> Self {
        a.ranks
    }
}

impl RankAnnotation {
    pub fn new(ranks: BTreeMap<String, usize>) -> Result<Self> {
        let n = ranks.len();
        let seen: BTreeSet<usize> = ranks.values().copied().collect();
        if seen.len() != n || seen.iter().any(|&r| r == 0 || r > n) {
            return Err(EvalError::Invalid(format!(
                "ranks are not a permutation of 1..={n}"
            )));
        }
        Ok(RankAnnotation { ranks })
    }

    /// Ranks `1..=n` in the given order.
    pub fn from_order<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let mut ranks = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if ranks.insert(id.as_ref().to_string(), i + 1).is_some() {
                return Err(EvalError::Invalid(format!(
                    "duplicate item `{}`",
                    id.as_ref()
                )));
            }
        }
        Ok(RankAnnotation { ranks })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, id: &str) -> Option<usize> {
        self.ranks.get(id).copied()
    }

    /// Item ids from rank 1 upward.
    pub fn order(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self.ranks.iter().map(|(k, &r)| (k.as_str(), r)).collect();
        v.sort_by_key(|&(_, r)| r);
        v.into_iter().map(|(k, _)| k).collect()
    }

    /// Same relative order, restricted to `ids` and re-ranked from 1.
    pub fn restricted_to(&self, ids: &BTreeSet<&str>) -> RankAnnotation {
        let order: Vec<&str> = self
            .order()
            .into_iter()
            .filter(|id| ids.contains(id))
            .collect();
        RankAnnotation::from_order(&order).expect("ids are unique")
    }

    pub fn parse_jsonl(text: &str) -> std::result::Result<Self, String> {
        let mut ranks = BTreeMap::new();
        for (n, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let RankLine { id, rank } =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", n + 1))?;
            if ranks.insert(id.clone(), rank).is_some() {
                return Err(format!("line {}: duplicate item `{id}`", n + 1));
            }
        }
        RankAnnotation::new(ranks).map_err(|e| e.to_string())
    }

    pub fn to_jsonl(&self) -> String {
        self.order()
            .into_iter()
            .map(|id| {
                let line = RankLine {
                    id: id.to_string(),
                    rank: self.ranks[id],
                };
                crate::json::to_canonical_string(&line).expect("rank line serializes") + "\n"
            })
            .collect()
    }
}

/// `Σ |r_i − r̂_i|` over the shared items.
pub fn spearman_footrule(truth: &RankAnnotation, predicted: &RankAnnotation) -> Result<f64> {
    if truth.ranks.len() != predicted.ranks.len() || truth.ranks.keys().ne(predicted.ranks.keys()) {
        return Err(EvalError::ItemSetMismatch);
    }
    Ok(truth
        .ranks
        .iter()
        .map(|(id, &r)| r.abs_diff(predicted.ranks[id]) as f64)
        .sum())
}

/// Footrule divided by the number of items (0 for empty rankings).
pub fn spearman_footrule_normalized(
    truth: &RankAnnotation,
    predicted: &RankAnnotation,
) -> Result<f64> {
    let f = spearman_footrule(truth, predicted)?;
    Ok(if truth.is_empty() {
        0.0
    } else {
        f / truth.len() as f64
    })
}

/// Lowercase alphanumeric runs, with every other non-space character as a
/// token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    m
}

pub const DEFAULT_BLEU_ORDER: usize = 4;

/// Sentence BLEU with uniform weights, clipped n-gram precision and a
/// brevity penalty against the closest reference length (shorter wins
/// ties). Any zero precision yields 0.
pub fn bleu<S: AsRef<str>>(candidate: &[S], references: &[Vec<S>], n_max: usize) -> Result<f64> {
    if n_max == 0 {
        return Err(EvalError::Invalid("n_max must be at least 1".into()));
    }
    if candidate.is_empty() {
        return Err(EvalError::EmptyCandidate);
    }
    if references.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut log_sum = 0.0;
    for n in 1..=n_max {
        let cand = ngram_counts(candidate, n);
        let total: usize = cand.values().sum();
        if total == 0 {
            return Ok(0.0);
        }
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_default();
                *e = (*e).max(c);
            }
        }
        let clipped: usize = cand
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        log_sum += (clipped as f64 / total as f64).ln() / n_max as f64;
    }
    let c = candidate.len();
    let r = references
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("references are nonempty");
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    Ok((bp * log_sum.exp()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    Rouge1,
    RougeL,
}

fn f1(overlap: usize, cand: usize, reference: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Unigram or longest-common-subsequence F1.
pub fn rouge<S: AsRef<str>>(
    candidate: &[S],
    reference: &[S],
    variant: RougeVariant,
) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let overlap = match variant {
        RougeVariant::Rouge1 => {
            let (c, r) = (ngram_counts(candidate, 1), ngram_counts(reference, 1));
            c.iter()
                .map(|(g, &n)| n.min(r.get(g).copied().unwrap_or(0)))
                .sum()
        }
        RougeVariant::RougeL => lcs_len(candidate, reference),
    };
    Ok(f1(overlap, candidate.len(), reference.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub dataset: String,
    /// Number of annotated items compared.
    pub items: usize,
    pub sfd: f64,
    pub sfd_normalized: f64,
    pub references: usize,
    pub bleu: Option<f64>,
    pub rouge1: Option<f64>,
    pub rouge_l: Option<f64>,
    pub faithfulness_pass_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub datasets: Vec<DatasetMetrics>,
    pub mean_sfd: f64,
    pub mean_sfd_normalized: f64,
    pub mean_bleu: Option<f64>,
    pub mean_rouge1: Option<f64>,
    pub mean_rouge_l: Option<f64>,
    pub mean_faithfulness_pass_rate: Option<f64>,
}

fn opt_mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl EvalReport {
    pub fn from_datasets(datasets: Vec<DatasetMetrics>) -> Self {
        let n = datasets.len().max(1) as f64;
        EvalReport {
            mean_sfd: datasets.iter().map(|d| d.sfd).sum::<f64>() / n,
            mean_sfd_normalized: datasets.iter().map(|d| d.sfd_normalized).sum::<f64>() / n,
            mean_bleu: opt_mean(datasets.iter().map(|d| d.bleu)),
            mean_rouge1: opt_mean(datasets.iter().map(|d| d.rouge1)),
            mean_rouge_l: opt_mean(datasets.iter().map(|d| d.rouge_l)),
            mean_faithfulness_pass_rate: opt_mean(
                datasets.iter().map(|d| d.faithfulness_pass_rate),
            ),
            datasets,
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::from(
            "| dataset | items | SFD | SFD/n | BLEU | ROUGE-1 | ROUGE-L | faithfulness |\n\
             |---------|-------|-----|-------|------|---------|---------|--------------|\n",
        );
        for d in &self.datasets {
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {:.4} | {} | {} | {} | {} |",
                d.dataset,
                d.items,
                d.sfd,
                d.sfd_normalized,
                cell(d.bleu),
                cell(d.rouge1),
                cell(d.rouge_l),
                cell(d.faithfulness_pass_rate)
            );
        }
        let _ = writeln!(
            md,
            "| **mean** | | {:.4} | {:.4} | {} | {} | {} | {} |",
            self.mean_sfd,
            self.mean_sfd_normalized,
            cell(self.mean_bleu),
            cell(self.mean_rouge1),
            cell(self.mean_rouge_l),
            cell(self.mean_faithfulness_pass_rate)
        );
        md
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_err(path: &Path, message: impl Into<String>) -> EvalError {
    EvalError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_ranking(path: &Path) -> Result<RankAnnotation> {
    RankAnnotation::parse_jsonl(&read(path)?).map_err(|m| format_err(path, m))
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    out.sort();
    Ok(out)
}

/// Scores one dataset's produced artifacts against its annotations.
pub fn evaluate_dataset(
    dataset: &str,
    truth: &RankAnnotation,
    produced: &Path,
    references: &[String],
) -> Result<DatasetMetrics> {
    let ranking_path = produced.join("ranking.jsonl");
    let predicted_full = read_ranking(&ranking_path)?;
    let annotated: BTreeSet<&str> = truth.ranks.keys().map(String::as_str).collect();
    let predicted = predicted_full.restricted_to(&annotated);
    if predicted.len() != truth.len() {
        return Err(format_err(
            &ranking_path,
            "produced ranking lacks annotated items",
        ));
    }
    let sfd = spearman_footrule(truth, &predicted)?;
    let sfd_normalized = spearman_footrule_normalized(truth, &predicted)?;

    let (mut bleu_v, mut rouge1, mut rouge_l) = (None, None, None);
    if !references.is_empty() {
        let story_path = produced.join("story.txt");
        let candidate = tokenize(&read(&story_path)?);
        let refs: Vec<Vec<String>> = references
            .iter()
            .map(|r| tokenize(r))
            .filter(|r| !r.is_empty())
            .collect();
        if candidate.is_empty() {
            return Err(format_err(&story_path, "story is empty"));
        }
        if refs.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        bleu_v = Some(bleu(&candidate, &refs, DEFAULT_BLEU_ORDER)?);
        let mean_over = |variant| -> Result<f64> {
            let scores = refs
                .iter()
                .map(|r| rouge(&candidate, r, variant))
                .collect::<Result<Vec<_>>>()?;
            Ok(scores.iter().sum::<f64>() / scores.len() as f64)
        };
        rouge1 = Some(mean_over(RougeVariant::Rouge1)?);
        rouge_l = Some(mean_over(RougeVariant::RougeL)?);
    }

    let story_json = produced.join("story.json");
    let faithfulness_pass_rate = if story_json.exists() {
        let story: DataStory = serde_json::from_str(&read(&story_json)?)
            .map_err(|e| format_err(&story_json, e.to_string()))?;
        let by_id: HashMap<&str, _> = story
            .source_insights
            .iter()
            .map(|i| (i.id.as_str(), i))
            .collect();
        let mut checked = 0usize;
        let mut passed = 0usize;
        for f in &story.findings {
            let insight = by_id.get(f.insight_id.as_str()).ok_or_else(|| {
                format_err(
                    &story_json,
                    format!("finding for unknown insight `{}`", f.insight_id),
                )
            })?;
            checked += 1;
            passed += usize::from(verify_faithfulness(f, insight).passed);
        }
        (checked > 0).then(|| passed as f64 / checked as f64)
    } else {
        None
    };

    Ok(DatasetMetrics {
        dataset: dataset.to_string(),
        items: truth.len(),
        sfd,
        sfd_normalized,
        references: references.len(),
        bleu: bleu_v,
        rouge1,
        rouge_l,
        faithfulness_pass_rate,
    })
}

/// Evaluates every dataset that has a `<ds>.ranking.jsonl` annotation.
pub fn evaluate_run(produced_dir: &Path, annotations_dir: &Path) -> Result<EvalReport> {
    let files = list_dir(annotations_dir)?;
    let name_of = |p: &Path| p.file_name().and_then(|n| n.to_str()).map(str::to_string);
    let mut datasets = Vec::new();
    for path in &files {
        let Some(ds) =
            name_of(path).and_then(|n| n.strip_suffix(".ranking.jsonl").map(str::to_string))
        else {
            continue;
        };
        let truth = read_ranking(path)?;
        let prefix = format!("{ds}.reference");
        let references = files
            .iter()
            .filter(|p| name_of(p).is_some_and(|n| n.starts_with(&prefix) && n.ends_with(".txt")))
            .map(|p| read(p))
            .collect::<Result<Vec<_>>>()?;
        datasets.push(evaluate_dataset(
            &ds,
            &truth,
            &produced_dir.join(&ds),
            &references,
        )?);
    }
    if datasets.is_empty() {
        return Err(format_err(
            annotations_dir,
            "no `<dataset>.ranking.jsonl` annotation files",
        ));
    }
    Ok(EvalReport::from_datasets(datasets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(pairs: &[(&str, usize)]) -> RankAnnotation {
        RankAnnotation::new(pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()).unwrap()
    }

    #[test]
    fn footrule_fixtures() {
        let t = ann(&[("A", 1), ("B", 2), ("C", 3)]);
        assert_eq!(spearman_footrule(&t, &t).unwrap(), 0.0);
        assert_eq!(
            spearman_footrule(&t, &ann(&[("A", 2), ("B", 3), ("C", 1)])).unwrap(),
            4.0
        );
        let t4 = RankAnnotation::from_order(&["a", "b", "c", "d"]).unwrap();
        let r4 = RankAnnotation::from_order(&["d", "c", "b", "a"]).unwrap();
        assert_eq!(spearman_footrule(&t4, &r4).unwrap(), 8.0);
        assert_eq!(spearman_footrule_normalized(&t4, &r4).unwrap(), 2.0);
        assert!(matches!(
            spearman_footrule(&t, &t4),
            Err(EvalError::ItemSetMismatch)
        ));
    }

    #[test]
    fn annotation_must_be_permutation() {
        let bad: BTreeMap<String, usize> = [("a".to_string(), 1), ("b".to_string(), 3)].into();
        assert!(RankAnnotation::new(bad).is_err());
        assert!(RankAnnotation::parse_jsonl(
            "{\"id\":\"a\",\"rank\":1}\n{\"id\":\"a\",\"rank\":2}"
        )
        .is_err());
        let a = RankAnnotation::from_order(&["x", "y"]).unwrap();
        assert_eq!(RankAnnotation::parse_jsonl(&a.to_jsonl()).unwrap(), a);
    }

    #[test]
    fn bleu_fixtures() {
        let s = tokenize("the cat sat on the mat");
        assert_eq!(bleu(&s, &[s.clone()], 4).unwrap(), 1.0);
        let c = tokenize("the cat");
        let r = tokenize("the cat sat");
        assert!((bleu(&c, &[r], 2).unwrap() - (-0.5f64).exp()).abs() < 1e-9);
        assert_eq!(bleu(&tokenize("dog"), &[tokenize("cat")], 1).unwrap(), 0.0);
        assert!(matches!(
            bleu::<String>(&[], &[tokenize("x")], 1),
            Err(EvalError::EmptyCandidate)
        ));
    }

    #[test]
    fn bleu_closest_reference_tie_prefers_shorter() {
        // candidate length 3, references of length 2 and 4: shorter wins, no penalty
        let c = tokenize("a b c");
        let refs = vec![tokenize("a b"), tokenize("a b c d")];
        assert_eq!(bleu(&c, &refs, 1).unwrap(), 1.0);
    }

    #[test]
    fn rouge_fixtures() {
        let (a, b) = (tokenize("a b"), tokenize("a c"));
        assert_eq!(rouge(&a, &b, RougeVariant::Rouge1).unwrap(), 0.5);
        assert_eq!(rouge(&a, &a, RougeVariant::RougeL).unwrap(), 1.0);
        assert_eq!(
            rouge(&a, &tokenize("x y"), RougeVariant::Rouge1).unwrap(),
            0.0
        );
        // LCS of "a b c d" and "a c b d" is 3
        let l = rouge(
            &tokenize("a b c d"),
            &tokenize("a c b d"),
            RougeVariant::RougeL,
        )
        .unwrap();
        assert!((l - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(
            tokenize("Sales rose 12%, East."),
            ["sales", "rose", "12", "%", ",", "east", "."]
        );
    }

    #[test]
    fn self_evaluation() {
        let dir = tempfile::tempdir().unwrap();
        let (ann_dir, prod) = (dir.path().join("ann"), dir.path().join("prod"));
        fs::create_dir_all(prod.join("shop")).unwrap();
        fs::create_dir_all(&ann_dir).unwrap();
        let full = RankAnnotation::from_order(&["i1", "i2", "i3", "i4"]).unwrap();
        fs::write(prod.join("shop/ranking.jsonl"), full.to_jsonl()).unwrap();
        fs::write(prod.join("shop/story.txt"), "Sales grew in the East.").unwrap();
        let sub = RankAnnotation::from_order(&["i1", "i3"]).unwrap();
        fs::write(ann_dir.join("shop.ranking.jsonl"), sub.to_jsonl()).unwrap();
        fs::write(
            ann_dir.join("shop.reference.txt"),
            "Sales grew in the East.",
        )
        .unwrap();
        let report = evaluate_run(&prod, &ann_dir).unwrap();
        let d = &report.datasets[0];
        assert_eq!((d.items, d.sfd), (2, 0.0));
        assert_eq!(
            (d.bleu, d.rouge1, d.rouge_l),
            (Some(1.0), Some(1.0), Some(1.0))
        );
        assert!(report.to_markdown().contains("| shop | 2 |"));

        fs::write(ann_dir.join("shop.ranking.jsonl"), "not json").unwrap();
        assert!(matches!(
            evaluate_run(&prod, &ann_dir),
            Err(EvalError::Format { .. })
        ));
    }
}
