//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Checks run one after another.

#[path = "common/mod.rs"]
mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};
use storyline::agent::{
    apply_feedback, final_score, parse_context, rerank, AgentConfig, EditingContext,
};
use storyline::cube::{enumerate_subspaces, EnumerationBudget};
use storyline::detect::{
    detect_changepoint, detect_outliers_3sigma, detect_seasonality, detect_sr_anomaly,
    iforest_scores, SeriesView,
};
use storyline::eval::{bleu, rouge, spearman_footrule, RankAnnotation, RougeVariant};
use storyline::model::{Direction, DistributionDetails, OutlierPointDetails, TrendDetails};
use storyline::narrative::mock::MockChatServer;
use storyline::narrative::{
    allowed_numbers, extract_numbers, render_story, verify_faithfulness, InsightDescription,
    LlmBackendConfig, NarrativeMode, Narrator, StoryFormat,
};
use storyline::pipeline::{run_analysis, AnalyzeConfig};
use storyline::score::{importance, js_divergence, surprise, top_k, FatigueState, Feedback};
use storyline::{Aggregation, Column, DataTable, Details, IndicatorSpec, Insight, Subspace};
use storyline_server::AppState;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Scoring

/// Average rank counted directly: one plus the number of smaller values
/// plus half the other ties.
fn importance_oracle(v: &[f64], i: usize) -> f64 {
    let total: f64 = v.iter().sum();
    if v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let mean = total / v.len() as f64;
    let less = v.iter().filter(|&&x| x < v[i]).count() as f64;
    let ties = v.iter().filter(|&&x| x == v[i]).count() as f64;
    let rank = 1.0 + less + (ties - 1.0) / 2.0;
    (v[i] - mean).abs() / total * rank / (v.len() + 1) as f64
}

fn check_importance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let n = rng.random_range(1..=50);
        let v: Vec<f64> = if trial % 3 == 0 {
            (0..n).map(|_| rng.random_range(0..6) as f64).collect()
        } else {
            (0..n).map(|_| rng.random_range(0.0..1000.0)).collect()
        };
        if v.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let i = rng.random_range(0..n);
        let got = importance(&v, i).map_err(|e| e.to_string())?;
        let diff = (got - importance_oracle(&v, i)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || {
            format!("vector {v:?} index {i}: diff {diff}")
        })?;
    }
    for n in 1..=50 {
        let c = rng.random_range(0.1..100.0);
        let v = vec![c; n];
        for i in 0..n {
            ensure(importance(&v, i).unwrap() == 0.0, || {
                format!("uniform n={n} not 0")
            })?;
        }
    }
    Ok(format!(
        "1000 vectors, max |diff| {worst:.2e}; uniform vectors score 0"
    ))
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let s: f64 = raw.iter().sum();
    if s == 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        raw.iter().map(|x| x / s).collect()
    }
}

fn check_surprise() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=20);
        let (p, q) = (
            random_distribution(&mut rng, n),
            random_distribution(&mut rng, n),
        );
        let (pq, qp) = (js_divergence(&p, &q), js_divergence(&q, &p));
        ensure((pq - qp).abs() <= 1e-9, || {
            format!("asymmetric: {pq} vs {qp}")
        })?;
        ensure((0.0..=1.0).contains(&pq), || format!("out of bounds: {pq}"))?;
        let s = surprise(&p, &[q.clone()]).map_err(|e| e.to_string())?;
        ensure((s - pq).abs() <= 1e-12, || {
            "surprise differs from single-sibling JS".into()
        })?;
        ensure(js_divergence(&p, &p).abs() <= 1e-12, || "P=Q not 0".into())?;
    }
    for n in 2..=20 {
        let cut = n / 2;
        let p = random_distribution(&mut rng, cut)
            .into_iter()
            .chain(vec![0.0; n - cut])
            .collect::<Vec<_>>();
        let q = vec![0.0; cut]
            .into_iter()
            .chain(random_distribution(&mut rng, n - cut))
            .collect::<Vec<_>>();
        let d = js_divergence(&p, &q);
        ensure((d - 1.0).abs() <= 1e-12, || format!("disjoint n={n}: {d}"))?;
    }
    Ok("10000 pairs symmetric and bounded; P=Q gives 0; disjoint supports give 1".into())
}

// ---------------------------------------------------------------------------
// Enumeration

fn agg_oracle(values: &[Option<i64>], rows: &[usize], agg: Aggregation) -> Option<f64> {
    let xs: Vec<f64> = rows
        .iter()
        .filter_map(|&r| values[r])
        .map(|v| v as f64)
        .collect();
    match agg {
        Aggregation::Sum => Some(xs.iter().sum()),
        Aggregation::Count => Some(xs.len() as f64),
        _ if xs.is_empty() => None,
        Aggregation::Mean => Some(xs.iter().sum::<f64>() / xs.len() as f64),
        Aggregation::Min => xs.iter().copied().reduce(f64::min),
        Aggregation::Max => xs.iter().copied().reduce(f64::max),
    }
}

fn check_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let aggs = [
        Aggregation::Sum,
        Aggregation::Count,
        Aggregation::Mean,
        Aggregation::Min,
        Aggregation::Max,
    ];
    let mut subspaces = 0;
    for schema in 0..100 {
        let dims = rng.random_range(1..=4);
        let rows = rng.random_range(1..=60);
        let codes: Vec<Vec<usize>> = (0..dims)
            .map(|_| {
                let card = rng.random_range(1..=5);
                (0..rows).map(|_| rng.random_range(0..card)).collect()
            })
            .collect();
        let values: Vec<Option<i64>> = (0..rows)
            .map(|_| rng.random_bool(0.9).then(|| rng.random_range(-100..100)))
            .collect();
        let names: Vec<String> = (0..dims).map(|d| format!("d{d}")).collect();
        let mut cols: Vec<Column> = codes
            .iter()
            .zip(&names)
            .map(|(c, n)| {
                Column::categorical(
                    n.as_str(),
                    c.iter().map(|v| Some(format!("v{v}"))).collect(),
                )
            })
            .collect();
        cols.push(Column::numerical(
            "x",
            values.iter().map(|v| v.map(|x| x as f64)).collect(),
        ));
        let table = DataTable::new("t", cols).map_err(|e| e.to_string())?;
        let indicators: Vec<IndicatorSpec> =
            aggs.iter().map(|&a| IndicatorSpec::new("x", a)).collect();
        let budget = EnumerationBudget {
            max_depth: dims,
            max_cardinality: 5,
            max_subspaces: 1_000_000,
        };
        let cube = enumerate_subspaces(&table, &indicators, &budget).map_err(|e| e.to_string())?;

        let domains: Vec<BTreeSet<usize>> =
            codes.iter().map(|c| c.iter().copied().collect()).collect();
        let expected: usize = domains.iter().map(|d| d.len() + 1).product();
        ensure(cube.len() == expected, || {
            format!(
                "schema {schema}: {} subspaces, expected {expected}",
                cube.len()
            )
        })?;

        let mut combos: Vec<Vec<Option<usize>>> = vec![Vec::new()];
        for d in &domains {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    std::iter::once(None)
                        .chain(d.iter().copied().map(Some))
                        .map(move |m| {
                            let mut next = c.clone();
                            next.push(m);
                            next
                        })
                })
                .collect();
        }
        for combo in combos {
            subspaces += 1;
            let members: Vec<(String, String)> = combo
                .iter()
                .enumerate()
                .filter_map(|(d, m)| m.map(|v| (names[d].clone(), format!("v{v}"))))
                .collect();
            let subspace =
                Subspace::from_members(members.iter().map(|(a, b)| (a.as_str(), b.as_str())))
                    .map_err(|e| e.to_string())?;
            let matched: Vec<usize> = (0..rows)
                .filter(|&r| {
                    combo
                        .iter()
                        .enumerate()
                        .all(|(d, m)| m.is_none_or(|v| codes[d][r] == v))
                })
                .collect();
            let entry = cube
                .get(&subspace)
                .ok_or_else(|| format!("missing subspace {subspace}"))?;
            ensure(entry.rows == matched.len(), || {
                format!("{subspace}: row count")
            })?;
            for ind in &indicators {
                let a = &entry.aggregates[&ind.label()];
                ensure(
                    a.total == agg_oracle(&values, &matched, ind.aggregation),
                    || format!("{subspace} {}: total {:?}", ind.label(), a.total),
                )?;
                for (d, m) in combo.iter().enumerate() {
                    if m.is_some() {
                        continue;
                    }
                    let mut want = BTreeMap::new();
                    for member in &domains[d] {
                        let sub: Vec<usize> = matched
                            .iter()
                            .copied()
                            .filter(|&r| codes[d][r] == *member)
                            .collect();
                        if let Some(v) = (!sub.is_empty())
                            .then(|| agg_oracle(&values, &sub, ind.aggregation))
                            .flatten()
                        {
                            want.insert(format!("v{member}"), v);
                        }
                    }
                    ensure(a.by.get(&names[d]) == Some(&want), || {
                        format!("{subspace} {} by {}", ind.label(), names[d])
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "100 schemas, {subspaces} subspaces, 5 aggregations matched exactly"
    ))
}

// ---------------------------------------------------------------------------
// Detectors

/// Welford mean and population variance in a single pass.
fn three_sigma_oracle(v: &[f64]) -> Vec<usize> {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in v {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let sd = (m2 / n).sqrt();
    if sd == 0.0 {
        return Vec::new();
    }
    (0..v.len())
        .filter(|&i| (v[i] - mean).abs() > 3.0 * sd)
        .collect()
}

fn check_three_sigma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut flagged = 0;
    for _ in 0..1000 {
        let n = rng.random_range(4..=200);
        let mut v: Vec<f64> = (0..n)
            .map(|_| 50.0 + 5.0 * normal.sample(&mut rng))
            .collect();
        for _ in 0..rng.random_range(0..3) {
            let i = rng.random_range(0..n);
            v[i] += rng.random_range(-60.0..60.0);
        }
        let got: Vec<usize> = detect_outliers_3sigma(&v)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|o| o.index)
            .collect();
        flagged += got.len();
        let want = three_sigma_oracle(&v);
        ensure(got == want, || {
            format!("series of {n}: {got:?} vs {want:?}")
        })?;
    }
    Ok(format!(
        "1000 series agree with the one-pass oracle ({flagged} flags)"
    ))
}

fn check_sr() -> Outcome {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = 120;
        let mut v: Vec<f64> = (0..n)
            .map(|t| {
                20.0 + 3.0 * (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin()
                    + normal.sample(&mut rng)
            })
            .collect();
        let at = rng.random_range(0..n);
        v[at] += 10.0;
        let found = detect_sr_anomaly(&SeriesView::from_values(v).map_err(|e| e.to_string())?, 3)
            .map_err(|e| e.to_string())?;
        if found.iter().any(|s| s.index == at) {
            hits += 1;
        }
    }
    ensure(hits >= 95, || format!("{hits}/100 spikes flagged"))?;
    Ok(format!("{hits}/100 injected 10-sigma spikes flagged"))
}

fn auc(scores: &[f64], positive: &[bool]) -> f64 {
    let pos: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| !p)
        .map(|(&s, _)| s)
        .collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn check_iforest() -> Outcome {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut aucs = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let mut points: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)])
            .collect();
        let mut labels = vec![false; 500];
        for _ in 0..25 {
            let r = rng.random_range(5.0..10.0);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            points.push(vec![r * a.cos(), r * a.sin()]);
            labels.push(true);
        }
        let scores = iforest_scores(&points, 100, 256, seed).map_err(|e| e.to_string())?;
        aucs.push(auc(&scores, &labels));
    }
    let min = aucs.iter().copied().fold(1.0, f64::min);
    ensure(min >= 0.9, || format!("minimum AUC {min:.3}"))?;
    Ok(format!(
        "AUC over 20 seeds: min {min:.3}, mean {:.3}",
        aucs.iter().sum::<f64>() / 20.0
    ))
}

fn check_seasonality() -> Outcome {
    const NOISE_SD: f64 = 0.25;
    let normal = Normal::new(0.0, NOISE_SD).unwrap();
    let mut report = Vec::new();
    let mut ok = true;
    for period in [4usize, 7, 12] {
        let mut hits = 0;
        for trial in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + 100 * period as u64 + trial);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let v: Vec<f64> = (0..96)
                .map(|t| {
                    10.0 + (std::f64::consts::TAU * t as f64 / period as f64 + phase).sin()
                        + normal.sample(&mut rng)
                })
                .collect();
            let found = detect_seasonality(
                &SeriesView::from_values(v).map_err(|e| e.to_string())?,
                12,
                0.5,
            )
            .map_err(|e| e.to_string())?;
            if found.is_some_and(|s| s.period == period) {
                hits += 1;
            }
        }
        ok &= hits >= 90;
        report.push(format!("period {period}: {hits}/100"));
    }
    let report = report.join(", ");
    ensure(ok, || report.clone())?;
    Ok(format!("{report} (n 96, amplitude 1, noise sd {NOISE_SD})"))
}

fn check_changepoint() -> Outcome {
    let v: Vec<f64> = (0..40)
        .map(|i| if i < 25 { 10.0 } else { 16.0 } + 0.1 * ((i * 7 % 5) as f64 - 2.0))
        .collect();
    let cp = detect_changepoint(&SeriesView::from_values(v).map_err(|e| e.to_string())?, 0.5)
        .map_err(|e| e.to_string())?
        .ok_or("no change point found")?;
    ensure(cp.index == 25, || format!("index {}", cp.index))?;
    Ok("step at index 25 located exactly".into())
}

// ---------------------------------------------------------------------------
// Ranking

fn pool_insight(
    breakdown: usize,
    column: usize,
    kind: usize,
    composite: f64,
    significance: f64,
) -> Insight {
    let details = match kind {
        0 => Details::Distribution(DistributionDetails {
            top_member: "x".into(),
            share: 0.5,
            gini: 0.2,
        }),
        1 => Details::OutlierPoint(OutlierPointDetails {
            index: 1,
            value: 9.0,
            zscore: 3.5,
            label: None,
        }),
        _ => Details::Trend(TrendDetails {
            slope: 1.0,
            intercept: 0.0,
            r2: 0.9,
            direction: Direction::Increasing,
        }),
    };
    let mut i = Insight::new(
        "d",
        Subspace::from_members([(
            "segment",
            ["a", "b", "c", "d", "e", "f"][(composite * 60.0) as usize % 6],
        )])
        .unwrap(),
        vec![["region", "product", "channel"][breakdown].into()],
        vec![IndicatorSpec::new(
            ["sales", "units"][column],
            Aggregation::Sum,
        )],
        details,
        None,
    );
    i.score.composite = composite;
    i.score.significance = significance;
    i
}

fn random_pool(rng: &mut impl Rng, size: usize) -> Vec<Insight> {
    let mut seen = BTreeSet::new();
    (0..size)
        .map(|_| {
            // coarse values force ties on both sort keys
            let comp = rng.random_range(0..8) as f64 / 8.0;
            let sig = rng.random_range(0..3) as f64 / 3.0;
            pool_insight(
                rng.random_range(0..3),
                rng.random_range(0..2),
                rng.random_range(0..3),
                comp,
                sig,
            )
        })
        .filter(|i| seen.insert(i.id.clone()))
        .collect()
}

fn check_top_k() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let size = rng.random_range(0..60);
        let pool = random_pool(&mut rng, size);
        let (k, cap) = (rng.random_range(0..20), rng.random_range(1..4));
        let mut state = FatigueState::default();
        if trial % 2 == 1 {
            if let Some(i) = pool.first() {
                state.topic_counts.insert(i.topic(), rng.random_range(0..3));
            }
        }
        let got = top_k(&pool, k, cap, &state);

        // sorted-key JSON: a round trip through Value orders object keys
        let key = |i: &Insight| serde_json::to_string(&serde_json::to_value(i).unwrap()).unwrap();
        let mut keyed: Vec<(String, &Insight)> = pool.iter().map(|i| (key(i), i)).collect();
        keyed.sort_by(|(ka, a), (kb, b)| {
            b.score
                .composite
                .partial_cmp(&a.score.composite)
                .unwrap()
                .then(
                    b.score
                        .significance
                        .partial_cmp(&a.score.significance)
                        .unwrap(),
                )
                .then_with(|| ka.cmp(kb))
        });
        let mut used: HashMap<String, usize> = HashMap::new();
        let mut want = Vec::new();
        for (_, i) in keyed {
            if want.len() == k {
                break;
            }
            let n = used
                .entry(i.topic())
                .or_insert_with(|| state.topic_count(&i.topic()));
            if *n < cap {
                *n += 1;
                want.push(i.id.clone());
            }
        }
        let got_ids: Vec<String> = got.iter().map(|i| i.id.clone()).collect();
        ensure(got_ids == want, || format!("pool {trial}: order differs"))?;
        for i in &got {
            let before = state.topic_count(&i.topic());
            let emitted = got.iter().filter(|j| j.topic() == i.topic()).count();
            ensure(before + emitted <= cap.max(before), || {
                format!("pool {trial}: cap {cap} exceeded")
            })?;
        }
    }
    Ok("1000 pools match the full-sort prefix (composite, significance, canonical JSON); caps held".into())
}

// ---------------------------------------------------------------------------
// Evaluation metrics

fn ann(order: &[&str]) -> RankAnnotation {
    RankAnnotation::from_order(order).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn check_sfd() -> Outcome {
    let d = |a: &RankAnnotation, b: &RankAnnotation| spearman_footrule(a, b).unwrap();
    ensure(
        d(&ann(&["a", "b", "c", "d"]), &ann(&["a", "b", "c", "d"])) == 0.0,
        || "identity not 0".into(),
    )?;
    // truth A,B,C = 1,2,3; predicted ranks 2,3,1 means order C,A,B
    ensure(
        d(&ann(&["A", "B", "C"]), &ann(&["C", "A", "B"])) == 4.0,
        || "3-item fixture".into(),
    )?;
    ensure(
        d(&ann(&["a", "b", "c", "d"]), &ann(&["d", "c", "b", "a"])) == 8.0,
        || "4-item reversal".into(),
    )?;
    let mut triples = 0usize;
    for n in 1..=6 {
        let perms = permutations(n);
        let anns: Vec<RankAnnotation> = perms
            .iter()
            .map(|p| {
                RankAnnotation::from_order(&p.iter().map(|i| format!("i{i}")).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();
        let m = anns.len();
        let mut dist = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                dist[a][b] = d(&anns[a], &anns[b]);
            }
        }
        let mut max = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                max = max.max(dist[a][b]);
                ensure((dist[a][b] == 0.0) == (a == b), || {
                    format!("n={n}: zero iff identical")
                })?;
                ensure(dist[a][b] == dist[b][a], || format!("n={n}: symmetry"))?;
                for c in 0..m {
                    ensure(dist[a][c] <= dist[a][b] + dist[b][c], || {
                        format!("n={n}: triangle")
                    })?;
                }
                triples += m;
            }
        }
        if n % 2 == 0 {
            ensure(max == (n * n / 2) as f64, || format!("n={n}: max {max}"))?;
        }
    }
    Ok(format!(
        "fixtures 0, 4, 8 exact; axioms over {triples} triples for n <= 6; even-n maximum n^2/2"
    ))
}

fn check_text_metrics() -> Outcome {
    let t = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let id = bleu(
        &t("the cat sat on the mat"),
        &[t("the cat sat on the mat")],
        4,
    )
    .map_err(|e| e.to_string())?;
    ensure(id == 1.0, || format!("identity BLEU {id}"))?;
    let b = bleu(&t("the cat"), &[t("the cat sat")], 2).map_err(|e| e.to_string())?;
    ensure((b - (-0.5f64).exp()).abs() <= 1e-9, || {
        format!("BLEU fixture {b}")
    })?;
    let r = rouge(&t("a b"), &t("a c"), RougeVariant::Rouge1).map_err(|e| e.to_string())?;
    ensure(r == 0.5, || format!("ROUGE-1 fixture {r}"))?;
    Ok(format!(
        "identity 1.0; BLEU-2 fixture {b:.12}; ROUGE-1 fixture {r}"
    ))
}

// ---------------------------------------------------------------------------
// Narrative

fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn check_narrative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let narrator = Narrator::template();
    let ranked: Vec<Insight> = (0..25).map(|_| support::random_insight(&mut rng)).collect();
    let render = || {
        let s = narrator.assemble_story("sales", &ranked).unwrap();
        (
            render_story(&s, StoryFormat::Markdown),
            render_story(&s, StoryFormat::Json),
        )
    };
    ensure(render() == render(), || {
        "template stories differ between runs".into()
    })?;

    let mut faithful = 0;
    for _ in 0..1000 {
        let i = support::random_insight(&mut rng);
        let d = narrator.describe(&i).map_err(|e| e.to_string())?;
        let v = verify_faithfulness(&d, &i);
        ensure(v.passed, || format!("{}: {:?}", d.text, v.issues))?;
        faithful += 1;
    }

    let (mut mutated, mut caught) = (0, 0);
    while mutated < 1000 {
        let i = support::random_insight(&mut rng);
        let d = narrator.describe(&i).map_err(|e| e.to_string())?;
        let Some((text, _)) = support::mutate_number(&d.text, &allowed_numbers(&i), &mut rng)
        else {
            continue;
        };
        let m = InsightDescription {
            mentioned_numbers: extract_numbers(&text),
            text,
            ..d
        };
        mutated += 1;
        if !verify_faithfulness(&m, &i).passed {
            caught += 1;
        }
    }
    ensure(caught == mutated, || {
        format!("{caught}/{mutated} mutations rejected")
    })?;

    let server = MockChatServer::from_fixture(&fixture_path("hallucination.json"))
        .map_err(|e| e.to_string())?;
    let remote = Narrator::from_config(&LlmBackendConfig {
        mode: NarrativeMode::Remote,
        endpoint: Some(server.url()),
        model: Some("mock".into()),
        max_retries: 0,
        ..LlmBackendConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let target = Insight::new(
        "sales",
        Subspace::from_members([("region", "north")]).unwrap(),
        vec!["product".into()],
        vec![IndicatorSpec::new("revenue", Aggregation::Sum)],
        Details::OutlierPoint(OutlierPointDetails {
            index: 2,
            value: 100.0,
            zscore: 4.36,
            label: None,
        }),
        None,
    );
    let d = remote.describe(&target).map_err(|e| e.to_string())?;
    ensure(
        d.fallback && d.text == narrator.describe(&target).unwrap().text,
        || "no template fallback".into(),
    )?;
    Ok(format!(
        "stories byte-identical; {faithful}/1000 template descriptions faithful; {caught}/{mutated} mutations rejected; hallucination fell back"
    ))
}

// ---------------------------------------------------------------------------
// Context loop

fn check_context_loop() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cap = 2;
    for _ in 0..200 {
        let pool = random_pool(&mut rng, 40);
        let cfg = AgentConfig {
            alpha: 0.0,
            k: 8,
            ..AgentConfig::default()
        };
        let ctx = EditingContext {
            draft_text: "region sales grew in the west".into(),
            ..EditingContext::default()
        };
        let got: Vec<String> = rerank(
            &pool,
            &parse_context(&ctx),
            &cfg,
            &FatigueState::default(),
            cap,
        )
        .iter()
        .map(|s| s.insight.id.clone())
        .collect();
        let want: Vec<String> = top_k(&pool, 8, cap, &FatigueState::default())
            .iter()
            .map(|i| i.id.clone())
            .collect();
        ensure(got == want, || {
            "alpha=0 order differs from offline top_k".into()
        })?;
    }

    let matching = pool_insight(0, 0, 0, 0.4, 0.5);
    let other = pool_insight(2, 1, 0, 0.4, 0.5);
    let ctx = EditingContext {
        draft_text: "Region sales by region".into(),
        ..EditingContext::default()
    };
    let cfg = AgentConfig::default();
    let ranked = rerank(
        &[other.clone(), matching.clone()],
        &parse_context(&ctx),
        &cfg,
        &FatigueState::default(),
        3,
    );
    ensure(
        ranked[0].insight.id == matching.id && ranked[0].final_score > ranked[1].final_score,
        || "matching insight does not outrank".into(),
    )?;

    let pool = random_pool(&mut rng, 40);
    let tokens = parse_context(&ctx);
    let rejected = pool[0].clone();
    let before = FatigueState::default();
    let after = apply_feedback(Feedback::Reject, &rejected, &before, 0.8);
    for i in &pool {
        let rel = storyline::agent::relevance(i, &tokens);
        let (b, a) = (
            final_score(i, rel, cfg.alpha, &before, 3),
            final_score(i, rel, cfg.alpha, &after, 3),
        );
        if i.insight_type == rejected.insight_type {
            ensure(a == b * 0.8, || format!("{a} is not 0.8 x {b}"))?;
        } else {
            ensure(a == b, || "other types changed".into())?;
        }
    }

    let isolation = check_session_isolation()?;
    Ok(format!("alpha=0 matches offline order on 200 pools; context match wins ties; reject scales by 0.8 exactly; {isolation}"))
}

fn check_session_isolation() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = common::write_small_dataset(dir.path());
    let state = AppState::new(common::service_config(dir.path())).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    let result = rt.block_on(async move {
        let base = common::spawn(state).await;
        let http = reqwest::Client::new();
        let body: Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
        let summary: Value = http
            .post(format!("{base}/datasets"))
            .json(&body)
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        let dataset = summary["dataset_id"].as_str().unwrap().to_string();
        let baseline: Value = http
            .post(format!("{base}/sessions"))
            .json(&json!({"dataset_id": dataset, "k": 50}))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        let probe = |sid: String| {
            let (http, base) = (http.clone(), base.clone());
            async move {
                let v: Value = http
                    .post(format!("{base}/sessions/{sid}/suggest"))
                    .json(&json!({}))
                    .send()
                    .await
                    .unwrap()
                    .json()
                    .await
                    .unwrap();
                v["suggestions"].as_array().unwrap().clone()
            }
        };
        let reference = probe(baseline["session_id"].as_str().unwrap().to_string()).await;
        let types: Vec<String> = reference
            .iter()
            .map(|s| s["insight"]["type"].as_str().unwrap().to_string())
            .collect();

        let tasks: Vec<_> = (0..50)
            .map(|n| {
                let (http, base, dataset, reference) = (
                    http.clone(),
                    base.clone(),
                    dataset.clone(),
                    reference.clone(),
                );
                tokio::spawn(async move {
                    let created: Value = http
                        .post(format!("{base}/sessions"))
                        .json(&json!({"dataset_id": dataset, "k": 50}))
                        .send()
                        .await
                        .unwrap()
                        .json()
                        .await
                        .unwrap();
                    let sid = created["session_id"].as_str().unwrap().to_string();
                    let target = &reference[n % reference.len()]["insight"];
                    let rounds = 1 + n % 3;
                    let mut last = Value::Null;
                    for _ in 0..rounds {
                        last = http
                            .post(format!("{base}/sessions/{sid}/feedback"))
                            .json(&json!({"insight_id": target["id"], "event": "reject"}))
                            .send()
                            .await
                            .unwrap()
                            .json()
                            .await
                            .unwrap();
                    }
                    let after: Value = http
                        .post(format!("{base}/sessions/{sid}/suggest"))
                        .json(&json!({}))
                        .send()
                        .await
                        .unwrap()
                        .json()
                        .await
                        .unwrap();
                    (
                        n,
                        target["type"].as_str().unwrap().to_string(),
                        rounds,
                        last,
                        after,
                    )
                })
            })
            .collect();
        let mut out = Vec::new();
        for t in tasks {
            out.push(t.await.unwrap());
        }
        (reference, types, out)
    });
    rt.shutdown_background();
    let (reference, _types, results) = result;
    let base_scores: HashMap<String, f64> = reference
        .iter()
        .map(|s| {
            (
                s["insight"]["id"].as_str().unwrap().to_string(),
                s["final_score"].as_f64().unwrap(),
            )
        })
        .collect();
    for (n, kind, rounds, fb, after) in results {
        let weights = fb["fatigue"]["type_weights"]
            .as_object()
            .ok_or("missing weights")?;
        ensure(weights.len() == 1, || {
            format!("session {n}: foreign feedback {weights:?}")
        })?;
        let expected = 0.8f64.powi(rounds as i32);
        let w = weights[&kind].as_f64().unwrap();
        ensure((w - expected).abs() < 1e-12, || {
            format!("session {n}: weight {w} vs {expected}")
        })?;
        for s in after["suggestions"]
            .as_array()
            .ok_or("missing suggestions")?
        {
            let id = s["insight"]["id"].as_str().unwrap();
            let score = s["final_score"].as_f64().unwrap();
            let base = base_scores[id];
            let want = if s["insight"]["type"] == kind.as_str() {
                base * expected
            } else {
                base
            };
            ensure((score - want).abs() < 1e-12, || {
                format!("session {n}: score {score} vs {want}")
            })?;
        }
    }
    Ok("50 concurrent sessions isolated".into())
}

// ---------------------------------------------------------------------------
// End to end

fn check_end_to_end() -> Outcome {
    let cfg = AnalyzeConfig::load(&common::demo_config()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let run = run_analysis(&cfg).map_err(|e| e.to_string())?;
    let md = render_story(&run.story, StoryFormat::Markdown);
    let secs = start.elapsed().as_secs_f64();
    let dims = run
        .table
        .columns()
        .iter()
        .filter(|c| c.kind() != storyline::ColumnKind::Numerical)
        .count();
    ensure(run.table.num_rows() == 10_000 && dims == 5, || {
        format!("{} rows, {dims} dimensions", run.table.num_rows())
    })?;
    ensure(run.pool.len() >= 10, || {
        format!("{} insights", run.pool.len())
    })?;
    for section in [
        "## Summary",
        "## Findings",
        "## Charts",
        "## Source insights",
    ] {
        ensure(md.contains(section), || format!("story lacks {section}"))?;
    }
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "{} insights from {} subspaces in {secs:.2} s; all four story sections present",
        run.pool.len(),
        run.cube.len()
    ))
}

fn main() {
    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("importance matches an independent oracle", check_importance),
        ("surprise symmetry, bounds and extremes", check_surprise),
        (
            "subspace enumeration matches brute force",
            check_enumeration,
        ),
        ("detectors: 3-sigma one-pass oracle", check_three_sigma),
        ("detectors: spectral residual spike recall", check_sr),
        ("detectors: isolation forest AUC", check_iforest),
        ("detectors: seasonality period recovery", check_seasonality),
        ("detectors: change-point index", check_changepoint),
        ("top-k prefix, tie-break and fatigue cap", check_top_k),
        ("footrule fixtures and metric axioms", check_sfd),
        ("BLEU and ROUGE fixtures", check_text_metrics),
        (
            "narrative determinism, faithfulness, fallback",
            check_narrative,
        ),
        (
            "context loop ranking, feedback, isolation",
            check_context_loop,
        ),
        ("end-to-end demo analysis", check_end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
