//! Isolation forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DetectError;
use crate::model::ForestDetails;

/// Default score above which a point is reported.
pub const IFOREST_THRESHOLD: f64 = 0.65;

const EULER_GAMMA: f64 = 0.577_215_664_9;

/// Average path length of an unsuccessful search in a binary search tree
/// of `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

/// Tree nodes in a flat arena. Leaves store their full path contribution
/// `depth + c(size)`.
enum Node {
    Leaf {
        path: f64,
    },
    Split {
        attr: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

fn build(
    points: &[Vec<f64>],
    idx: &mut [usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
    arena: &mut Vec<Node>,
) -> usize {
    let leaf = |arena: &mut Vec<Node>, size: usize| {
        arena.push(Node::Leaf {
            path: depth as f64 + average_path_length(size),
        });
        arena.len() - 1
    };
    if depth >= limit || idx.len() <= 1 {
        return leaf(arena, idx.len());
    }
    let dims = points[idx[0]].len();
    let mut spans: Vec<(usize, f64, f64)> = Vec::with_capacity(dims);
    for a in 0..dims {
        let (lo, hi) = idx
            .iter()
            .map(|&i| points[i][a])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
        if hi > lo {
            spans.push((a, lo, hi));
        }
    }
    if spans.is_empty() {
        return leaf(arena, idx.len());
    }
    let (attr, lo, hi) = spans[rng.random_range(0..spans.len())];
    let mut value = rng.random_range(lo..hi);
    if value <= lo {
        value = (lo + hi) / 2.0;
    }
    // stable partition: points below the split first
    let mut below: Vec<usize> = Vec::with_capacity(idx.len());
    let mut above: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in idx.iter() {
        if points[i][attr] < value {
            below.push(i)
        } else {
            above.push(i)
        }
    }
    let split = below.len();
    idx[..split].copy_from_slice(&below);
    idx[split..].copy_from_slice(&above);
    let slot = arena.len();
    arena.push(Node::Split {
        attr,
        value,
        left: 0,
        right: 0,
    });
    let (lhs, rhs) = idx.split_at_mut(split);
    let l = build(points, lhs, depth + 1, limit, rng, arena);
    let r = build(points, rhs, depth + 1, limit, rng, arena);
    arena[slot] = Node::Split {
        attr,
        value,
        left: l,
        right: r,
    };
    slot
}

fn path_length(tree: &[Node], x: &[f64]) -> f64 {
    let mut at = 0;
    loop {
        match tree[at] {
            Node::Leaf { path } => return path,
            Node::Split {
                attr,
                value,
                left,
                right,
            } => at = if x[attr] < value { left } else { right },
        }
    }
}

/// Anomaly score `2^(-E[h(x)]/c(psi))` of every point.
pub fn iforest_scores(
    points: &[Vec<f64>],
    trees: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<f64>, DetectError> {
    if points.len() < 8 {
        return Err(DetectError::TooFewPoints {
            needed: 8,
            got: points.len(),
        });
    }
    if trees == 0 || sample_size < 2 {
        return Err(DetectError::Invalid(
            "need at least one tree and a sample of two".into(),
        ));
    }
    let dims = points[0].len();
    if dims == 0
        || points
            .iter()
            .any(|p| p.len() != dims || p.iter().any(|v| !v.is_finite()))
    {
        return Err(DetectError::Invalid(
            "points must share a positive dimension and be finite".into(),
        ));
    }
    let psi = sample_size.min(points.len());
    let limit = (psi as f64).log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest: Vec<Vec<Node>> = (0..trees)
        .map(|_| {
            let mut idx = sample(&mut rng, points.len(), psi).into_vec();
            let mut arena = Vec::with_capacity(2 * psi);
            build(points, &mut idx, 0, limit, &mut rng, &mut arena);
            arena
        })
        .collect();
    let c = average_path_length(psi);
    Ok(points
        .iter()
        .map(|p| {
            let h: f64 = forest.iter().map(|t| path_length(t, p)).sum::<f64>() / trees as f64;
            2f64.powf(-h / c)
        })
        .collect())
}

/// Points whose isolation score exceeds [`IFOREST_THRESHOLD`].
pub fn detect_outliers_iforest(
    points: &[Vec<f64>],
    trees: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ForestDetails, DetectError> {
    let scores = iforest_scores(points, trees, sample_size, seed)?;
    Ok(flag(&scores, IFOREST_THRESHOLD))
}

pub(crate) fn flag(scores: &[f64], threshold: f64) -> ForestDetails {
    let (indices, anomaly_scores) = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, &s)| (i, s))
        .unzip();
    ForestDetails {
        indices,
        anomaly_scores,
    }
}
