//! Subspace enumeration and aggregate precomputation.
//!
//! The cube is built breadth-first over the categorical dimensions: the
//! root subspace first, then every single-filter subspace, then every pair of
//! filters on distinct dimensions, and so on up to `max_depth`. Each entry
//! stores, for every indicator, the ungrouped aggregate and the aggregate
//! grouped by every categorical or time dimension not fixed by a filter.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::aggregate::{accumulate, Accumulator};
use crate::model::{ColumnKind, DataTable, IndicatorSpec, ModelError, Subspace};

#[derive(Debug, Error)]
pub enum CubeError {
    #[error("enumeration budget must allow at least one member and one subspace")]
    BudgetZero,
    #[error("cannot enumerate an empty table")]
    EmptyTable,
    #[error("subspace has no equality filter on `{0}`")]
    NoSuchPredicate(String),
    #[error("subspace `{0}` is not in the cube")]
    UnknownSubspace(String),
    #[error("indicator `{0}` is not in the cube")]
    UnknownIndicator(String),
    #[error("no aggregates grouped by `{0}`")]
    UnknownBreakdown(String),
    #[error("negative aggregate mass; indicator unsuitable for distribution comparison")]
    NegativeMass,
    #[error("cube file error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnumerationBudget {
    /// Maximum number of simultaneous filters.
    pub max_depth: usize,
    /// Dimensions with more members only enumerate their most frequent ones.
    pub max_cardinality: usize,
    /// Hard cap on stored subspaces.
    pub max_subspaces: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_depth: 3,
            max_cardinality: 50,
            max_subspaces: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorAggregates {
    /// Aggregate over the whole subspace; absent when undefined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    /// Breakdown dimension -> member -> aggregate.
    pub by: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeEntry {
    pub subspace: Subspace,
    pub rows: usize,
    /// Keyed by indicator label, e.g. `sum(sales)`.
    pub aggregates: BTreeMap<String, IndicatorAggregates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CubeHeader {
    dataset: String,
    max_depth: usize,
    truncated: bool,
    indicators: Vec<IndicatorSpec>,
    domains: BTreeMap<String, Vec<String>>,
    enumerated: BTreeMap<String, Vec<String>>,
    time_dimensions: Vec<String>,
}

/// Precomputed aggregates for every enumerated subspace.
#[derive(Debug, Clone)]
pub struct SubspaceCube {
    header: CubeHeader,
    entries: Vec<CubeEntry>,
    index: HashMap<String, usize>,
}

impl PartialEq for SubspaceCube {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header && self.entries == other.entries
    }
}

impl SubspaceCube {
    pub fn dataset(&self) -> &str {
        &self.header.dataset
    }

    pub fn max_depth(&self) -> usize {
        self.header.max_depth
    }

    /// True when enumeration stopped at `max_subspaces`.
    pub fn truncated(&self) -> bool {
        self.header.truncated
    }

    pub fn indicators(&self) -> &[IndicatorSpec] {
        &self.header.indicators
    }

    pub fn entries(&self) -> &[CubeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All members of a categorical or time dimension, sorted.
    pub fn domain(&self, dimension: &str) -> Option<&[String]> {
        self.header.domains.get(dimension).map(Vec::as_slice)
    }

    /// Members used as filter operands for an enumerated dimension.
    pub fn enumerated_members(&self, dimension: &str) -> Option<&[String]> {
        self.header.enumerated.get(dimension).map(Vec::as_slice)
    }

    pub fn enumerated_dimensions(&self) -> impl Iterator<Item = &str> {
        self.header.enumerated.keys().map(String::as_str)
    }

    pub fn time_dimensions(&self) -> &[String] {
        &self.header.time_dimensions
    }

    /// Entry for the filter part of `subspace` (its breakdown is ignored).
    pub fn get(&self, subspace: &Subspace) -> Option<&CubeEntry> {
        self.index
            .get(&subspace.filter_key())
            .map(|&i| &self.entries[i])
    }

    pub fn root(&self) -> &CubeEntry {
        &self.entries[0]
    }

    fn from_parts(header: CubeHeader, entries: Vec<CubeEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.subspace.filter_key(), i))
            .collect();
        SubspaceCube {
            header,
            entries,
            index,
        }
    }

    /// Writes a header line followed by one entry per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), CubeError> {
        let line = crate::json::to_canonical_string(&self.header)
            .map_err(|e| CubeError::Format(e.to_string()))?;
        writeln!(out, "{line}")?;
        for e in &self.entries {
            let line = crate::json::to_canonical_string(e)
                .map_err(|e| CubeError::Format(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, CubeError> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| CubeError::Format("empty cube file".into()))??;
        let header: CubeHeader =
            serde_json::from_str(&first).map_err(|e| CubeError::Format(e.to_string()))?;
        let mut entries = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries
                .push(serde_json::from_str(&line).map_err(|e| CubeError::Format(e.to_string()))?);
        }
        if entries
            .first()
            .is_none_or(|e: &CubeEntry| !e.subspace.is_root())
        {
            return Err(CubeError::Format(
                "cube file lacks the root subspace".into(),
            ));
        }
        Ok(Self::from_parts(header, entries))
    }
}

struct DimIndex {
    name: String,
    /// Per row, the position of its member in `members` (None for null).
    codes: Vec<Option<u32>>,
    members: Vec<String>,
}

fn index_dimension(table: &DataTable, name: &str) -> DimIndex {
    let col = table.column(name).expect("dimension exists");
    let keys: Vec<Option<String>> = (0..table.num_rows())
        .map(|r| col.data.group_key(r))
        .collect();
    let mut members: Vec<String> = keys.iter().flatten().cloned().collect();
    members.sort();
    members.dedup();
    let pos: HashMap<&str, u32> = members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i as u32))
        .collect();
    let codes = keys.iter().map(|k| k.as_deref().map(|k| pos[k])).collect();
    DimIndex {
        name: name.to_string(),
        codes,
        members,
    }
}

/// Members kept for enumeration: all of them, or the `cap` most frequent
/// (ties broken lexicographically), returned in sorted order.
fn effective_members(dim: &DimIndex, cap: usize) -> Vec<u32> {
    let mut counts = vec![0usize; dim.members.len()];
    for c in dim.codes.iter().flatten() {
        counts[*c as usize] += 1;
    }
    let mut ids: Vec<u32> = (0..dim.members.len() as u32).collect();
    if ids.len() > cap {
        ids.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
        ids.truncate(cap);
        ids.sort_unstable();
    }
    ids
}

fn aggregate_entry(
    table: &DataTable,
    rows: &[usize],
    indicators: &[IndicatorSpec],
    breakdowns: &[&DimIndex],
) -> BTreeMap<String, IndicatorAggregates> {
    let mut out = BTreeMap::new();
    for ind in indicators {
        let data = &table
            .column(&ind.column)
            .expect("indicator column exists")
            .data;
        let mut total = Accumulator::default();
        total.touch();
        for &r in rows {
            accumulate(&mut total, data, ind.aggregation, r);
        }
        let mut by = BTreeMap::new();
        for dim in breakdowns {
            let mut accs = vec![Accumulator::default(); dim.members.len()];
            for &r in rows {
                if let Some(c) = dim.codes[r] {
                    accumulate(&mut accs[c as usize], data, ind.aggregation, r);
                }
            }
            let groups: BTreeMap<String, f64> = accs
                .iter()
                .enumerate()
                .filter_map(|(i, a)| {
                    a.finish(ind.aggregation)
                        .map(|v| (dim.members[i].clone(), v))
                })
                .collect();
            by.insert(dim.name.clone(), groups);
        }
        out.insert(
            ind.label(),
            IndicatorAggregates {
                total: total.finish(ind.aggregation),
                by,
            },
        );
    }
    out
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Enumerates subspaces breadth-first and precomputes their aggregates.
pub fn enumerate_subspaces(
    table: &DataTable,
    indicators: &[IndicatorSpec],
    budget: &EnumerationBudget,
) -> Result<SubspaceCube, CubeError> {
    if budget.max_cardinality == 0 || budget.max_subspaces == 0 {
        return Err(CubeError::BudgetZero);
    }
    if table.num_rows() == 0 {
        return Err(CubeError::EmptyTable);
    }
    for ind in indicators {
        ind.validate(table)?;
    }

    let categorical: Vec<DimIndex> = table
        .names_of_kind(ColumnKind::Categorical)
        .into_iter()
        .map(|n| index_dimension(table, n))
        .collect();
    let time: Vec<DimIndex> = table
        .names_of_kind(ColumnKind::Time)
        .into_iter()
        .map(|n| index_dimension(table, n))
        .collect();
    let effective: Vec<Vec<u32>> = categorical
        .iter()
        .map(|d| effective_members(d, budget.max_cardinality))
        .collect();
    // rows per (dimension, member code)
    let member_rows: Vec<HashMap<u32, Vec<usize>>> = categorical
        .iter()
        .map(|d| {
            let mut m: HashMap<u32, Vec<usize>> = HashMap::new();
            for (r, c) in d.codes.iter().enumerate() {
                if let Some(c) = c {
                    m.entry(*c).or_default().push(r);
                }
            }
            m
        })
        .collect();

    // in the order the table declares them
    let all_dims: Vec<&DimIndex> = {
        let mut v: Vec<&DimIndex> = categorical.iter().chain(time.iter()).collect();
        v.sort_by_key(|d| table.column_index(&d.name));
        v
    };

    let header = CubeHeader {
        dataset: table.name().to_string(),
        max_depth: budget.max_depth,
        truncated: false,
        indicators: indicators.to_vec(),
        domains: all_dims
            .iter()
            .map(|d| (d.name.clone(), d.members.clone()))
            .collect(),
        enumerated: categorical
            .iter()
            .zip(&effective)
            .map(|(d, ids)| {
                (
                    d.name.clone(),
                    ids.iter().map(|&i| d.members[i as usize].clone()).collect(),
                )
            })
            .collect(),
        time_dimensions: time.iter().map(|d| d.name.clone()).collect(),
    };

    // Frontier item: (dimension indices, member codes, rows)
    type Node = (Vec<usize>, Vec<u32>, Vec<usize>);
    let mut entries = Vec::new();
    let mut truncated = false;
    let all_rows: Vec<usize> = (0..table.num_rows()).collect();
    let make_entry = |dims: &[usize], codes: &[u32], rows: &[usize]| -> CubeEntry {
        let members: Vec<(&str, &str)> = dims
            .iter()
            .zip(codes)
            .map(|(&d, &c)| {
                (
                    categorical[d].name.as_str(),
                    categorical[d].members[c as usize].as_str(),
                )
            })
            .collect();
        let subspace = Subspace::from_members(members).expect("distinct dimensions");
        let breakdowns: Vec<&DimIndex> = all_dims
            .iter()
            .copied()
            .filter(|d| subspace.predicate_on(&d.name).is_none())
            .collect();
        CubeEntry {
            aggregates: aggregate_entry(table, rows, indicators, &breakdowns),
            rows: rows.len(),
            subspace,
        }
    };

    entries.push(make_entry(&[], &[], &all_rows));
    let mut frontier: Vec<Node> = vec![(Vec::new(), Vec::new(), all_rows)];
    'levels: for _depth in 1..=budget.max_depth {
        let mut next: Vec<Node> = Vec::new();
        for (dims, codes, rows) in &frontier {
            let start = dims.last().map_or(0, |&d| d + 1);
            for d in start..categorical.len() {
                for &code in &effective[d] {
                    if entries.len() >= budget.max_subspaces {
                        truncated = true;
                        break 'levels;
                    }
                    let child_rows = member_rows[d]
                        .get(&code)
                        .map_or_else(Vec::new, |m| intersect(rows, m));
                    let mut child_dims = dims.clone();
                    child_dims.push(d);
                    let mut child_codes = codes.clone();
                    child_codes.push(code);
                    entries.push(make_entry(&child_dims, &child_codes, &child_rows));
                    next.push((child_dims, child_codes, child_rows));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let header = CubeHeader {
        truncated,
        ..header
    };
    Ok(SubspaceCube::from_parts(header, entries))
}

/// Enumerated subspaces that differ from `subspace` only in the operand of
/// its equality filter on `along`. The breakdown of `subspace` is kept.
pub fn sibling_subspaces(
    subspace: &Subspace,
    along: &str,
    cube: &SubspaceCube,
) -> Result<Vec<Subspace>, CubeError> {
    let current = subspace
        .predicate_on(along)
        .and_then(|p| p.equals_member())
        .ok_or_else(|| CubeError::NoSuchPredicate(along.to_string()))?;
    let members = cube.enumerated_members(along).unwrap_or_default();
    let mut out = Vec::new();
    for m in members.iter().filter(|m| m.as_str() != current) {
        let candidate = subspace.with_member(along, m)?;
        if cube.get(&candidate).is_some() {
            out.push(candidate);
        }
    }
    Ok(out)
}

/// L1-normalized distribution of an indicator over the full domain of
/// `breakdown`, in sorted member order. Members without an aggregate count
/// as zero; an all-zero vector maps to the uniform distribution.
pub fn distribution_of(
    subspace: &Subspace,
    indicator: &IndicatorSpec,
    breakdown: &str,
    cube: &SubspaceCube,
) -> Result<Vec<f64>, CubeError> {
    let entry = cube
        .get(subspace)
        .ok_or_else(|| CubeError::UnknownSubspace(subspace.to_string()))?;
    let aggs = entry
        .aggregates
        .get(&indicator.label())
        .ok_or_else(|| CubeError::UnknownIndicator(indicator.label()))?;
    let groups = aggs
        .by
        .get(breakdown)
        .ok_or_else(|| CubeError::UnknownBreakdown(breakdown.to_string()))?;
    let domain = cube
        .domain(breakdown)
        .ok_or_else(|| CubeError::UnknownBreakdown(breakdown.to_string()))?;
    normalize(
        domain
            .iter()
            .map(|m| groups.get(m).copied().unwrap_or(0.0))
            .collect(),
    )
}

/// L1 normalization with the zero-sum-to-uniform convention.
pub fn normalize(mass: Vec<f64>) -> Result<Vec<f64>, CubeError> {
    if mass.iter().any(|&v| v < 0.0) {
        return Err(CubeError::NegativeMass);
    }
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        let n = mass.len() as f64;
        return Ok(vec![1.0 / n; mass.len()]);
    }
    Ok(mass.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{aggregate, apply_filter, Column};

    fn two_dims() -> DataTable {
        DataTable::new(
            "t",
            vec![
                Column::categorical("A", vec![Some("a1"), Some("a2"), Some("a1")]),
                Column::categorical("B", vec![Some("b1"), Some("b1"), Some("b1")]),
                Column::numerical("v", vec![Some(1.0), Some(2.0), Some(4.0)]),
            ],
        )
        .unwrap()
    }

    fn keys(cube: &SubspaceCube) -> Vec<String> {
        cube.entries()
            .iter()
            .map(|e| e.subspace.to_string())
            .collect()
    }

    #[test]
    fn product_of_domains() {
        let t = two_dims();
        let budget = EnumerationBudget {
            max_depth: 2,
            ..Default::default()
        };
        let cube = enumerate_subspaces(&t, &[IndicatorSpec::sum("v")], &budget).unwrap();
        // exhaustive product oracle: (|A|+1)(|B|+1) = 3 * 2
        assert_eq!(cube.len(), 3 * 2);
        assert_eq!(
            keys(&cube),
            vec![
                "all data",
                "A=a1",
                "A=a2",
                "B=b1",
                "A=a1, B=b1",
                "A=a2, B=b1"
            ]
        );
        assert!(!cube.truncated());
    }

    #[test]
    fn depth_zero_is_root_only() {
        let budget = EnumerationBudget {
            max_depth: 0,
            ..Default::default()
        };
        let cube = enumerate_subspaces(&two_dims(), &[IndicatorSpec::sum("v")], &budget).unwrap();
        assert_eq!(cube.len(), 1);
        assert!(cube.root().subspace.is_root());
    }

    #[test]
    fn zero_budget_is_rejected() {
        let budget = EnumerationBudget {
            max_subspaces: 0,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_subspaces(&two_dims(), &[], &budget),
            Err(CubeError::BudgetZero)
        ));
    }

    #[test]
    fn truncation_is_recorded() {
        let budget = EnumerationBudget {
            max_depth: 2,
            max_subspaces: 4,
            ..Default::default()
        };
        let cube = enumerate_subspaces(&two_dims(), &[IndicatorSpec::sum("v")], &budget).unwrap();
        assert_eq!(cube.len(), 4);
        assert!(cube.truncated());
    }

    #[test]
    fn high_cardinality_keeps_most_frequent_members() {
        // member i appears (i % 7) + 1 times for 200 members
        let mut cells = Vec::new();
        for i in 0..200 {
            for _ in 0..(i % 7) + 1 {
                cells.push(Some(format!("m{i:03}")));
            }
        }
        let n = cells.len();
        let t = DataTable::new(
            "t",
            vec![
                Column::categorical("d", cells.clone()),
                Column::numerical("v", vec![Some(1.0); n]),
            ],
        )
        .unwrap();
        let budget = EnumerationBudget {
            max_depth: 1,
            max_cardinality: 50,
            ..Default::default()
        };
        let cube = enumerate_subspaces(&t, &[IndicatorSpec::sum("v")], &budget).unwrap();
        // frequency-count oracle
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for c in cells.iter().flatten() {
            *counts.entry(c.clone()).or_default() += 1;
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut expected: Vec<String> = ranked.into_iter().take(50).map(|(m, _)| m).collect();
        expected.sort();
        assert_eq!(cube.enumerated_members("d").unwrap(), expected.as_slice());
        assert_eq!(cube.len(), 51);
        assert_eq!(cube.domain("d").unwrap().len(), 200);
    }

    #[test]
    fn stored_aggregates_match_filtered_aggregation() {
        let t = two_dims();
        let ind = IndicatorSpec::sum("v");
        let budget = EnumerationBudget {
            max_depth: 2,
            ..Default::default()
        };
        let cube = enumerate_subspaces(&t, std::slice::from_ref(&ind), &budget).unwrap();
        for e in cube.entries() {
            let filtered = apply_filter(&t, e.subspace.predicates()).unwrap();
            let agg = &e.aggregates[&ind.label()];
            assert_eq!(
                agg.total,
                aggregate(&filtered, &ind, None)
                    .unwrap()
                    .values()
                    .next()
                    .copied()
            );
            for (dim, groups) in &agg.by {
                assert_eq!(groups, &aggregate(&filtered, &ind, Some(dim)).unwrap());
            }
        }
    }

    #[test]
    fn siblings() {
        let t = DataTable::new(
            "t",
            vec![
                Column::categorical("A", vec![Some("a1"), Some("a2"), Some("a3")]),
                Column::categorical("B", vec![Some("b1"), Some("b1"), Some("b1")]),
            ],
        )
        .unwrap();
        let cube = enumerate_subspaces(&t, &[], &EnumerationBudget::default()).unwrap();
        let s = Subspace::from_members([("A", "a1"), ("B", "b1")]).unwrap();
        let sib = sibling_subspaces(&s, "A", &cube).unwrap();
        assert_eq!(sib.len(), 2);
        assert_eq!(
            sib[0],
            Subspace::from_members([("A", "a2"), ("B", "b1")]).unwrap()
        );
        let s = Subspace::from_members([("A", "a1")]).unwrap();
        assert!(matches!(
            sibling_subspaces(&s, "B", &cube),
            Err(CubeError::NoSuchPredicate(_))
        ));
    }

    #[test]
    fn sibling_of_two_member_domain() {
        let cube = enumerate_subspaces(&two_dims(), &[], &EnumerationBudget::default()).unwrap();
        let s = Subspace::from_members([("A", "a1"), ("B", "b1")]).unwrap();
        assert_eq!(
            sibling_subspaces(&s, "A", &cube).unwrap(),
            vec![Subspace::from_members([("A", "a2"), ("B", "b1")]).unwrap()]
        );
    }

    #[test]
    fn distributions() {
        assert_eq!(normalize(vec![30.0, 70.0]).unwrap(), vec![0.3, 0.7]);
        assert_eq!(normalize(vec![0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(
            normalize(vec![-5.0, 10.0]),
            Err(CubeError::NegativeMass)
        ));

        let t = DataTable::new(
            "t",
            vec![
                Column::categorical("r", vec![Some("a"), Some("a"), Some("b")]),
                Column::numerical("s", vec![Some(10.0), Some(20.0), Some(70.0)]),
            ],
        )
        .unwrap();
        let ind = IndicatorSpec::sum("s");
        let cube = enumerate_subspaces(
            &t,
            std::slice::from_ref(&ind),
            &EnumerationBudget::default(),
        )
        .unwrap();
        let d = distribution_of(&Subspace::root(), &ind, "r", &cube).unwrap();
        assert!((d[0] - 0.3).abs() < 1e-12 && (d[1] - 0.7).abs() < 1e-12);
        // subspace r=a only has mass for member a; b counts as zero
        let d = distribution_of(
            &Subspace::from_members([("r", "a")]).unwrap(),
            &ind,
            "r",
            &cube,
        );
        assert!(matches!(d, Err(CubeError::UnknownBreakdown(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let t = two_dims();
        let cube = enumerate_subspaces(
            &t,
            &[IndicatorSpec::sum("v")],
            &EnumerationBudget::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        cube.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), cube.len() + 1);
        let back = SubspaceCube::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, cube);
        let s = Subspace::from_members([("A", "a2")]).unwrap();
        assert_eq!(back.get(&s).unwrap().rows, 1);
    }
}
