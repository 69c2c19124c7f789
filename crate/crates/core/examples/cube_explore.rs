//! Enumerates the filter subspaces of a tiny in-memory table and prints
//! each one with its aggregates.
//!
//! ```text
//! cargo run -p storyline --example cube_explore
//! ```

use storyline::cube::{enumerate_subspaces, EnumerationBudget};
use storyline::{Aggregation, Column, DataTable, IndicatorSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = |v: &[&str]| v.iter().map(|s| Some(s.to_string())).collect::<Vec<_>>();
    let table = DataTable::new(
        "shop",
        vec![
            Column::categorical("region", cat(&["east", "east", "west", "west", "west"])),
            Column::categorical("product", cat(&["desk", "lamp", "desk", "lamp", "lamp"])),
            Column::numerical(
                "sales",
                vec![Some(120.0), Some(40.0), Some(200.0), Some(35.0), None],
            ),
        ],
    )?;
    let indicators = [
        IndicatorSpec::new("sales", Aggregation::Sum),
        IndicatorSpec::new("sales", Aggregation::Mean),
    ];
    let budget = EnumerationBudget {
        max_depth: 2,
        max_cardinality: 10,
        max_subspaces: 1000,
    };
    let cube = enumerate_subspaces(&table, &indicators, &budget)?;
    println!("{} subspaces (truncated: {})", cube.len(), cube.truncated());
    for entry in cube.entries() {
        println!("{:<32} rows={}", entry.subspace.to_string(), entry.rows);
        for (label, agg) in &entry.aggregates {
            println!("    {label:<12} total={:?} by={:?}", agg.total, agg.by);
        }
    }
    Ok(())
}
