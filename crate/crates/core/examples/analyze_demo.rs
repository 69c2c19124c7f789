//! Runs the full offline flow on the bundled demo dataset and prints the
//! story plus stage timings.
//!
//! ```text
//! cargo run --release -p storyline --example analyze_demo [-- <out_dir>]
//! ```

use std::path::{Path, PathBuf};

use storyline::pipeline::{analyze_to_dir, AnalyzeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_sales.json");
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("storyline-demo"));
    let cfg = AnalyzeConfig::load(&config)?;
    let run = analyze_to_dir(&cfg, &out)?;
    println!("{}", std::fs::read_to_string(out.join("story.md"))?);
    let by_type = run
        .pool
        .iter()
        .fold(std::collections::BTreeMap::new(), |mut m, i| {
            *m.entry(i.insight_type.as_str()).or_insert(0usize) += 1;
            m
        });
    println!(
        "subspaces: {}, insights: {}, by type: {by_type:?}",
        run.cube.len(),
        run.pool.len()
    );
    println!("timings: {:?}", run.timings);
    println!("artifacts in {}", out.display());
    Ok(())
}
